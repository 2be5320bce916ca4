"""
Pulsality, tonality and noisiness descriptors.

Tract maps are gated by a tanh sigmoid around the threshold Theta and summed
with energy or unit (area) weights; each descriptor is the log of its gated
fraction of the total.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from app.core.errors import DescriptorError, TextureError, UndefinedCorrelationError
from app.core.texture_defaults import PUBLISHED_INTERCORRELATIONS
from app.models.texture import Cochleagram, CorrelationProfile, DescriptorRow, DescriptorTriple, TextureMaps
from app.schemas.texture import DescriptorConfig, RunConfig, Weighting
from app.services.analysis import pearson
from app.services.signal_io import read_wav
from app.services.texture import signal_texture

logger = logging.getLogger(__name__)

DESCRIPTOR_COLUMNS = ["file", "weighting", "P", "T", "N", "n_valid_cells", "warnings"]

SEGMENT_NOISY = 0
SEGMENT_PULSAL = 1
SEGMENT_TONAL = 2
SEGMENT_BOTH = 3
SEGMENT_INVALID = -1
SEGMENT_NAMES = {SEGMENT_NOISY: "noisy", SEGMENT_PULSAL: "pulsal", SEGMENT_TONAL: "tonal", SEGMENT_BOTH: "both"}


def sigmoid_gate(x: Union[float, np.ndarray], slope: float) -> Union[float, np.ndarray]:
    """sigma(x) = (1 + tanh(2 s x)) / 2; sigma(0) = 0.5, slope s at 0."""
    return (1.0 + np.tanh(2.0 * slope * np.asarray(x, dtype=np.float64))) / 2.0


def _log_fraction(gate: np.ndarray, log_weight: np.ndarray, log_total: float, label: str, warnings: List[str]) -> float:
    """log(sum gate * W) - log(sum W) in natural units; -inf when every gate is exactly 0."""
    open_cells = gate > 0
    if not np.any(open_cells):
        warnings.append(f"{label}: gated sum is zero")
        return -np.inf
    value = logsumexp(log_weight[open_cells] + np.log(gate[open_cells])) - log_total
    return min(float(value), 0.0)


def compute_descriptors(
    maps: TextureMaps,
    cochleagram: Cochleagram,
    config: DescriptorConfig,
    file_id: str = "",
) -> DescriptorTriple:
    """
    File-level P, T, N over cells valid in both tract maps.

    Args:
        maps: Texture maps aligned with the cochleagram
        cochleagram: Source of the linear energy weights (10^(E_dB/10))
        config: Gate threshold/slope, weighting mode and log base
        file_id: Label stored on the result

    Returns:
        DescriptorTriple with values <= 0; -inf marks an empty gated sum

    Raises:
        DescriptorError: No cell is valid in both tract maps
    """
    if maps.shape != cochleagram.log_energy.shape:
        raise DescriptorError(f"maps {maps.shape} and cochleagram {cochleagram.log_energy.shape} differ in shape")
    valid = maps.valid_t_vert & maps.valid_t_horiz
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise DescriptorError(f"{file_id or 'input'}: no cell is valid in both tract maps")

    if config.weighting is Weighting.ENERGY:
        log_weight = cochleagram.log_energy[valid] * (np.log(10.0) / 10.0)
    else:
        log_weight = np.zeros(n_valid)
    log_total = float(logsumexp(log_weight))

    pulse_offset = maps.t_vert[valid] - config.gate_threshold
    tone_offset = maps.t_horiz[valid] - config.gate_threshold
    pulse_gate = sigmoid_gate(pulse_offset, config.gate_slope)
    tone_gate = sigmoid_gate(tone_offset, config.gate_slope)
    noise_gate = sigmoid_gate(-pulse_offset, config.gate_slope) * sigmoid_gate(-tone_offset, config.gate_slope)

    warnings: List[str] = []
    scale = np.log(config.log_base)
    pulsality = _log_fraction(pulse_gate, log_weight, log_total, "P", warnings) / scale
    tonality = _log_fraction(tone_gate, log_weight, log_total, "T", warnings) / scale
    noisiness = _log_fraction(noise_gate, log_weight, log_total, "N", warnings) / scale
    for message in warnings:
        logger.warning(f"{file_id or 'input'} ({config.weighting.value}): {message}")

    return DescriptorTriple(
        pulsality=pulsality,
        tonality=tonality,
        noisiness=noisiness,
        weighting=config.weighting,
        file_id=file_id,
        n_valid_cells=n_valid,
        warnings=tuple(warnings),
    )


def descriptor_row(triple: DescriptorTriple) -> DescriptorRow:
    return DescriptorRow(
        file=triple.file_id,
        weighting=triple.weighting.value,
        P=triple.pulsality,
        T=triple.tonality,
        N=triple.noisiness,
        n_valid_cells=triple.n_valid_cells,
        warnings="; ".join(triple.warnings),
    )


def _describe_file(path: Path, profile: CorrelationProfile, config: RunConfig) -> List[DescriptorRow]:
    modes = config.weighting.modes()
    try:
        signal = read_wav(path)
        cochleagram, maps = signal_texture(signal, profile, config)
        return [
            descriptor_row(compute_descriptors(maps, cochleagram, config.descriptor_config(mode), path.name))
            for mode in modes
        ]
    except TextureError as e:
        logger.error(f"Failed to describe {path.name}: {e}")
        return [
            DescriptorRow(
                file=path.name,
                weighting=mode.value,
                P=np.nan,
                T=np.nan,
                N=np.nan,
                n_valid_cells=0,
                warnings=f"error: {e}",
            )
            for mode in modes
        ]


def batch_descriptors(
    paths: Sequence[Union[str, Path]],
    profile: CorrelationProfile,
    config: RunConfig,
) -> pd.DataFrame:
    """
    Describe many files; one row per file per weighting mode.

    Rows are ordered by file path then weighting. A file that fails yields
    NaN descriptors and an ``error:`` note instead of aborting the batch.
    """
    ordered = sorted(Path(p) for p in paths)
    if not ordered:
        return pd.DataFrame(columns=DESCRIPTOR_COLUMNS)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(lambda p: _describe_file(p, profile, config), ordered))
    else:
        results = [_describe_file(p, profile, config) for p in ordered]

    rows = [row for file_rows in results for row in file_rows]
    logger.info(f"Described {len(ordered)} file(s), {len(rows)} row(s)")
    return pd.DataFrame(rows, columns=DESCRIPTOR_COLUMNS)


def segment_labels(maps: TextureMaps, threshold: float) -> np.ndarray:
    """
    Hard-threshold texture segmentation.

    0 noisy, 1 pulsal (T_| > threshold), 2 tonal (T_- > threshold), 3 both,
    -1 where either tract map is invalid.
    """
    labels = (maps.t_vert > threshold).astype(np.int8) * SEGMENT_PULSAL
    labels += (maps.t_horiz > threshold).astype(np.int8) * SEGMENT_TONAL
    labels[~(maps.valid_t_vert & maps.valid_t_horiz)] = SEGMENT_INVALID
    return labels


def segment_fractions(labels: np.ndarray, cochleagram: Cochleagram, weighting: Weighting) -> Dict[str, float]:
    """Share of valid area (or linear energy) carried by each segment label."""
    valid = labels != SEGMENT_INVALID
    if not np.any(valid):
        return {name: 0.0 for name in SEGMENT_NAMES.values()}
    if weighting is Weighting.ENERGY:
        db = cochleagram.log_energy
        weights = np.power(10.0, (db - db[valid].max()) / 10.0)
    else:
        weights = np.ones(labels.shape)
    total = float(weights[valid].sum())
    return {name: float(weights[labels == code].sum() / total) for code, name in SEGMENT_NAMES.items()}


def descriptor_intercorrelations(table: pd.DataFrame) -> pd.DataFrame:
    """Pearson r between P, T and N within each weighting mode, beside published values."""
    rows = []
    for weighting in sorted(table["weighting"].unique()):
        subset = table[table["weighting"] == weighting]
        published = PUBLISHED_INTERCORRELATIONS.get(weighting, {})
        for first, second in (("P", "T"), ("P", "N"), ("T", "N")):
            try:
                result = pearson(subset[first].to_numpy(dtype=float), subset[second].to_numpy(dtype=float))
                r, n, excluded = result.r, result.n, result.excluded
            except UndefinedCorrelationError as e:
                logger.warning(f"r({first},{second}) for {weighting} weighting undefined: {e}")
                r, n, excluded = np.nan, 0, len(subset)
            rows.append({
                "weighting": weighting,
                "pair": f"{first}-{second}",
                "r": r,
                "n": n,
                "excluded": excluded,
                "published_r": published.get((first, second), np.nan),
            })
    return pd.DataFrame(rows, columns=["weighting", "pair", "r", "n", "excluded", "published_r"])
