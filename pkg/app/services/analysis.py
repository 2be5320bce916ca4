"""
Histograms, prevalence ratios against the white-noise reference, Pearson
correlations with perceptual coordinates and KS distances.
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError
from scipy import stats

from app.core.errors import AudioIOError, ConfigError, InputError, UndefinedCorrelationError
from app.core.texture_defaults import CSR_HIST_RANGE, PUBLISHED_MDS_CORRELATIONS, TRACT_HIST_RANGE
from app.models.texture import FeatureHistogram, PrevalenceReport
from app.schemas.texture import PerceptualRowIn

logger = logging.getLogger(__name__)

HISTOGRAM_RANGES = {"csr": CSR_HIST_RANGE, "tract": TRACT_HIST_RANGE}
FEATURE_KINDS = {"o_h": "csr", "o_v": "csr", "t_vert": "tract", "t_horiz": "tract"}
MDS_DIMENSIONS = ("mds1", "mds2", "mds3")
DESCRIPTOR_NAMES = ("P", "T", "N")
PERCEPTUAL_COLUMNS = ["sound_id", "category", *MDS_DIMENSIONS]


class CorrelationResult(NamedTuple):
    r: float
    n: int
    excluded: int


def bin_edges(kind: str) -> np.ndarray:
    """lo + step * k for k = 0..(hi - lo) / step."""
    if kind not in HISTOGRAM_RANGES:
        raise ConfigError(f"unknown histogram kind '{kind}' (expected csr or tract)")
    lo, hi, step = HISTOGRAM_RANGES[kind]
    count = int(round((hi - lo) / step))
    return lo + step * np.arange(count + 1)


def histogram(values: np.ndarray, kind: str, feature: str = "") -> FeatureHistogram:
    """
    Density histogram in percent per dB.

    Samples outside the fixed edges are tallied as underflow/overflow, so the
    in-range area equals 100 times the in-range fraction.
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    values = values[np.isfinite(values)]
    if values.size == 0:
        raise InputError(f"no valid samples for the {feature or kind} histogram")
    edges = bin_edges(kind)
    counts, _ = np.histogram(values, bins=edges)
    densities = counts / (values.size * np.diff(edges)) * 100.0
    return FeatureHistogram(
        kind=kind,
        bin_edges=edges,
        densities=densities,
        sample_count=int(values.size),
        underflow=int(np.sum(values < edges[0])),
        overflow=int(np.sum(values > edges[-1])),
        feature=feature,
    )


def prevalence(sound_hist: FeatureHistogram, reference_hist: FeatureHistogram) -> PrevalenceReport:
    """
    Per-bin log10(sound / reference).

    Bins with zero reference density are undefined (NaN). Bins with zero
    sound density and a populated reference are -inf.
    """
    if not np.array_equal(sound_hist.bin_edges, reference_hist.bin_edges):
        raise InputError("histograms have different bin edges")
    sound, reference = sound_hist.densities, reference_hist.densities
    defined = reference > 0
    ratio = np.full(sound.shape, np.nan)
    with np.errstate(divide="ignore"):
        ratio[defined] = np.log10(sound[defined] / reference[defined])
    return PrevalenceReport(
        bin_edges=sound_hist.bin_edges,
        log10_ratio=ratio,
        defined=defined,
        feature=sound_hist.feature,
    )


def prevalence_crossing(report: PrevalenceReport, level: float = 2.0) -> Optional[float]:
    """
    Lower edge of the lowest bin from which every defined bin upwards has a
    log10 ratio >= level; None if the top defined bin is already below it.
    """
    crossing = None
    for index in range(report.log10_ratio.size - 1, -1, -1):
        if not report.defined[index]:
            continue
        if report.log10_ratio[index] >= level:
            crossing = float(report.bin_edges[index])
        else:
            break
    return crossing


def exceedance_fraction(values: np.ndarray, threshold: float) -> float:
    """Share of values above threshold (false-alarm rate of a gate on white noise)."""
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if values.size == 0:
        raise InputError("no values to test against the threshold")
    return float(np.mean(values > threshold))


def pearson(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """
    Product-moment correlation over rows where both values are finite.

    Rows with -inf sentinels or NaN error markers are excluded pairwise and counted.
    """
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape:
        raise InputError(f"length mismatch: {x.size} vs {y.size}")
    keep = np.isfinite(x) & np.isfinite(y)
    x, y = x[keep], y[keep]
    excluded = int(keep.size - keep.sum())
    if x.size < 3:
        raise UndefinedCorrelationError(f"{x.size} usable rows, at least 3 required")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise UndefinedCorrelationError("zero variance; correlation undefined")
    r = float(stats.pearsonr(x, y)[0])
    return CorrelationResult(r=max(-1.0, min(1.0, r)), n=int(x.size), excluded=excluded)


def ks_distance(sample_a: np.ndarray, sample_b: np.ndarray, stride: int = 1) -> float:
    """Two-sample KS statistic on every stride-th value; no p-value."""
    if stride < 1:
        raise ConfigError(f"stride must be >= 1, got {stride}")
    a = np.asarray(sample_a, dtype=np.float64).reshape(-1)[::stride]
    b = np.asarray(sample_b, dtype=np.float64).reshape(-1)[::stride]
    if a.size == 0 or b.size == 0:
        raise InputError("empty sample after striding")
    return float(stats.ks_2samp(a, b).statistic)


def read_perceptual_table(source: Union[str, Path, pd.DataFrame]) -> pd.DataFrame:
    """
    Load and validate a perceptual CSV (sound_id,category,mds1,mds2,mds3).

    Categories must be harmonic, impact or continuous; sound_ids unique.
    """
    if isinstance(source, pd.DataFrame):
        frame = source.copy()
    else:
        path = Path(source)
        if not path.is_file():
            raise AudioIOError(f"perceptual table not found: {path}")
        frame = pd.read_csv(path, comment="#", dtype={"sound_id": str, "category": str})

    missing = [c for c in PERCEPTUAL_COLUMNS if c not in frame.columns]
    if missing:
        raise InputError(f"perceptual table lacks columns {missing}")
    try:
        rows = [PerceptualRowIn(**record).model_dump() for record in frame[PERCEPTUAL_COLUMNS].to_dict("records")]
    except ValidationError as e:
        raise InputError(f"invalid perceptual row: {e}") from e

    table = pd.DataFrame(rows, columns=PERCEPTUAL_COLUMNS)
    duplicated = table["sound_id"][table["sound_id"].duplicated()].tolist()
    if duplicated:
        raise InputError(f"duplicate sound_ids in perceptual table: {duplicated[:5]}")
    return table


def _sound_key(file_name: str) -> str:
    return Path(str(file_name)).stem


def correlate_with_mds(descriptor_table: pd.DataFrame, perceptual: pd.DataFrame) -> pd.DataFrame:
    """
    Correlate P/T/N (per weighting) with MDS1-3.

    Descriptor files are matched to sound_ids by file stem. Returns one row
    per (weighting, descriptor, dimension) with r, |r|, counts and the
    published reference value.
    """
    perceptual = read_perceptual_table(perceptual)
    descriptors = descriptor_table.copy()
    descriptors["sound_id"] = descriptors["file"].map(_sound_key)

    rows: List[Dict] = []
    for weighting in sorted(descriptors["weighting"].unique()):
        subset = descriptors[descriptors["weighting"] == weighting]
        merged = subset.merge(perceptual, on="sound_id", how="inner")
        if len(merged) < 3:
            raise InputError(
                f"{len(merged)} descriptor rows ({weighting}) match the perceptual table; at least 3 required"
            )
        published = PUBLISHED_MDS_CORRELATIONS.get(weighting, {})
        for name in DESCRIPTOR_NAMES:
            for dimension in MDS_DIMENSIONS:
                result = pearson(merged[name].to_numpy(dtype=float), merged[dimension].to_numpy(dtype=float))
                rows.append({
                    "weighting": weighting,
                    "descriptor": name,
                    "dimension": dimension,
                    "r": result.r,
                    "abs_r": abs(result.r),
                    "n": result.n,
                    "excluded": result.excluded,
                    "matched": len(merged),
                    "published_r": published.get(name, {}).get(dimension, math.nan),
                })
        logger.info(f"Correlated {len(merged)} sounds ({weighting} weighting) with MDS dimensions")

    return pd.DataFrame(rows)


def scatter_table(descriptor_table: pd.DataFrame, perceptual: pd.DataFrame, weighting: str) -> pd.DataFrame:
    """
    Axis pairs for descriptor scatter plots with pulsality reversed:
    (-P, T), (N, T) and (N, -P), labelled by category.
    """
    perceptual = read_perceptual_table(perceptual)
    subset = descriptor_table[descriptor_table["weighting"] == weighting].copy()
    subset["sound_id"] = subset["file"].map(_sound_key)
    merged = subset.merge(perceptual[["sound_id", "category"]], on="sound_id", how="inner")
    return pd.DataFrame({
        "sound_id": merged["sound_id"],
        "category": merged["category"],
        "neg_P": -merged["P"],
        "T": merged["T"],
        "N": merged["N"],
    })
