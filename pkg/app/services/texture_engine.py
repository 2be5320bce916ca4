"""
Texture Engine
Orchestrates calibration, per-file analysis, batch description and the
perceptual comparison on top of the pipeline services.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from app.core.errors import AudioIOError, InputError
from app.core.texture_defaults import REFERENCE_SAMPLE_STRIDE
from app.models.texture import Cochleagram, CorrelationProfile, ReferenceSet, Signal, TextureMaps
from app.repositories import export_repo
from app.repositories.profile_repo import ProfileRepository, get_profile_repo
from app.schemas.texture import RunConfig, Weighting
from app.services import analysis
from app.services.calibration import estimate_profile
from app.services.descriptors import (
    batch_descriptors,
    compute_descriptors,
    descriptor_intercorrelations,
    descriptor_row,
    segment_fractions,
    segment_labels,
)
from app.services.filterbank import compute_cochleagram
from app.services.signal_io import generate_white_noise, read_wav, write_wav
from app.services.texture import compute_texture, signal_texture

logger = logging.getLogger(__name__)

FEATURES = ("o_h", "o_v", "t_vert", "t_horiz")


def sparse_values(maps: TextureMaps, feature: str, stride: int = REFERENCE_SAMPLE_STRIDE) -> np.ndarray:
    """Valid values of one feature on every stride-th frame."""
    values, valid = maps.feature(feature)
    return values[::stride][valid[::stride]]


def reference_from_maps(maps: TextureMaps, profile_id: str = "") -> ReferenceSet:
    histograms = {
        name: analysis.histogram(maps.valid_values(name), analysis.FEATURE_KINDS[name], feature=name)
        for name in FEATURES
    }
    samples = {name: sparse_values(maps, name) for name in FEATURES}
    return ReferenceSet(histograms=histograms, samples=samples, profile_id=profile_id)


class TextureEngine:
    """
    Pipeline front end shared by the CLI and the HTTP API.
    One instance per resolved RunConfig.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.config_hash = config.filterbank.config_hash()
        self.profiles: ProfileRepository = get_profile_repo(config.profile_path)
        logger.info(f"Texture engine ready (config {self.config_hash}, profile {self.profiles.profile_path})")

    # ------------------------------------------------------------------
    # Calibration
    # ------------------------------------------------------------------

    def calibrate(
        self,
        duration_s: Optional[float] = None,
        seed: Optional[int] = None,
        save_noise: Optional[Union[str, Path]] = None,
    ) -> Tuple[CorrelationProfile, ReferenceSet]:
        """
        Generate white noise, estimate the correlation profile and reference
        histograms, and persist both beside the configured profile path.
        """
        spec = self.config.noise_spec(duration_s, seed)

        logger.info("=== STEP 1: GENERATING WHITE NOISE ===")
        noise = generate_white_noise(spec, self.config.filterbank.sample_rate)
        if save_noise:
            write_wav(noise, save_noise)

        logger.info("=== STEP 2: COMPUTING NOISE COCHLEAGRAM ===")
        cochleagram = compute_cochleagram(noise, self.config.filterbank, workers=self.config.workers)

        logger.info("=== STEP 3: ESTIMATING CORRELATION DISTANCES ===")
        profile = estimate_profile(cochleagram, self.config.theta, noise_spec=spec)

        logger.info("=== STEP 4: BUILDING REFERENCE HISTOGRAMS ===")
        maps = compute_texture(cochleagram, profile, self.config.tract, self.config.offset_mode)
        reference = reference_from_maps(maps, profile.profile_id)
        for name in ("t_vert", "t_horiz"):
            rate = analysis.exceedance_fraction(maps.valid_values(name), self.config.gate_threshold)
            logger.info(f"White-noise {name} above {self.config.gate_threshold} dB: {rate * 100:.1f}%")

        logger.info("=== STEP 5: SAVING PROFILE ===")
        fields = export_repo.provenance(self.config, profile.profile_id, seed=spec.seed)
        self.profiles.save(profile, reference, fields)
        logger.info(f"Calibration complete: profile {profile.profile_id}")
        return profile, reference

    def load_profile(self) -> CorrelationProfile:
        profile = self.profiles.load(expected_config_hash=self.config_hash)
        if not np.isclose(profile.theta, self.config.theta):
            logger.warning(
                f"Profile was calibrated with theta={profile.theta}, run config has theta={self.config.theta}; "
                "the profile value applies"
            )
        return profile

    # ------------------------------------------------------------------
    # Single-file analysis
    # ------------------------------------------------------------------

    def texture(self, signal: Signal, profile: CorrelationProfile) -> Tuple[Cochleagram, TextureMaps]:
        return signal_texture(signal, profile, self.config)

    def describe_signal(self, signal: Signal) -> List[Dict[str, Any]]:
        """Descriptor rows (one per weighting mode) for an in-memory signal."""
        profile = self.load_profile()
        cochleagram, maps = self.texture(signal, profile)
        return [
            descriptor_row(compute_descriptors(maps, cochleagram, self.config.descriptor_config(mode), signal.source_id))
            for mode in self.config.weighting.modes()
        ]

    def analyze(self, source: Union[str, Path, Signal], out_dir: Optional[Union[str, Path]] = None) -> Dict[str, Any]:
        """
        Full per-sound analysis against the white-noise reference.

        Writes the cochleagram, the four feature maps with validity masks,
        histograms and prevalence tables under ``out_dir/<stem>/`` when
        out_dir is given, and returns a summary dict.
        """
        logger.info("=== STEP 1: LOADING PROFILE AND REFERENCE ===")
        profile = self.load_profile()
        reference = self.profiles.load_reference()

        logger.info("=== STEP 2: READING SIGNAL ===")
        signal = source if isinstance(source, Signal) else read_wav(source)
        stem = Path(signal.source_id or "signal").stem

        logger.info("=== STEP 3: COCHLEAGRAM AND TEXTURE MAPS ===")
        cochleagram, maps = self.texture(signal, profile)

        logger.info("=== STEP 4: HISTOGRAMS AND PREVALENCE ===")
        histograms = {}
        reports = {}
        ks = {}
        for name in FEATURES:
            values = maps.valid_values(name)
            if values.size == 0:
                raise InputError(f"{stem}: no valid {name} cells; the file is too short for the profile")
            histograms[name] = analysis.histogram(values, analysis.FEATURE_KINDS[name], feature=name)
            if name not in reference.histograms:
                raise AudioIOError(f"reference histogram for {name} missing; recalibrate")
            reports[name] = analysis.prevalence(histograms[name], reference.histograms[name])
            sparse = sparse_values(maps, name)
            if sparse.size and reference.samples.get(name, np.empty(0)).size:
                ks[name] = analysis.ks_distance(sparse, reference.samples[name])

        labels = segment_labels(maps, self.config.gate_threshold)
        fractions = segment_fractions(labels, cochleagram, Weighting.ENERGY)
        file_id = signal.source_id or stem
        rows = [
            descriptor_row(compute_descriptors(maps, cochleagram, self.config.descriptor_config(mode), file_id))
            for mode in self.config.weighting.modes()
        ]

        if out_dir is not None:
            logger.info("=== STEP 5: WRITING OUTPUTS ===")
            self._write_analysis(Path(out_dir) / stem, profile, cochleagram, maps, histograms, reports, labels, rows)

        summary = {
            "file": file_id,
            "n_frames": cochleagram.n_frames,
            "ks_distance": ks,
            "max_log10_prevalence": {
                name: _finite_max(report.log10_ratio) for name, report in reports.items()
            },
            "segment_fractions": fractions,
            "descriptors": rows,
        }
        logger.info(f"Analysis of {stem} complete: KS {', '.join(f'{k}={v:.3f}' for k, v in ks.items())}")
        return summary

    def _write_analysis(
        self,
        target: Path,
        profile: CorrelationProfile,
        cochleagram: Cochleagram,
        maps: TextureMaps,
        histograms: Dict[str, Any],
        reports: Dict[str, Any],
        labels: np.ndarray,
        rows: List[Dict[str, Any]],
    ) -> None:
        fields = export_repo.provenance(self.config, profile.profile_id, source=cochleagram.source_id)
        freqs = cochleagram.channel_frequencies
        export_repo.write_matrix_csv(cochleagram.log_energy, freqs, target / "cochleagram.csv", fields)
        export_repo.write_matrix_binary(cochleagram.log_energy, cochleagram.frame_rate, freqs, target / "cochleagram.bin")
        for name in FEATURES:
            values, valid = maps.feature(name)
            export_repo.write_matrix_csv(values, freqs, target / f"{name}.csv", fields)
            export_repo.write_matrix_binary(values, cochleagram.frame_rate, freqs, target / f"{name}.bin")
            export_repo.write_matrix_csv(valid.astype(np.int8), freqs, target / f"{name}.valid.csv", fields)
            export_repo.write_histogram(histograms[name], target / f"{name}.histogram.csv", fields)
            export_repo.write_prevalence(reports[name], target / f"{name}.prevalence.csv", fields)
        export_repo.write_matrix_csv(labels, freqs, target / "segments.csv", fields)
        export_repo.write_csv(pd.DataFrame(rows), target / "descriptors.csv", fields)

    # ------------------------------------------------------------------
    # Batch description
    # ------------------------------------------------------------------

    def describe(self, target: Union[str, Path], out: Optional[Union[str, Path]] = None) -> pd.DataFrame:
        """Descriptor table for a WAV file or every *.wav in a directory."""
        logger.info("=== STEP 1: LOADING PROFILE ===")
        profile = self.load_profile()

        logger.info("=== STEP 2: COLLECTING FILES ===")
        path = Path(target)
        if path.is_dir():
            paths = sorted(p for p in path.iterdir() if p.suffix.lower() == ".wav")
        elif path.is_file():
            paths = [path]
        else:
            raise AudioIOError(f"no such file or directory: {path}")
        logger.info(f"{len(paths)} file(s) to describe")

        logger.info("=== STEP 3: COMPUTING DESCRIPTORS ===")
        table = batch_descriptors(paths, profile, self.config)

        if out is not None:
            export_repo.write_csv(table, out, export_repo.provenance(self.config, profile.profile_id))
        return table

    # ------------------------------------------------------------------
    # Perceptual comparison
    # ------------------------------------------------------------------

    def compare(
        self,
        descriptors: Union[str, Path, pd.DataFrame],
        perceptual: Union[str, Path, pd.DataFrame],
        out_dir: Optional[Union[str, Path]] = None,
    ) -> Tuple[pd.DataFrame, pd.DataFrame]:
        """Correlation grid and descriptor intercorrelations; optionally written with scatter tables."""
        logger.info("=== STEP 1: LOADING TABLES ===")
        table = descriptors if isinstance(descriptors, pd.DataFrame) else export_repo.read_csv(descriptors)
        missing = [c for c in ("file", "weighting", "P", "T", "N") if c not in table.columns]
        if missing:
            raise InputError(f"descriptor table lacks columns {missing}")
        perceptual_table = analysis.read_perceptual_table(perceptual)

        logger.info("=== STEP 2: CORRELATING WITH MDS DIMENSIONS ===")
        grid = analysis.correlate_with_mds(table, perceptual_table)
        intercorrelations = descriptor_intercorrelations(table)

        if out_dir is not None:
            logger.info("=== STEP 3: WRITING REPORT ===")
            target = Path(out_dir)
            fields = export_repo.provenance(self.config)
            export_repo.write_csv(grid, target / "correlations.csv", fields)
            export_repo.write_csv(intercorrelations, target / "intercorrelations.csv", fields)
            for weighting in sorted(table["weighting"].unique()):
                scatter = analysis.scatter_table(table, perceptual_table, weighting)
                export_repo.write_csv(scatter, target / f"scatter_{weighting}.csv", fields)
            summary = export_repo.correlation_summary(grid, intercorrelations)
            export_repo.write_text(summary, target / "summary.txt", fields)
        return grid, intercorrelations


def _finite_max(values: np.ndarray) -> Optional[float]:
    finite = values[np.isfinite(values)]
    return float(finite.max()) if finite.size else None


def get_texture_engine(config: RunConfig) -> TextureEngine:
    return TextureEngine(config)
