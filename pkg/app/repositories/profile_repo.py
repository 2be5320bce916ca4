"""
Calibration profile store: JSON profile plus white-noise reference files.

Layout beside the profile path (e.g. calibration/profile.json):
  profile.json            correlation distances, theta, noise recipe, provenance
  profile.reference.json  reference histograms for o_h, o_v, t_vert, t_horiz
  profile.samples.npz     sparse reference samples of the same features
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from pydantic import ValidationError

from app.core.errors import AudioIOError, ProfileVersionError
from app.core.texture_defaults import PROFILE_SCHEMA_VERSION, TOOL_NAME, TOOL_VERSION
from app.models.texture import CorrelationProfile, FeatureHistogram, ReferenceSet
from app.schemas.texture import ChannelEntry, ProfileDocument

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def reference_paths(profile_path: PathLike) -> Dict[str, Path]:
    path = Path(profile_path)
    stem = path.with_suffix("")
    return {
        "histograms": stem.with_name(f"{stem.name}.reference.json"),
        "samples": stem.with_name(f"{stem.name}.samples.npz"),
    }


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise AudioIOError(f"cannot write {path}: {e}") from e


def _read_json(path: Path, what: str) -> Dict[str, Any]:
    if not path.is_file():
        raise AudioIOError(f"{what} not found at {path}; run `calibrate` first")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ProfileVersionError(f"{path} is not valid JSON: {e}") from e


def save_profile(
    profile: CorrelationProfile,
    path: PathLike,
    provenance: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write a profile as JSON; floats use shortest round-trip repr, missing distances are null."""
    channels = [
        ChannelEntry(
            index=i,
            frequency_hz=profile.channel_frequencies[i],
            eps_t=profile.eps_t[i],
            eps_t_up=profile.eps_t_up[i],
            eps_f=profile.eps_f[i],
            eps_f_up=profile.eps_f_up[i],
        )
        for i in range(profile.n_channels)
    ]
    document = ProfileDocument(
        schema_version=profile.schema_version,
        config_hash=profile.config_hash,
        theta=profile.theta,
        noise_spec=profile.noise_spec,
        duration_s=profile.duration_s,
        channels=channels,
        provenance={
            "tool": TOOL_NAME,
            "version": TOOL_VERSION,
            "profile_id": profile.profile_id,
            **(provenance or {}),
        },
    )
    target = Path(path)
    _write_text(target, json.dumps(document.model_dump(mode="json"), indent=2) + "\n")
    logger.info(f"Saved profile {profile.profile_id} ({profile.n_channels} channels) to {target}")
    return target


def load_profile(path: PathLike, expected_config_hash: Optional[str] = None) -> CorrelationProfile:
    """
    Read a profile written by save_profile.

    Raises:
        AudioIOError: File missing
        ProfileVersionError: Bad schema, unknown schema version or config-hash mismatch
    """
    target = Path(path)
    raw = _read_json(target, "calibration profile")
    try:
        document = ProfileDocument(**raw)
    except (ValidationError, TypeError) as e:
        raise ProfileVersionError(f"{target} does not match the profile schema: {e}") from e

    if document.schema_version != PROFILE_SCHEMA_VERSION:
        raise ProfileVersionError(
            f"{target} has schema version {document.schema_version}, expected {PROFILE_SCHEMA_VERSION}; recalibrate"
        )
    if expected_config_hash is not None and document.config_hash != expected_config_hash:
        raise ProfileVersionError(
            f"{target} was calibrated for config {document.config_hash}, current config is "
            f"{expected_config_hash}; run `calibrate` again"
        )

    channels = document.channels
    return CorrelationProfile(
        channel_frequencies=tuple(c.frequency_hz for c in channels),
        eps_t=tuple(c.eps_t for c in channels),
        eps_t_up=tuple(c.eps_t_up for c in channels),
        eps_f=tuple(c.eps_f for c in channels),
        eps_f_up=tuple(c.eps_f_up for c in channels),
        theta=document.theta,
        config_hash=document.config_hash,
        noise_spec=document.noise_spec,
        duration_s=document.duration_s,
        schema_version=document.schema_version,
    )


def _histogram_to_json(hist: FeatureHistogram) -> Dict[str, Any]:
    return {
        "kind": hist.kind,
        "feature": hist.feature,
        "bin_edges": hist.bin_edges.tolist(),
        "densities": hist.densities.tolist(),
        "sample_count": hist.sample_count,
        "underflow": hist.underflow,
        "overflow": hist.overflow,
    }


def save_reference(
    reference: ReferenceSet,
    profile_path: PathLike,
    provenance: Optional[Dict[str, Any]] = None,
) -> Dict[str, Path]:
    """Reference histograms as JSON (with the same provenance block as the profile) plus samples as npz."""
    paths = reference_paths(profile_path)
    payload = {
        "provenance": {
            "tool": TOOL_NAME,
            "version": TOOL_VERSION,
            "profile_id": reference.profile_id,
            **(provenance or {}),
        },
        "profile_id": reference.profile_id,
        "histograms": {name: _histogram_to_json(h) for name, h in sorted(reference.histograms.items())},
    }
    _write_text(paths["histograms"], json.dumps(payload, indent=2) + "\n")
    try:
        np.savez(paths["samples"], **{name: values for name, values in sorted(reference.samples.items())})
    except OSError as e:
        raise AudioIOError(f"cannot write {paths['samples']}: {e}") from e
    logger.info(f"Saved reference histograms {sorted(reference.histograms)} beside {profile_path}")
    return paths


def load_reference(profile_path: PathLike) -> ReferenceSet:
    paths = reference_paths(profile_path)
    raw = _read_json(paths["histograms"], "reference histograms")
    try:
        histograms = {
            name: FeatureHistogram(
                kind=h["kind"],
                bin_edges=np.array(h["bin_edges"]),
                densities=np.array(h["densities"]),
                sample_count=int(h["sample_count"]),
                underflow=int(h["underflow"]),
                overflow=int(h["overflow"]),
                feature=h.get("feature", name),
            )
            for name, h in raw["histograms"].items()
        }
    except (KeyError, TypeError) as e:
        raise ProfileVersionError(f"{paths['histograms']} does not match the reference schema: {e}") from e

    samples: Dict[str, np.ndarray] = {}
    if paths["samples"].is_file():
        with np.load(paths["samples"]) as archive:
            samples = {name: archive[name] for name in archive.files}
    return ReferenceSet(histograms=histograms, samples=samples, profile_id=raw.get("profile_id", ""))


class ProfileRepository:
    """Profile and reference files bound to one profile path."""

    def __init__(self, profile_path: PathLike):
        self.profile_path = Path(profile_path)

    def exists(self) -> bool:
        return self.profile_path.is_file()

    def save(self, profile: CorrelationProfile, reference: ReferenceSet, provenance: Dict[str, Any]) -> Path:
        save_profile(profile, self.profile_path, provenance)
        save_reference(reference, self.profile_path, provenance)
        return self.profile_path

    def load(self, expected_config_hash: Optional[str] = None) -> CorrelationProfile:
        return load_profile(self.profile_path, expected_config_hash)

    def load_reference(self) -> ReferenceSet:
        return load_reference(self.profile_path)


def get_profile_repo(profile_path: PathLike) -> ProfileRepository:
    return ProfileRepository(profile_path)
