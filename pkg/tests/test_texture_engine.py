import json
import logging

import numpy as np
import pandas as pd
import pytest

from app.core.errors import AudioIOError, ProfileVersionError
from app.repositories import export_repo
from app.schemas.texture import FilterbankConfig, RunConfig
from app.services.signal_io import synthesize_archetype, write_wav
from app.services.texture_engine import FEATURES, get_texture_engine
from tests.conftest import SMALL_FILTERBANK


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("engine")
    config = RunConfig(
        filterbank=FilterbankConfig(**SMALL_FILTERBANK),
        profile_path=str(root / "calibration" / "profile.json"),
        out_dir=str(root / "output"),
    )
    engine = get_texture_engine(config)
    profile, reference = engine.calibrate(duration_s=5.0)
    write_wav(synthesize_archetype("tone", 0.5, 1000.0, amplitude=10_000.0), root / "sounds" / "tone.wav")
    write_wav(synthesize_archetype("click_train", 0.5, 20.0, amplitude=30_000.0), root / "sounds" / "clicks.wav")
    return root, engine, profile, reference


def test_calibration_outputs(workspace):
    root, engine, profile, reference = workspace
    assert profile.n_channels == 8
    assert profile.eps_t == profile.eps_t_up
    assert all(eps > 0 for eps in profile.eps_t)
    assert profile.noise_spec.seed == engine.config.seed
    assert profile.duration_s == pytest.approx(5.0, abs=0.01)
    assert set(reference.histograms) == set(FEATURES)
    assert engine.profiles.exists()
    assert (root / "calibration" / "profile.reference.json").is_file()
    provenance = json.loads((root / "calibration" / "profile.reference.json").read_text())["provenance"]
    assert provenance["config_hash"] == engine.config_hash
    assert provenance["seed"] == engine.config.seed
    assert provenance["profile_id"] == profile.profile_id
    assert engine.load_profile() == profile


def test_calibration_is_reproducible(workspace):
    root, engine, profile, _ = workspace
    path = root / "calibration" / "profile.json"
    before = path.read_bytes()
    again, _ = engine.calibrate(duration_s=5.0)
    assert again == profile
    assert path.read_bytes() == before


def test_other_seed_changes_profile(workspace, tmp_path):
    _, engine, profile, _ = workspace
    config = engine.config.model_copy(update={"profile_path": str(tmp_path / "p.json")})
    other, _ = get_texture_engine(config).calibrate(duration_s=5.0, seed=engine.config.seed + 10)
    assert other.noise_spec.seed == engine.config.seed + 10
    assert other.eps_t != profile.eps_t


def test_analyze_writes_maps(workspace):
    root, engine, _, _ = workspace
    out = root / "analysis"
    summary = engine.analyze(root / "sounds" / "tone.wav", out)

    target = out / "tone"
    for name in FEATURES:
        assert (target / f"{name}.csv").is_file()
        assert (target / f"{name}.valid.csv").is_file()
        assert (target / f"{name}.histogram.csv").is_file()
        assert (target / f"{name}.prevalence.csv").is_file()
    values, rate, freqs = export_repo.read_matrix_binary(target / "cochleagram.bin")
    assert values.shape == (summary["n_frames"], 8)
    assert rate == 441.0
    assert freqs.size == 8

    assert summary["file"] == "tone.wav"
    assert set(summary["ks_distance"]) == set(FEATURES)
    assert all(0.0 <= v <= 1.0 for v in summary["ks_distance"].values())
    assert sum(summary["segment_fractions"].values()) == pytest.approx(1.0)
    assert [row["weighting"] for row in summary["descriptors"]] == ["energy", "area"]


def test_describe_directory(workspace):
    root, engine, _, _ = workspace
    out = root / "tables" / "descriptors.csv"
    table = engine.describe(root / "sounds", out)
    assert table["file"].tolist() == ["clicks.wav", "clicks.wav", "tone.wav", "tone.wav"]
    written = export_repo.read_csv(out)
    assert written["file"].tolist() == table["file"].tolist()
    with pytest.raises(AudioIOError):
        engine.describe(root / "nowhere")


def test_theta_difference_is_reported(workspace, caplog):
    _, engine, _, _ = workspace
    config = engine.config.model_copy(update={"theta": 0.3})
    with caplog.at_level(logging.WARNING):
        get_texture_engine(config).load_profile()
    assert "theta=0.3" in caplog.text


def test_filterbank_change_needs_recalibration(workspace):
    _, engine, _, _ = workspace
    changed = engine.config.model_copy(update={"filterbank": FilterbankConfig(**{**SMALL_FILTERBANK, "n_seg": 9})})
    with pytest.raises(ProfileVersionError):
        get_texture_engine(changed).load_profile()


def test_compare_writes_report(workspace, tmp_path):
    _, engine, _, _ = workspace
    ids = [f"s{i}" for i in range(6)]
    mds1 = np.linspace(-1.0, 1.0, 6)
    perceptual = pd.DataFrame({
        "sound_id": ids,
        "category": ["harmonic", "impact", "continuous"] * 2,
        "mds1": mds1,
        "mds2": [0.2, -0.4, 0.1, 0.9, -0.3, 0.5],
        "mds3": [1.0, 0.0, -1.0, 0.5, 0.3, -0.2],
    })
    descriptors = pd.DataFrame({
        "file": [f"{i}.wav" for i in ids],
        "weighting": "energy",
        "P": -mds1,
        "T": mds1 * 2.0,
        "N": [-1.0, -1.2, -0.8, -1.1, -0.9, -1.3],
    })
    grid, intercorrelations = engine.compare(descriptors, perceptual, tmp_path)
    assert len(grid) == 9
    assert len(intercorrelations) == 3
    for name in ("correlations.csv", "intercorrelations.csv", "scatter_energy.csv", "summary.txt"):
        assert (tmp_path / name).is_file()
    assert "energy weighting (6 matched sounds)" in (tmp_path / "summary.txt").read_text()
