"""Shared fixtures: a small filterbank for fast end-to-end runs, synthetic profiles and maps."""

from pathlib import Path
from typing import Optional

import numpy as np
import pytest

from app.models.texture import Cochleagram, CorrelationProfile, Signal
from app.schemas.texture import FilterbankConfig, OffsetMode, RunConfig
from app.services.signal_io import synthesize_archetype, write_wav
from app.services.texture_engine import get_texture_engine

# 8 channels, 20 ms filters: calibrates in a few seconds of noise.
SMALL_FILTERBANK = {"n_seg": 8, "f_min": 300.0, "f_max": 8000.0, "t_max_s": 0.02}

SMALL_CONFIG_FILE = "N_SEG=8\nF_MIN=300\nF_MAX=8000\nT_MAX_S=0.02\n"


def make_profile(
    n_channels: int,
    eps_t: float = 2.0,
    eps_f: Optional[float] = 1.0,
    config_hash: str = "",
    theta: float = 0.2,
) -> CorrelationProfile:
    """Uniform distances; band-edge frequency distances left out like a real calibration."""
    down = [None] + [eps_f] * (n_channels - 1)
    up = [eps_f] * (n_channels - 1) + [None]
    return CorrelationProfile(
        channel_frequencies=tuple(100.0 * 1.1 ** k for k in range(n_channels)),
        eps_t=(eps_t,) * n_channels,
        eps_t_up=(eps_t,) * n_channels,
        eps_f=tuple(down),
        eps_f_up=tuple(up),
        theta=theta,
        config_hash=config_hash,
    )


def make_cochleagram(values: np.ndarray, warmup: int = 0, frame_rate: float = 441.0) -> Cochleagram:
    values = np.asarray(values, dtype=np.float64)
    return Cochleagram(
        log_energy=values,
        frame_rate=frame_rate,
        channel_frequencies=100.0 * 1.1 ** np.arange(values.shape[1]),
        warmup_frames=warmup,
    )


@pytest.fixture
def small_filterbank() -> FilterbankConfig:
    return FilterbankConfig(**SMALL_FILTERBANK)


@pytest.fixture
def small_config(tmp_path: Path) -> RunConfig:
    return RunConfig(
        filterbank=FilterbankConfig(**SMALL_FILTERBANK),
        profile_path=str(tmp_path / "calibration" / "profile.json"),
        out_dir=str(tmp_path / "output"),
        noise_duration_s=5.0,
    )


@pytest.fixture
def small_profile(small_config: RunConfig) -> CorrelationProfile:
    return make_profile(
        small_config.filterbank.n_seg,
        config_hash=small_config.filterbank.config_hash(),
    )


@pytest.fixture
def noise_signal() -> Signal:
    rng = np.random.default_rng(7)
    return Signal(samples=rng.normal(0.0, 1000.0, 22_050), sample_rate=44_100, source_id="noise.wav")


@pytest.fixture
def sound_dir(tmp_path: Path) -> Path:
    """Two short archetype WAVs."""
    folder = tmp_path / "sounds"
    write_wav(synthesize_archetype("tone", 0.5, 1000.0, amplitude=10_000.0), folder / "b_tone.wav")
    write_wav(synthesize_archetype("click_train", 0.5, 20.0, amplitude=30_000.0), folder / "a_clicks.wav")
    return folder


@pytest.fixture(scope="session")
def calibrated_engine(tmp_path_factory):
    """Default filterbank calibrated on 60 s of noise (minimum accepted duration)."""
    root = tmp_path_factory.mktemp("calibration")
    config = RunConfig(profile_path=str(root / "profile.json"), out_dir=str(root / "output"), workers=2)
    engine = get_texture_engine(config)
    engine.calibrate(duration_s=60.0)
    return engine


@pytest.fixture(scope="session")
def round_engine(tmp_path_factory):
    """Default filterbank, 60 s calibration, surround read at the nearest frame/channel."""
    root = tmp_path_factory.mktemp("calibration_round")
    config = RunConfig(
        profile_path=str(root / "profile.json"),
        out_dir=str(root / "output"),
        offset_mode=OffsetMode.ROUND,
        workers=2,
    )
    engine = get_texture_engine(config)
    engine.calibrate(duration_s=60.0)
    return engine
