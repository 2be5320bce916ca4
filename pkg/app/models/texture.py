"""
Domain types for the texture pipeline.

Array-bearing values are frozen dataclasses whose numpy buffers are made
read-only on construction. Row types used for CSV tables are TypedDicts.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple, TypedDict

import numpy as np

from app.core.errors import InputError
from app.core.texture_defaults import PROFILE_SCHEMA_VERSION
from app.schemas.texture import NoiseSpec, Weighting


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Signal:
    """Mono waveform on the 16-bit integer amplitude scale."""

    samples: np.ndarray
    sample_rate: int
    source_id: str = ""

    def __post_init__(self) -> None:
        samples = np.array(self.samples, dtype=np.float64).reshape(-1)
        if samples.size == 0:
            raise InputError("signal has no samples")
        if not np.all(np.isfinite(samples)):
            raise InputError("signal contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise InputError(f"sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", _frozen(samples))
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate

    def __len__(self) -> int:
        return int(self.samples.size)


@dataclass(frozen=True)
class GammachirpFilter:
    channel_index: int
    center_frequency: float
    coefficients: np.ndarray
    normalization: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficients", _frozen(np.asarray(self.coefficients, dtype=np.complex128)))

    @property
    def segment(self) -> int:
        """1-based segment number s."""
        return self.channel_index + 1

    def __len__(self) -> int:
        return int(self.coefficients.size)


@dataclass(frozen=True)
class Cochleagram:
    """Log energy in dB, shape (frames, channels)."""

    log_energy: np.ndarray
    frame_rate: float
    channel_frequencies: np.ndarray
    source_id: str = ""
    warmup_frames: int = 0
    config_hash: str = ""

    def __post_init__(self) -> None:
        values = np.array(self.log_energy, dtype=np.float64)
        freqs = np.array(self.channel_frequencies, dtype=np.float64).reshape(-1)
        if values.ndim != 2:
            raise InputError(f"log_energy must be 2-D, got shape {values.shape}")
        if values.shape[1] != freqs.size:
            raise InputError(
                f"{values.shape[1]} channels but {freqs.size} channel frequencies"
            )
        if not np.all(np.isfinite(values)):
            raise InputError("cochleagram contains non-finite values")
        if freqs.size > 1 and not np.all(np.diff(freqs) > 0):
            raise InputError("channel frequencies must be strictly increasing")
        if self.frame_rate <= 0:
            raise InputError("frame rate must be positive")
        object.__setattr__(self, "log_energy", _frozen(values))
        object.__setattr__(self, "channel_frequencies", _frozen(freqs))

    @property
    def n_frames(self) -> int:
        return int(self.log_energy.shape[0])

    @property
    def n_channels(self) -> int:
        return int(self.log_energy.shape[1])


class Direction(str, Enum):
    TIME_UP = "time+"
    TIME_DOWN = "time-"
    FREQ_UP = "freq+"
    FREQ_DOWN = "freq-"

    @property
    def is_time(self) -> bool:
        return self in (Direction.TIME_UP, Direction.TIME_DOWN)

    @property
    def sign(self) -> int:
        return 1 if self in (Direction.TIME_UP, Direction.FREQ_UP) else -1


@dataclass(frozen=True)
class CorrelationCurve:
    channel: int
    direction: Direction
    lags: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "lags", _frozen(np.asarray(self.lags, dtype=np.int64)))
        object.__setattr__(self, "values", _frozen(np.asarray(self.values, dtype=np.float64)))


def _none_to_nan(values: Tuple[Optional[float], ...]) -> np.ndarray:
    return np.array([np.nan if v is None else v for v in values], dtype=np.float64)


@dataclass(frozen=True)
class CorrelationProfile:
    """
    Per-channel correlation distances estimated from white noise.

    eps_t/eps_t_up: distance in frames towards earlier/later time.
    eps_f/eps_f_up: distance in channels towards lower/higher frequency;
    None where no crossing could be established (band edges).
    """

    channel_frequencies: Tuple[float, ...]
    eps_t: Tuple[float, ...]
    eps_t_up: Tuple[float, ...]
    eps_f: Tuple[Optional[float], ...]
    eps_f_up: Tuple[Optional[float], ...]
    theta: float
    config_hash: str
    noise_spec: Optional[NoiseSpec] = None
    duration_s: float = 0.0
    schema_version: int = PROFILE_SCHEMA_VERSION

    def __post_init__(self) -> None:
        n = len(self.channel_frequencies)
        for name in ("eps_t", "eps_t_up", "eps_f", "eps_f_up"):
            values = tuple(getattr(self, name))
            if len(values) != n:
                raise InputError(f"{name} has {len(values)} entries for {n} channels")
            for v in values:
                if v is not None and not (math.isfinite(v) and v > 0):
                    raise InputError(f"{name} contains a non-positive distance: {v}")
            object.__setattr__(self, name, values)
        if any(v is None for v in self.eps_t + self.eps_t_up):
            raise InputError("temporal correlation distances are required for every channel")
        object.__setattr__(self, "channel_frequencies", tuple(float(f) for f in self.channel_frequencies))

    @property
    def n_channels(self) -> int:
        return len(self.channel_frequencies)

    def arrays(self) -> Dict[str, np.ndarray]:
        """Distances as float arrays; unavailable entries are NaN."""
        return {
            "eps_t": np.array(self.eps_t, dtype=np.float64),
            "eps_t_up": np.array(self.eps_t_up, dtype=np.float64),
            "eps_f": _none_to_nan(self.eps_f),
            "eps_f_up": _none_to_nan(self.eps_f_up),
        }

    @property
    def unavailable_freq_channels(self) -> int:
        return sum(1 for a, b in zip(self.eps_f, self.eps_f_up) if a is None or b is None)

    @property
    def profile_id(self) -> str:
        payload = {
            "config_hash": self.config_hash,
            "theta": self.theta,
            "eps": [self.eps_t, self.eps_t_up, self.eps_f, self.eps_f_up],
        }
        text = json.dumps(payload, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class CenterSurroundMaps:
    """Oriented center-surround ratios (dB) and their validity masks."""

    o_h: np.ndarray
    o_v: np.ndarray
    valid_h: np.ndarray
    valid_v: np.ndarray

    def __post_init__(self) -> None:
        for name in ("o_h", "o_v"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name), dtype=np.float64)))
        for name in ("valid_h", "valid_v"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name), dtype=bool)))


@dataclass(frozen=True)
class TextureMaps:
    """CSR and tract maps sharing the cochleagram's (frames, channels) shape."""

    o_h: np.ndarray
    o_v: np.ndarray
    t_vert: np.ndarray
    t_horiz: np.ndarray
    valid_o_h: np.ndarray
    valid_o_v: np.ndarray
    valid_t_vert: np.ndarray
    valid_t_horiz: np.ndarray

    def __post_init__(self) -> None:
        shape = np.shape(self.o_h)
        for name in ("o_h", "o_v", "t_vert", "t_horiz"):
            array = np.asarray(getattr(self, name), dtype=np.float64)
            if array.shape != shape:
                raise InputError(f"{name} has shape {array.shape}, expected {shape}")
            object.__setattr__(self, name, _frozen(array))
        for name in ("valid_o_h", "valid_o_v", "valid_t_vert", "valid_t_horiz"):
            mask = np.asarray(getattr(self, name), dtype=bool)
            if mask.shape != shape:
                raise InputError(f"{name} has shape {mask.shape}, expected {shape}")
            object.__setattr__(self, name, _frozen(mask))

    @property
    def shape(self) -> Tuple[int, int]:
        return tuple(self.o_h.shape)

    def feature(self, name: str) -> Tuple[np.ndarray, np.ndarray]:
        """(values, validity) for one of o_h, o_v, t_vert, t_horiz."""
        return getattr(self, name), getattr(self, f"valid_{name}")

    def valid_values(self, name: str) -> np.ndarray:
        values, mask = self.feature(name)
        return values[mask]


@dataclass(frozen=True)
class DescriptorTriple:
    """File-level pulsality, tonality, noisiness (log of fractions, <= 0)."""

    pulsality: float
    tonality: float
    noisiness: float
    weighting: Weighting
    file_id: str = ""
    n_valid_cells: int = 0
    warnings: Tuple[str, ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class FeatureHistogram:
    """Density histogram in percent per dB; in-range area = 100 x in-range fraction."""

    kind: str
    bin_edges: np.ndarray
    densities: np.ndarray
    sample_count: int
    underflow: int = 0
    overflow: int = 0
    feature: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "bin_edges", _frozen(np.asarray(self.bin_edges, dtype=np.float64)))
        object.__setattr__(self, "densities", _frozen(np.asarray(self.densities, dtype=np.float64)))

    @property
    def bin_widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    @property
    def in_range_mass(self) -> float:
        return float(np.sum(self.densities * self.bin_widths))


@dataclass(frozen=True)
class PrevalenceReport:
    """Per-bin log10(sound density / reference density); NaN where undefined."""

    bin_edges: np.ndarray
    log10_ratio: np.ndarray
    defined: np.ndarray
    feature: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "bin_edges", _frozen(np.asarray(self.bin_edges, dtype=np.float64)))
        object.__setattr__(self, "log10_ratio", _frozen(np.asarray(self.log10_ratio, dtype=np.float64)))
        object.__setattr__(self, "defined", _frozen(np.asarray(self.defined, dtype=bool)))


@dataclass(frozen=True)
class ReferenceSet:
    """White-noise reference histograms and sparse feature samples."""

    histograms: Dict[str, FeatureHistogram]
    samples: Dict[str, np.ndarray]
    profile_id: str = ""


class DescriptorRow(TypedDict, total=False):
    file: str
    weighting: str
    P: float
    T: float
    N: float
    n_valid_cells: int
    warnings: str


class PerceptualRow(TypedDict):
    sound_id: str
    category: str
    mds1: float
    mds2: float
    mds3: float


class ChannelProfileRow(TypedDict):
    index: int
    frequency_hz: float
    eps_t: float
    eps_t_up: float
    eps_f: Optional[float]
    eps_f_up: Optional[float]
