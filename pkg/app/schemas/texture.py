"""Parameter objects and HTTP schemas for the texture pipeline."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app.core.texture_defaults import (
    DEFAULT_B1,
    DEFAULT_C1,
    DEFAULT_C_P,
    DEFAULT_C_T,
    DEFAULT_DECIMATION_POST,
    DEFAULT_DECIMATION_PRE,
    DEFAULT_ERB0,
    DEFAULT_ERB1,
    DEFAULT_F_MAX,
    DEFAULT_F_MIN,
    DEFAULT_GAMMA_ORDER,
    DEFAULT_GATE_SLOPE,
    DEFAULT_GATE_THRESHOLD,
    DEFAULT_LOG_BASE,
    DEFAULT_N_SEG,
    DEFAULT_NOISE_DURATION_S,
    DEFAULT_NOISE_OFFSET,
    DEFAULT_NOISE_P,
    DEFAULT_NOISE_TRIALS,
    DEFAULT_SAMPLE_RATE,
    DEFAULT_SEED,
    DEFAULT_T_MAX_S,
    DEFAULT_THETA,
    FLOOR_SEED_OFFSET,
)

logger = logging.getLogger(__name__)


class Weighting(str, Enum):
    ENERGY = "energy"
    AREA = "area"


class WeightingChoice(str, Enum):
    ENERGY = "energy"
    AREA = "area"
    BOTH = "both"

    def modes(self) -> List[Weighting]:
        if self is WeightingChoice.BOTH:
            return [Weighting.ENERGY, Weighting.AREA]
        return [Weighting(self.value)]


class OffsetMode(str, Enum):
    """How fractional correlation distances are evaluated on the grid."""

    INTERPOLATE = "interpolate"
    ROUND = "round"


class ArchetypeKind(str, Enum):
    TONE = "tone"
    CLICK_TRAIN = "click_train"
    SILENCE = "silence"


def _canonical_hash(payload: Dict[str, Any]) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class NoiseSpec(BaseModel):
    """Binomial white-noise recipe: draw B(n_trials, p) and subtract offset."""

    n_trials: int = Field(DEFAULT_NOISE_TRIALS, gt=0)
    p: float = Field(DEFAULT_NOISE_P, gt=0, lt=1)
    offset: int = DEFAULT_NOISE_OFFSET
    duration_s: float = Field(DEFAULT_NOISE_DURATION_S, gt=0)
    seed: int = DEFAULT_SEED

    model_config = {"frozen": True}

    @property
    def mean(self) -> float:
        return self.n_trials * self.p - self.offset

    @property
    def variance(self) -> float:
        return self.n_trials * self.p * (1.0 - self.p)


class FilterbankConfig(BaseModel):
    """Gammachirp filterbank and decimation settings."""

    n_seg: int = Field(DEFAULT_N_SEG, ge=2)
    f_min: float = Field(DEFAULT_F_MIN, gt=0)
    f_max: float = Field(DEFAULT_F_MAX, gt=0)
    n: int = Field(DEFAULT_GAMMA_ORDER, ge=2)
    b1: float = Field(DEFAULT_B1, gt=0)
    c1: float = DEFAULT_C1
    erb0: float = Field(DEFAULT_ERB0, ge=0)
    erb1: float = Field(DEFAULT_ERB1, ge=0)
    t_max_s: float = Field(DEFAULT_T_MAX_S, gt=0)
    sample_rate: int = Field(DEFAULT_SAMPLE_RATE, gt=0)
    decimation_pre: int = Field(DEFAULT_DECIMATION_PRE, ge=1)
    decimation_post: int = Field(DEFAULT_DECIMATION_POST, ge=1)

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def check_frequency_range(self) -> "FilterbankConfig":
        if not self.f_min < self.f_max:
            raise ValueError(f"f_min ({self.f_min}) must be below f_max ({self.f_max})")
        if self.f_max > self.sample_rate / 2:
            raise ValueError(
                f"f_max ({self.f_max} Hz) exceeds the Nyquist frequency ({self.sample_rate / 2} Hz)"
            )
        if int(math.floor(self.t_max_s * self.sample_rate)) < 2:
            raise ValueError("t_max_s is shorter than two samples")
        return self

    @property
    def hop(self) -> int:
        return self.decimation_pre * self.decimation_post

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop

    @property
    def filter_length(self) -> int:
        return int(math.floor(self.t_max_s * self.sample_rate))

    @property
    def warmup_frames(self) -> int:
        return int(math.ceil(self.filter_length / self.hop))

    def config_hash(self) -> str:
        return _canonical_hash(self.model_dump())


class TractParams(BaseModel):
    """Diamond scale factors in the pattern (c_p) and tract (c_t) directions."""

    c_p: float = Field(DEFAULT_C_P, gt=0)
    c_t: float = Field(DEFAULT_C_T, gt=0)

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def warn_unusual_scales(self) -> "TractParams":
        if self.c_p >= 1:
            logger.warning(f"c_p={self.c_p} is not smaller than a correlation distance")
        if self.c_t <= 1:
            logger.warning(f"c_t={self.c_t} is not greater than a correlation distance")
        return self


class DescriptorConfig(BaseModel):
    """Sigmoid gate and weighting for pulsality/tonality/noisiness."""

    gate_threshold: float = Field(DEFAULT_GATE_THRESHOLD, gt=0)
    gate_slope: float = Field(DEFAULT_GATE_SLOPE, gt=0)
    weighting: Weighting = Weighting.ENERGY
    log_base: float = Field(DEFAULT_LOG_BASE, gt=0)

    model_config = {"frozen": True}

    @field_validator("log_base")
    @classmethod
    def base_not_one(cls, v: float) -> float:
        if v == 1:
            raise ValueError("log_base must differ from 1")
        return v


class RunConfig(BaseModel):
    """Fully resolved settings for one CLI/API invocation."""

    filterbank: FilterbankConfig = Field(default_factory=FilterbankConfig)
    theta: float = Field(DEFAULT_THETA, gt=0, lt=1)
    tract: TractParams = Field(default_factory=TractParams)
    gate_threshold: float = Field(DEFAULT_GATE_THRESHOLD, gt=0)
    gate_slope: float = Field(DEFAULT_GATE_SLOPE, gt=0)
    weighting: WeightingChoice = WeightingChoice.BOTH
    log_base: float = Field(DEFAULT_LOG_BASE, gt=0)
    seed: int = DEFAULT_SEED
    noise_duration_s: float = Field(DEFAULT_NOISE_DURATION_S, gt=0)
    add_floor: bool = True
    offset_mode: OffsetMode = OffsetMode.INTERPOLATE
    profile_path: str = "calibration/profile.json"
    out_dir: str = "output"
    workers: int = Field(1, ge=1)
    log_level: str = "INFO"

    model_config = {"frozen": True}

    @field_validator("log_level")
    @classmethod
    def known_level(cls, v: str) -> str:
        v = v.strip().upper()
        if v not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"unknown log level '{v}'")
        return v

    def noise_spec(self, duration_s: Optional[float] = None, seed: Optional[int] = None) -> NoiseSpec:
        return NoiseSpec(
            duration_s=duration_s if duration_s is not None else self.noise_duration_s,
            seed=seed if seed is not None else self.seed,
        )

    def floor_spec(self, duration_s: float) -> NoiseSpec:
        """Noise floor: same distribution as the reference, independent seed."""
        return NoiseSpec(duration_s=duration_s, seed=self.seed + FLOOR_SEED_OFFSET)

    def descriptor_config(self, weighting: Weighting) -> DescriptorConfig:
        return DescriptorConfig(
            gate_threshold=self.gate_threshold,
            gate_slope=self.gate_slope,
            weighting=weighting,
            log_base=self.log_base,
        )

    def canonical_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))



# ============================================================================
# PROFILE FILE
# ============================================================================

class ChannelEntry(BaseModel):
    index: int = Field(..., ge=0)
    frequency_hz: float = Field(..., gt=0)
    eps_t: float = Field(..., gt=0)
    eps_t_up: float = Field(..., gt=0)
    eps_f: Optional[float] = Field(None, gt=0)
    eps_f_up: Optional[float] = Field(None, gt=0)


class ProfileDocument(BaseModel):
    """On-disk calibration profile; unavailable frequency distances are null."""

    schema_version: int
    config_hash: str
    theta: float = Field(..., gt=0, lt=1)
    noise_spec: Optional[NoiseSpec] = None
    duration_s: float = Field(..., ge=0)
    channels: List[ChannelEntry] = Field(..., min_length=2)
    provenance: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("channels")
    @classmethod
    def ordered_channels(cls, v: List[ChannelEntry]) -> List[ChannelEntry]:
        if [c.index for c in v] != list(range(len(v))):
            raise ValueError("channel indices must run 0..n-1 in order")
        return v


# ============================================================================
# HTTP SCHEMAS
# ============================================================================

class CalibrateRequest(BaseModel):
    """Run a white-noise calibration into the configured profile path."""

    duration_s: float = Field(DEFAULT_NOISE_DURATION_S, gt=0, le=3600)
    seed: Optional[int] = None


class ProfileSummary(BaseModel):
    profile_id: str
    config_hash: str
    theta: float
    duration_s: float
    n_channels: int
    unavailable_freq_channels: int
    seed: Optional[int] = None


class DescriptorRowRead(BaseModel):
    file: str
    weighting: str
    P: Optional[float]
    T: Optional[float]
    N: Optional[float]
    n_valid_cells: int
    warnings: str = ""


class AnalyzeSummary(BaseModel):
    """Per-feature KS distance and enrichment summary for one sound."""

    file: str
    n_frames: int
    ks_distance: Dict[str, float]
    max_log10_prevalence: Dict[str, Optional[float]]
    segment_fractions: Dict[str, float]
    descriptors: List[DescriptorRowRead]


class PerceptualRowIn(BaseModel):
    sound_id: str = Field(..., min_length=1)
    category: str
    mds1: float
    mds2: float
    mds3: float

    @field_validator("category")
    @classmethod
    def known_category(cls, v: str) -> str:
        v = v.strip().lower()
        if v not in {"harmonic", "impact", "continuous"}:
            raise ValueError(f"unknown category '{v}'")
        return v


class CompareRequest(BaseModel):
    descriptors: List[DescriptorRowRead] = Field(..., min_length=1)
    perceptual: List[PerceptualRowIn] = Field(..., min_length=3)


class CorrelationCell(BaseModel):
    descriptor: str
    dimension: str
    r: Optional[float]
    abs_r: Optional[float]
    n: int
    excluded: int
    published_r: Optional[float] = None


class CompareResponse(BaseModel):
    matched: int
    cells: List[CorrelationCell]
