"""
White-noise calibration of correlation distances.

For every channel the log-energy correlation R_f is measured along time and
frequency; the lag where R_f first drops below theta (linearly interpolated)
is that channel's correlation distance in the given direction.
"""

import logging
from typing import List, Optional

import numpy as np

from app.core.errors import CalibrationError, ConfigError, InputError, NumericError
from app.core.texture_defaults import (
    DEFAULT_NOISE_DURATION_S,
    DEFAULT_THETA,
    MAX_FREQ_LAG,
    MIN_NOISE_DURATION_S,
    TIME_LAG_FILTER_MULTIPLE,
)
from app.models.texture import Cochleagram, CorrelationCurve, CorrelationProfile, Direction
from app.schemas.texture import NoiseSpec

logger = logging.getLogger(__name__)


def _valid_frames(cochleagram: Cochleagram) -> np.ndarray:
    values = cochleagram.log_energy[cochleagram.warmup_frames:]
    if values.shape[0] < 2:
        raise InputError(
            f"{values.shape[0]} frames after the {cochleagram.warmup_frames}-frame warm-up; cannot correlate"
        )
    return values


def _column_pearson(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-column correlation with population moments over the paired rows."""
    da = a - a.mean(axis=0)
    db = b - b.mean(axis=0)
    sa = np.sqrt(np.mean(da * da, axis=0))
    sb = np.sqrt(np.mean(db * db, axis=0))
    if np.any(sa == 0) or np.any(sb == 0):
        channel = int(np.flatnonzero((sa == 0) | (sb == 0))[0])
        raise NumericError(f"channel {channel} has zero variance over time")
    return np.clip(np.mean(da * db, axis=0) / (sa * sb), -1.0, 1.0)


def _time_lag_correlation(values: np.ndarray, lag: int) -> np.ndarray:
    """R at +lag frames for every channel; the -lag pairing is the same set of frames."""
    if lag == 0:
        return _column_pearson(values, values)
    return _column_pearson(values[:-lag], values[lag:])


def correlation_matrix_at_zero_lag(cochleagram: Cochleagram) -> np.ndarray:
    """Channel x channel correlation over the post-warm-up frames."""
    values = _valid_frames(cochleagram)
    if np.any(values.std(axis=0) == 0):
        channel = int(np.flatnonzero(values.std(axis=0) == 0)[0])
        raise NumericError(f"channel {channel} has zero variance over time")
    return np.clip(np.corrcoef(values, rowvar=False), -1.0, 1.0)


def correlation_curve(
    cochleagram: Cochleagram,
    channel: int,
    direction: Direction,
    max_lag: int,
) -> CorrelationCurve:
    """
    R_f at integer lags 0..max_lag in one direction.

    Args:
        cochleagram: Log-energy representation (warm-up frames are skipped)
        channel: 0-based channel index
        direction: time+, time-, freq+ or freq-
        max_lag: Largest lag; time lags must stay below a tenth of the frames

    Returns:
        CorrelationCurve whose value at lag 0 is 1
    """
    direction = Direction(direction)
    values = _valid_frames(cochleagram)
    n_frames, n_channels = values.shape
    if not 0 <= channel < n_channels:
        raise InputError(f"channel {channel} outside 0..{n_channels - 1}")
    if max_lag < 0:
        raise InputError("max_lag must be non-negative")

    lags = np.arange(max_lag + 1)
    if direction.is_time:
        if max_lag >= n_frames / 10:
            raise InputError(f"time lag {max_lag} not below a tenth of {n_frames} frames")
        column = values[:, channel:channel + 1]
        curve = [float(_time_lag_correlation(column, int(k))[0]) for k in lags]
    else:
        target = channel + direction.sign * max_lag
        if not 0 <= target < n_channels:
            raise InputError(f"frequency lag {max_lag} from channel {channel} leaves the channel range")
        centre = values[:, channel:channel + 1]
        curve = [
            float(_column_pearson(centre, values[:, channel + direction.sign * k:channel + direction.sign * k + 1])[0])
            for k in lags
        ]
    return CorrelationCurve(channel=channel, direction=direction, lags=lags, values=np.array(curve))


def threshold_crossing(values: np.ndarray, theta: float) -> Optional[float]:
    """
    Interpolated lag where a curve first drops below theta.

    eps = (k - 1) + (R[k-1] - theta) / (R[k-1] - R[k]) for the first k with R[k] < theta;
    None when the curve never crosses.
    """
    below = np.flatnonzero(np.asarray(values[1:]) < theta)
    if below.size == 0:
        return None
    k = int(below[0]) + 1
    previous, current = float(values[k - 1]), float(values[k])
    return (k - 1) + (previous - theta) / (previous - current)


def _time_search_range(cochleagram: Cochleagram, n_valid: int) -> int:
    limit = n_valid // 10 - 1
    if cochleagram.warmup_frames > 0:
        limit = min(limit, TIME_LAG_FILTER_MULTIPLE * cochleagram.warmup_frames)
    return limit


def _time_distances(values: np.ndarray, theta: float, max_lag: int) -> List[float]:
    """Grow the time curves lag by lag until every channel has crossed theta."""
    n_channels = values.shape[1]
    curves = [_time_lag_correlation(values, 0)]
    crossings: List[Optional[float]] = [None] * n_channels
    for lag in range(1, max_lag + 1):
        curves.append(_time_lag_correlation(values, lag))
        stacked = np.stack(curves)
        for channel in range(n_channels):
            if crossings[channel] is None:
                crossings[channel] = threshold_crossing(stacked[:, channel], theta)
        if all(c is not None for c in crossings):
            break
    missing = [c for c, eps in enumerate(crossings) if eps is None]
    if missing:
        raise CalibrationError(
            f"time correlation stays above theta={theta} up to lag {max_lag} in channels {missing[:10]}"
            f"{'...' if len(missing) > 10 else ''}; use longer noise or a larger theta"
        )
    return [float(c) for c in crossings]


def _frequency_distances(matrix: np.ndarray, theta: float, max_lag: int, sign: int) -> List[Optional[float]]:
    n_channels = matrix.shape[0]
    distances: List[Optional[float]] = []
    for channel in range(n_channels):
        reach = (n_channels - 1 - channel) if sign > 0 else channel
        lags = np.arange(min(max_lag, reach) + 1)
        curve = matrix[channel, channel + sign * lags]
        distances.append(threshold_crossing(curve, theta))
    return distances


def estimate_profile(
    noise_cochleagram: Cochleagram,
    theta: float = DEFAULT_THETA,
    noise_spec: Optional[NoiseSpec] = None,
    max_freq_lag: int = MAX_FREQ_LAG,
) -> CorrelationProfile:
    """
    Estimate per-channel correlation distances from a white-noise cochleagram.

    Time distances must exist for every channel. Frequency distances that do
    not cross within reach of the band edges are stored as unavailable (None).
    """
    if not 0 < theta < 1:
        raise ConfigError(f"theta must lie in (0, 1), got {theta}")

    duration_s = noise_cochleagram.n_frames / noise_cochleagram.frame_rate
    if duration_s < MIN_NOISE_DURATION_S:
        logger.warning(
            f"Calibration noise is only {duration_s:.1f} s (minimum {MIN_NOISE_DURATION_S:.0f} s, "
            f"recommended {DEFAULT_NOISE_DURATION_S:.0f} s); distances will be unreliable"
        )
    elif duration_s < DEFAULT_NOISE_DURATION_S:
        logger.warning(
            f"Calibration noise is {duration_s:.1f} s, shorter than the recommended {DEFAULT_NOISE_DURATION_S:.0f} s"
        )

    values = _valid_frames(noise_cochleagram)
    max_time_lag = _time_search_range(noise_cochleagram, values.shape[0])
    if max_time_lag < 1:
        raise CalibrationError(f"{values.shape[0]} valid frames leave no room for a time-lag search")

    eps_time = _time_distances(values, theta, max_time_lag)
    matrix = correlation_matrix_at_zero_lag(noise_cochleagram)
    eps_f = _frequency_distances(matrix, theta, max_freq_lag, sign=-1)
    eps_f_up = _frequency_distances(matrix, theta, max_freq_lag, sign=+1)

    profile = CorrelationProfile(
        channel_frequencies=tuple(noise_cochleagram.channel_frequencies.tolist()),
        eps_t=tuple(eps_time),
        eps_t_up=tuple(eps_time),
        eps_f=tuple(eps_f),
        eps_f_up=tuple(eps_f_up),
        theta=theta,
        config_hash=noise_cochleagram.config_hash,
        noise_spec=noise_spec,
        duration_s=duration_s,
    )
    logger.info(
        f"Estimated profile {profile.profile_id}: eps_t {min(eps_time):.2f}..{max(eps_time):.2f} frames, "
        f"{profile.unavailable_freq_channels} channel(s) without a frequency crossing"
    )
    return profile
