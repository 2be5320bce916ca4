"""
Oriented center-surround ratios and tract features.

All quantities stay in dB. Cells whose stencil or diamond leaves the valid
grid (including the filterbank warm-up frames) are masked invalid and
hold 0.0.
"""

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from app.core.errors import InputError, ProfileVersionError
from app.models.texture import CenterSurroundMaps, Cochleagram, CorrelationProfile, Signal, TextureMaps
from app.schemas.texture import OffsetMode, RunConfig, TractParams
from app.services.filterbank import compute_cochleagram
from app.services.signal_io import add_noise_floor, require_sample_rate

logger = logging.getLogger(__name__)

Vector = Tuple[float, float]
DiamondVectors = Tuple[Tuple[Vector, Vector], Tuple[Vector, Vector]]

# Slack for cell centers lying on a diamond edge.
EDGE_TOLERANCE = 1e-9


def _check_alignment(cochleagram: Cochleagram, profile: CorrelationProfile) -> None:
    if profile.n_channels != cochleagram.n_channels:
        raise ProfileVersionError(
            f"profile has {profile.n_channels} channels, cochleagram has {cochleagram.n_channels}"
        )
    if profile.config_hash and cochleagram.config_hash and profile.config_hash != cochleagram.config_hash:
        raise ProfileVersionError(
            f"profile calibrated for config {profile.config_hash}, cochleagram uses {cochleagram.config_hash}; "
            "recalibrate"
        )


def _resolve(positions: np.ndarray, mode: OffsetMode) -> np.ndarray:
    if mode is OffsetMode.ROUND:
        return np.floor(positions + 0.5)
    return positions


def _interpolate(lines: np.ndarray, positions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Linear interpolation along axis 0 at fractional positions.

    Returns (values, inside); inside marks positions within [0, len - 1].
    """
    n = lines.shape[0]
    inside = (positions >= 0) & (positions <= n - 1)
    clipped = np.clip(positions, 0, n - 1)
    lower = np.floor(clipped).astype(np.int64)
    upper = np.minimum(lower + 1, n - 1)
    weight = (clipped - lower).reshape((-1,) + (1,) * (lines.ndim - 1))
    return lines[lower] * (1.0 - weight) + lines[upper] * weight, inside


def center_surround(
    cochleagram: Cochleagram,
    profile: CorrelationProfile,
    offset_mode: OffsetMode = OffsetMode.INTERPOLATE,
) -> CenterSurroundMaps:
    """
    O_h(t,f) = X(t,f) - (X(t - eps_t, f) + X(t + eps^t, f)) / 2 and O_v likewise
    along channels with eps_f / eps^f.

    Channels without a frequency distance are invalid in O_v only.
    """
    _check_alignment(cochleagram, profile)
    offset_mode = OffsetMode(offset_mode)
    x = cochleagram.log_energy
    n_frames, n_channels = x.shape
    warmup = cochleagram.warmup_frames
    eps = profile.arrays()
    frames = np.arange(n_frames, dtype=np.float64)
    settled = frames >= warmup

    o_h = np.zeros_like(x)
    valid_h = np.zeros(x.shape, dtype=bool)
    for channel in range(n_channels):
        column = x[:, channel]
        earlier = _resolve(frames - eps["eps_t"][channel], offset_mode)
        later = _resolve(frames + eps["eps_t_up"][channel], offset_mode)
        before, _ = _interpolate(column, earlier)
        after, inside = _interpolate(column, later)
        ok = settled & (earlier >= warmup) & inside
        o_h[ok, channel] = column[ok] - 0.5 * (before[ok] + after[ok])
        valid_h[:, channel] = ok

    o_v = np.zeros_like(x)
    valid_v = np.zeros(x.shape, dtype=bool)
    spectra = x.T
    for channel in range(n_channels):
        down, up = eps["eps_f"][channel], eps["eps_f_up"][channel]
        if np.isnan(down) or np.isnan(up):
            continue
        stencil = _resolve(np.array([channel - down, channel + up]), offset_mode)
        surround, inside = _interpolate(spectra, stencil)
        if not inside.all():
            continue
        o_v[settled, channel] = x[settled, channel] - 0.5 * (surround[0, settled] + surround[1, settled])
        valid_v[settled, channel] = True

    logger.debug(f"CSR valid cells: O_h {int(valid_h.sum())}, O_v {int(valid_v.sum())} of {x.size}")
    return CenterSurroundMaps(o_h=o_h, o_v=o_v, valid_h=valid_h, valid_v=valid_v)


def _polygon_contains(vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Closed convex polygon test by edge cross products, either orientation."""
    edges = np.roll(vertices, -1, axis=0) - vertices
    area = np.sum(vertices[:, 0] * np.roll(vertices[:, 1], -1) - np.roll(vertices[:, 0], -1) * vertices[:, 1])
    orientation = -1.0 if area < 0 else 1.0
    rel = points[:, None, :] - vertices[None, :, :]
    cross = edges[None, :, 0] * rel[:, :, 1] - edges[None, :, 1] * rel[:, :, 0]
    return np.all(orientation * cross >= -EDGE_TOLERANCE, axis=1)


def diamond_offsets(pattern_vecs: Sequence[Vector], tract_vecs: Sequence[Vector]) -> np.ndarray:
    """
    Integer (dt, df) offsets whose cell centers lie in the closed quadrilateral
    with vertices v1, w1, v2, w2 (pattern and tract vectors alternating).

    The origin is always included. Offsets are ordered by dt, then df.
    """
    (v1, v2), (w1, w2) = pattern_vecs, tract_vecs
    vertices = np.array([v1, w1, v2, w2], dtype=np.float64)
    lo = np.ceil(vertices.min(axis=0) - EDGE_TOLERANCE).astype(np.int64)
    hi = np.floor(vertices.max(axis=0) + EDGE_TOLERANCE).astype(np.int64)
    lo, hi = np.minimum(lo, 0), np.maximum(hi, 0)
    grid = np.array(
        [(dt, df) for dt in range(lo[0], hi[0] + 1) for df in range(lo[1], hi[1] + 1)],
        dtype=np.int64,
    )
    inside = _polygon_contains(vertices, grid.astype(np.float64))
    inside |= (grid[:, 0] == 0) & (grid[:, 1] == 0)
    return grid[inside]


def diamond_cells(
    center: Tuple[int, int],
    pattern_vecs: Sequence[Vector],
    tract_vecs: Sequence[Vector],
) -> List[Tuple[int, int, float]]:
    """Absolute (t, f, weight) cells of the diamond around ``center``; weights are all 1."""
    t0, f0 = center
    return [(t0 + int(dt), f0 + int(df), 1.0) for dt, df in diamond_offsets(pattern_vecs, tract_vecs)]


def pulse_diamond(eps: Dict[str, np.ndarray], channel: int, params: TractParams) -> DiamondVectors:
    """Pattern along time, tract along frequency (T_|)."""
    pattern = ((-params.c_p * eps["eps_t"][channel], 0.0), (params.c_p * eps["eps_t_up"][channel], 0.0))
    tract = ((0.0, -params.c_t * eps["eps_f"][channel]), (0.0, params.c_t * eps["eps_f_up"][channel]))
    return pattern, tract


def tone_diamond(eps: Dict[str, np.ndarray], channel: int, params: TractParams) -> DiamondVectors:
    """Pattern along frequency, tract along time (T_-)."""
    pattern = ((0.0, -params.c_p * eps["eps_f"][channel]), (0.0, params.c_p * eps["eps_f_up"][channel]))
    tract = ((-params.c_t * eps["eps_t"][channel], 0.0), (params.c_t * eps["eps_t_up"][channel], 0.0))
    return pattern, tract


def _diamond_rms(
    squared: np.ndarray, valid: np.ndarray, channel: int, offsets: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """RMS over the diamond for every frame of one channel, summing offsets in order."""
    n_frames, n_channels = squared.shape
    frames = np.arange(n_frames)
    total = np.zeros(n_frames)
    ok = np.ones(n_frames, dtype=bool)
    for dt, df in offsets:
        column = channel + int(df)
        if not 0 <= column < n_channels:
            return np.zeros(n_frames), np.zeros(n_frames, dtype=bool)
        rows = frames + int(dt)
        inside = (rows >= 0) & (rows < n_frames)
        clipped = np.clip(rows, 0, n_frames - 1)
        ok &= inside & valid[clipped, column]
        total += np.where(inside, squared[clipped, column], 0.0)
    rms = np.sqrt(total / len(offsets))
    return np.where(ok, rms, 0.0), ok


def tract_features(
    csr: CenterSurroundMaps,
    profile: CorrelationProfile,
    params: TractParams,
) -> TextureMaps:
    """
    Root-mean-square of squared CSRs over channel-specific diamonds.

    T_| averages O_h^2 over a diamond with pattern (c_p eps_t, c_p eps^t) in time and
    tract (c_t eps_f, c_t eps^f) in frequency. T_- averages O_v^2 over the
    diamond with the axes swapped.
    """
    if csr.o_h.shape[1] != profile.n_channels:
        raise InputError(f"CSR maps have {csr.o_h.shape[1]} channels, profile has {profile.n_channels}")
    eps = profile.arrays()
    sq_h = np.square(csr.o_h)
    sq_v = np.square(csr.o_v)

    t_vert = np.zeros_like(csr.o_h)
    t_horiz = np.zeros_like(csr.o_v)
    valid_vert = np.zeros(csr.o_h.shape, dtype=bool)
    valid_horiz = np.zeros(csr.o_v.shape, dtype=bool)

    for channel in range(profile.n_channels):
        if np.isnan(eps["eps_f"][channel]) or np.isnan(eps["eps_f_up"][channel]):
            continue
        offsets = diamond_offsets(*pulse_diamond(eps, channel, params))
        t_vert[:, channel], valid_vert[:, channel] = _diamond_rms(sq_h, csr.valid_h, channel, offsets)
        offsets = diamond_offsets(*tone_diamond(eps, channel, params))
        t_horiz[:, channel], valid_horiz[:, channel] = _diamond_rms(sq_v, csr.valid_v, channel, offsets)

    return TextureMaps(
        o_h=csr.o_h,
        o_v=csr.o_v,
        t_vert=t_vert,
        t_horiz=t_horiz,
        valid_o_h=csr.valid_h,
        valid_o_v=csr.valid_v,
        valid_t_vert=valid_vert,
        valid_t_horiz=valid_horiz,
    )


def compute_texture(
    cochleagram: Cochleagram,
    profile: CorrelationProfile,
    params: TractParams,
    offset_mode: OffsetMode = OffsetMode.INTERPOLATE,
) -> TextureMaps:
    maps = tract_features(center_surround(cochleagram, profile, offset_mode), profile, params)
    logger.info(
        f"Texture maps {cochleagram.source_id or ''}: valid T_| {int(maps.valid_t_vert.sum())}, "
        f"T_- {int(maps.valid_t_horiz.sum())} of {maps.o_h.size} cells"
    )
    return maps


def signal_texture(
    signal: Signal,
    profile: CorrelationProfile,
    config: RunConfig,
) -> Tuple[Cochleagram, TextureMaps]:
    """Floor, filter and texture one signal with the run's settings."""
    signal = require_sample_rate(signal, config.filterbank.sample_rate)
    if config.add_floor:
        signal = add_noise_floor(signal, config.floor_spec(signal.duration_s))
    cochleagram = compute_cochleagram(signal, config.filterbank)
    return cochleagram, compute_texture(cochleagram, profile, config.tract, config.offset_mode)
