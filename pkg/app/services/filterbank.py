"""
Gammachirp filterbank and cochleagram computation.

Each channel is a causal complex gammachirp truncated at t_max. The signal is
convolved with every filter by FFT overlap-add, the energy |A|^2 is decimated
(keeping the last sample of every period) and converted to dB.
"""

import logging
from functools import lru_cache
from typing import List, Optional

import numpy as np
from scipy import fft as sp_fft

from app.core.errors import ConfigError, FrameIndexError, InputError, NumericError
from app.models.texture import Cochleagram, GammachirpFilter, Signal
from app.schemas.texture import FilterbankConfig

logger = logging.getLogger(__name__)

# Channels transformed together per block; bounds the temporary spectra.
CHANNEL_GROUP = 8


def channel_frequencies(config: FilterbankConfig) -> np.ndarray:
    """f_s = f_min * exp(alpha * (2s - 1) / (2 n_seg)), alpha = ln(f_max / f_min), s = 1..n_seg."""
    alpha = np.log(config.f_max / config.f_min)
    s = np.arange(1, config.n_seg + 1, dtype=np.float64)
    return config.f_min * np.exp(alpha * (2.0 * s - 1.0) / (2.0 * config.n_seg))


def _gammachirp(config: FilterbankConfig, frequency: float) -> np.ndarray:
    """Un-normalized impulse response; the t=0 coefficient is exactly 0."""
    t = np.arange(config.filter_length, dtype=np.float64) / config.sample_rate
    response = np.zeros(t.size, dtype=np.complex128)
    tp = t[1:]
    bandwidth = config.erb1 * frequency + config.erb0
    envelope = tp ** (config.n - 1) * np.exp(-2.0 * np.pi * config.b1 * bandwidth * tp)
    phase = 2.0 * np.pi * frequency * tp + config.c1 * np.log(tp)
    response[1:] = envelope * np.exp(1j * phase)
    return response


def build_filterbank(config: FilterbankConfig) -> List[GammachirpFilter]:
    """
    Build n_seg normalized gammachirp filters.

    Normalization: 1/N_s = f_s * sqrt(sum |gamma_s|^2) over the un-normalized
    coefficients, so that sum |N_s gamma_s|^2 * f_s^2 = 1 for every channel.
    """
    if config.f_max > config.sample_rate / 2:
        raise ConfigError(f"f_max ({config.f_max} Hz) exceeds Nyquist ({config.sample_rate / 2} Hz)")

    filters = []
    for index, frequency in enumerate(channel_frequencies(config)):
        raw = _gammachirp(config, float(frequency))
        norm = 1.0 / (frequency * np.sqrt(np.sum(np.abs(raw) ** 2)))
        filters.append(
            GammachirpFilter(
                channel_index=index,
                center_frequency=float(frequency),
                coefficients=raw * norm,
                normalization=float(norm),
            )
        )
    logger.info(
        f"Built {len(filters)} gammachirp filters, {config.filter_length} taps, "
        f"{filters[0].center_frequency:.2f}-{filters[-1].center_frequency:.2f} Hz"
    )
    return filters


def fft_size(filter_length: int) -> int:
    """Smallest power of two >= 2 * filter_length."""
    return 1 << (2 * filter_length - 1).bit_length()


def overlap_add_convolve(x: np.ndarray, h: np.ndarray, nfft: Optional[int] = None) -> np.ndarray:
    """
    Causal convolution y[k] = sum_j h[j] x[k - j], truncated to len(x).

    Blocks of nfft - len(h) + 1 input samples are transformed, multiplied by
    the filter spectrum and added back at their offset.
    """
    x = np.asarray(x, dtype=np.float64)
    h = np.asarray(h, dtype=np.complex128)
    nfft = nfft or fft_size(h.size)
    if nfft < h.size:
        raise ConfigError(f"FFT size {nfft} shorter than filter ({h.size} taps)")
    block = nfft - h.size + 1
    spectrum = sp_fft.fft(h, nfft)
    y = np.zeros(x.size + nfft, dtype=np.complex128)
    for start in range(0, x.size, block):
        segment = sp_fft.fft(x[start:start + block], nfft)
        y[start:start + nfft] += sp_fft.ifft(segment * spectrum)
    return y[:x.size]


@lru_cache(maxsize=4)
def _filter_spectra(config: FilterbankConfig, nfft: int) -> np.ndarray:
    coefficients = np.stack([f.coefficients for f in build_filterbank(config)])
    spectra = sp_fft.fft(coefficients, nfft, axis=1)
    spectra.setflags(write=False)
    return spectra


def _frame_positions(n_samples: int, config: FilterbankConfig) -> np.ndarray:
    """
    Input sample behind each output frame.

    x[k-1::k] with k=pre then k=post keeps sample (j+1) * pre * post - 1 for frame j.
    """
    positions = np.arange(n_samples)[config.decimation_pre - 1::config.decimation_pre]
    return positions[config.decimation_post - 1::config.decimation_post]


def compute_cochleagram(signal: Signal, config: FilterbankConfig, workers: int = 1) -> Cochleagram:
    """
    Compute the decimated log-energy cochleagram of a signal.

    Args:
        signal: Input at config.sample_rate
        config: Filterbank and decimation settings
        workers: Threads handed to scipy.fft

    Returns:
        Cochleagram in dB, shape (frames, n_seg)

    Raises:
        InputError: Rate mismatch or signal shorter than one filter
        NumericError: A decimated cell has zero energy (add a noise floor)
    """
    if signal.sample_rate != config.sample_rate:
        raise InputError(
            f"signal at {signal.sample_rate} Hz, filterbank configured for {config.sample_rate} Hz"
        )
    if len(signal) <= config.filter_length:
        raise InputError(
            f"signal has {len(signal)} samples, needs more than one filter length ({config.filter_length})"
        )

    positions = _frame_positions(len(signal), config)
    if positions.size == 0:
        raise InputError("signal too short for a single output frame")

    nfft = fft_size(config.filter_length)
    block = nfft - config.filter_length + 1
    spectra = _filter_spectra(config, nfft)
    amplitude = np.zeros((positions.size, config.n_seg), dtype=np.complex128)
    x = signal.samples

    for start in range(0, len(signal), block):
        wanted = (positions >= start) & (positions < start + nfft)
        if not np.any(wanted):
            continue
        frames = np.flatnonzero(wanted)
        local = positions[frames] - start
        segment = sp_fft.fft(x[start:start + block], nfft, workers=workers)
        for first in range(0, config.n_seg, CHANNEL_GROUP):
            group = slice(first, first + CHANNEL_GROUP)
            response = sp_fft.ifft(spectra[group] * segment, axis=1, workers=workers)
            amplitude[frames, group] += response[:, local].T

    energy = amplitude.real ** 2 + amplitude.imag ** 2
    if np.any(energy <= 0):
        frame, channel = np.argwhere(energy <= 0)[0]
        raise NumericError(
            f"{signal.source_id or 'signal'}: zero energy at frame {frame}, channel {channel}; "
            "add a white-noise floor before analysis"
        )

    log_energy = 10.0 * np.log10(energy)
    logger.info(
        f"Cochleagram {signal.source_id or ''}: {log_energy.shape[0]} frames x {log_energy.shape[1]} channels "
        f"at {config.frame_rate:g} Hz, range {log_energy.min():.1f}..{log_energy.max():.1f} dB"
    )
    return Cochleagram(
        log_energy=log_energy,
        frame_rate=config.frame_rate,
        channel_frequencies=channel_frequencies(config),
        source_id=signal.source_id,
        warmup_frames=config.warmup_frames,
        config_hash=config.config_hash(),
    )


def frame_time(cochleagram: Cochleagram, frame_index: int) -> float:
    """Seconds at frame_index / frame_rate."""
    if not 0 <= frame_index < cochleagram.n_frames:
        raise FrameIndexError(f"frame {frame_index} outside 0..{cochleagram.n_frames - 1}")
    return frame_index / cochleagram.frame_rate


def relative_db(cochleagram: Cochleagram) -> np.ndarray:
    """Log energy relative to the file maximum (max = 0 dB)."""
    return cochleagram.log_energy - cochleagram.log_energy.max()
