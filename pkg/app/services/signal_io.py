"""
Signal I/O
Reads and writes 16-bit PCM WAV files, synthesizes binomial white noise and
archetype test signals, and mixes in the white-noise floor.
"""

import logging
from pathlib import Path
from typing import BinaryIO, Optional, Union

import numpy as np
import soundfile as sf

from app.core.errors import AudioFormatError, AudioIOError, ConfigError, InputError, SampleRangeError
from app.core.texture_defaults import DEFAULT_SAMPLE_RATE
from app.models.texture import Signal
from app.schemas.texture import ArchetypeKind, NoiseSpec

logger = logging.getLogger(__name__)

INT16_MIN = -32768
INT16_MAX = 32767

WavSource = Union[str, Path, BinaryIO]


def read_wav(source: WavSource, source_id: Optional[str] = None) -> Signal:
    """
    Read a 16-bit PCM WAV file.

    Integer amplitudes are preserved (no scaling to [-1, 1]). Multi-channel
    files are reduced to channel 0 with a warning.

    Args:
        source: Path or binary file object
        source_id: Provenance label (defaults to the file name)

    Returns:
        Signal on the int16 amplitude scale
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.is_file():
            raise AudioIOError(f"audio file not found: {path}")
        label = source_id or path.name
    else:
        label = source_id or getattr(source, "name", "<stream>")

    try:
        info = sf.info(source)
        if info.format != "WAV" or info.subtype != "PCM_16":
            raise AudioFormatError(
                f"{label}: expected 16-bit PCM WAV, got {info.format}/{info.subtype}"
            )
        if hasattr(source, "seek"):
            source.seek(0)
        data, sample_rate = sf.read(source, dtype="int16", always_2d=True)
    except RuntimeError as e:
        raise AudioFormatError(f"{label}: unreadable audio ({e})") from e

    if data.shape[0] == 0:
        raise InputError(f"{label}: file contains no samples")
    if data.shape[1] > 1:
        logger.warning(f"{label}: {data.shape[1]} channels, using channel 0 only")

    return Signal(samples=data[:, 0].astype(np.float64), sample_rate=int(sample_rate), source_id=label)


def write_wav(signal: Signal, path: Union[str, Path]) -> None:
    """Write a Signal as mono 16-bit PCM; out-of-range samples are an error, never clipped."""
    rounded = np.rint(signal.samples)
    low, high = float(rounded.min()), float(rounded.max())
    if low < INT16_MIN or high > INT16_MAX:
        raise SampleRangeError(
            f"samples span [{low:.0f}, {high:.0f}], outside the 16-bit range [{INT16_MIN}, {INT16_MAX}]"
        )
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        sf.write(str(target), rounded.astype(np.int16), signal.sample_rate, subtype="PCM_16", format="WAV")
    except (OSError, RuntimeError) as e:
        raise AudioIOError(f"cannot write {target}: {e}") from e
    logger.info(f"Wrote {len(signal)} samples to {target}")


def require_sample_rate(signal: Signal, expected: int = DEFAULT_SAMPLE_RATE) -> Signal:
    """Reject signals at any other rate; nothing is resampled."""
    if signal.sample_rate != expected:
        raise InputError(
            f"{signal.source_id or 'signal'}: sample rate {signal.sample_rate} Hz, expected {expected} Hz "
            "(resample the file before analysis)"
        )
    return signal


def _binomial_draws(spec: NoiseSpec, count: int) -> np.ndarray:
    rng = np.random.Generator(np.random.MT19937(spec.seed))
    draws = rng.binomial(spec.n_trials, spec.p, size=count) - spec.offset
    return draws.astype(np.float64)


def generate_white_noise(spec: NoiseSpec, sample_rate: int = DEFAULT_SAMPLE_RATE) -> Signal:
    """
    Draw integer white noise B(n_trials, p) - offset from a seeded Mersenne Twister.

    With the defaults the samples lie in [-10, 10] with mean 0 and variance 5.
    """
    count = int(round(spec.duration_s * sample_rate))
    if count <= 0:
        raise InputError(f"noise duration {spec.duration_s} s yields no samples at {sample_rate} Hz")
    samples = _binomial_draws(spec, count)
    logger.info(
        f"Generated {count} noise samples (seed={spec.seed}, mean={samples.mean():.4f}, var={samples.var():.4f})"
    )
    return Signal(samples=samples, sample_rate=sample_rate, source_id=f"white-noise(seed={spec.seed})")


def add_noise_floor(signal: Signal, spec: NoiseSpec) -> Signal:
    """Add fresh noise from ``spec`` sample by sample; length and rate are kept."""
    floor = _binomial_draws(spec, len(signal))
    return Signal(
        samples=signal.samples + floor,
        sample_rate=signal.sample_rate,
        source_id=signal.source_id,
    )


def synthesize_archetype(
    kind: Union[ArchetypeKind, str],
    duration_s: float,
    frequency: Optional[float] = None,
    amplitude: float = 1.0,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
) -> Signal:
    """
    Build a test signal.

    Args:
        kind: tone, click_train or silence
        duration_s: Length in seconds
        frequency: Tone frequency or click rate in Hz (ignored for silence)
        amplitude: Peak value of the tone, height of each click
        sample_rate: Output rate in Hz

    Returns:
        Signal labelled with its recipe
    """
    kind = ArchetypeKind(kind)
    count = int(round(duration_s * sample_rate))
    if count <= 0:
        raise ConfigError(f"duration {duration_s} s yields no samples")

    if kind is ArchetypeKind.SILENCE:
        return Signal(samples=np.zeros(count), sample_rate=sample_rate, source_id="silence")

    if frequency is None or frequency <= 0:
        raise ConfigError(f"{kind.value} needs a positive frequency, got {frequency}")
    if frequency >= sample_rate / 2:
        raise ConfigError(f"frequency {frequency} Hz aliases at {sample_rate} Hz")

    if kind is ArchetypeKind.TONE:
        t = np.arange(count) / sample_rate
        samples = amplitude * np.sin(2.0 * np.pi * frequency * t)
    else:
        samples = np.zeros(count)
        positions = np.round(np.arange(0.0, duration_s, 1.0 / frequency) * sample_rate).astype(np.int64)
        samples[positions[positions < count]] = amplitude

    return Signal(samples=samples, sample_rate=sample_rate, source_id=f"{kind.value}({frequency:g} Hz)")
