import io
import logging

import numpy as np
import pytest
import soundfile as sf
from hypothesis import given, settings
from hypothesis import strategies as st

from app.core.errors import AudioFormatError, AudioIOError, ConfigError, InputError, SampleRangeError
from app.models.texture import Signal
from app.schemas.texture import NoiseSpec
from app.services.signal_io import (
    add_noise_floor,
    generate_white_noise,
    read_wav,
    require_sample_rate,
    synthesize_archetype,
    write_wav,
)


def test_wav_keeps_integer_amplitudes(tmp_path):
    samples = np.array([0, 1, -1, 32767, -32768, 1234], dtype=np.float64)
    write_wav(Signal(samples=samples, sample_rate=44_100), tmp_path / "x.wav")

    signal = read_wav(tmp_path / "x.wav")
    np.testing.assert_array_equal(signal.samples, samples)
    assert signal.sample_rate == 44_100
    assert signal.source_id == "x.wav"


def test_read_from_stream():
    buffer = io.BytesIO()
    sf.write(buffer, np.array([3, -3, 7], dtype=np.int16), 44_100, format="WAV", subtype="PCM_16")
    buffer.seek(0)
    signal = read_wav(buffer, source_id="upload.wav")
    np.testing.assert_array_equal(signal.samples, [3.0, -3.0, 7.0])
    assert signal.source_id == "upload.wav"


def test_missing_file(tmp_path):
    with pytest.raises(AudioIOError):
        read_wav(tmp_path / "absent.wav")


def test_float_wav_rejected(tmp_path):
    path = tmp_path / "float.wav"
    sf.write(str(path), np.zeros(100, dtype=np.float32), 44_100, subtype="FLOAT")
    with pytest.raises(AudioFormatError):
        read_wav(path)


def test_stereo_uses_first_channel(tmp_path, caplog):
    path = tmp_path / "stereo.wav"
    data = np.stack([np.arange(10), -np.arange(10)], axis=1).astype(np.int16)
    sf.write(str(path), data, 44_100, subtype="PCM_16")
    with caplog.at_level(logging.WARNING):
        signal = read_wav(path)
    np.testing.assert_array_equal(signal.samples, np.arange(10))
    assert "channel 0" in caplog.text


def test_write_refuses_to_clip(tmp_path):
    with pytest.raises(SampleRangeError):
        write_wav(Signal(samples=[0.0, 40_000.0], sample_rate=44_100), tmp_path / "loud.wav")


def test_other_sample_rates_rejected():
    signal = Signal(samples=np.ones(10), sample_rate=48_000)
    with pytest.raises(InputError):
        require_sample_rate(signal)
    assert require_sample_rate(signal, 48_000) is signal


def test_empty_signal_rejected():
    with pytest.raises(InputError):
        Signal(samples=np.array([]), sample_rate=44_100)


def test_white_noise_statistics():
    noise = generate_white_noise(NoiseSpec(duration_s=2.0, seed=3))
    assert len(noise) == 88_200
    assert noise.samples.min() >= -10 and noise.samples.max() <= 10
    assert np.all(noise.samples == np.round(noise.samples))
    assert abs(noise.samples.mean()) < 0.05
    assert abs(noise.samples.var() - 5.0) < 0.15


def test_white_noise_is_seeded():
    a = generate_white_noise(NoiseSpec(duration_s=0.1, seed=11))
    b = generate_white_noise(NoiseSpec(duration_s=0.1, seed=11))
    c = generate_white_noise(NoiseSpec(duration_s=0.1, seed=12))
    np.testing.assert_array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), trials=st.integers(1, 40))
def test_noise_stays_in_binomial_support(seed, trials):
    spec = NoiseSpec(n_trials=trials, offset=trials // 2, duration_s=0.005, seed=seed)
    samples = generate_white_noise(spec).samples
    assert samples.min() >= -(trials // 2)
    assert samples.max() <= trials - trials // 2


def test_noise_floor_keeps_length_and_rate():
    tone = synthesize_archetype("tone", 0.1, 440.0, amplitude=1000.0)
    floored = add_noise_floor(tone, NoiseSpec(duration_s=tone.duration_s, seed=2))
    assert len(floored) == len(tone)
    assert floored.sample_rate == tone.sample_rate
    residual = floored.samples - tone.samples
    assert residual.min() >= -10 and residual.max() <= 10
    assert np.any(residual != 0)


def test_archetypes():
    tone = synthesize_archetype("tone", 1.0, 1000.0, amplitude=8000.0)
    assert len(tone) == 44_100
    assert tone.samples.max() == pytest.approx(8000.0, rel=1e-3)

    clicks = synthesize_archetype("click_train", 1.0, 10.0, amplitude=30_000.0)
    assert np.count_nonzero(clicks.samples) == 10
    assert clicks.samples[0] == 30_000.0
    assert clicks.samples[4410] == 30_000.0

    silence = synthesize_archetype("silence", 0.5)
    assert not np.any(silence.samples)


def test_archetype_frequency_checks():
    with pytest.raises(ConfigError):
        synthesize_archetype("tone", 1.0, 30_000.0)
    with pytest.raises(ConfigError):
        synthesize_archetype("click_train", 1.0, None)
