"""End-to-end checks on the default 133-channel filterbank (slow: real calibration)."""

import numpy as np
import pytest

from app.schemas.texture import NoiseSpec, Weighting
from app.services import analysis
from app.services.descriptors import compute_descriptors
from app.services.filterbank import compute_cochleagram
from app.services.signal_io import generate_white_noise, synthesize_archetype
from app.services.texture import compute_texture
from app.services.texture_engine import FEATURES, sparse_values

pytestmark = pytest.mark.slow

TONE_HZ = 1000.0


def _energy_row(rows):
    return next(row for row in rows if row["weighting"] == "energy")


def _report(engine, maps, name):
    reference = engine.profiles.load_reference()
    sound = analysis.histogram(maps.valid_values(name), analysis.FEATURE_KINDS[name], feature=name)
    return analysis.prevalence(sound, reference.histograms[name])


def _modal_bin_centre(hist):
    centres = 0.5 * (hist.bin_edges[:-1] + hist.bin_edges[1:])
    return centres[int(np.argmax(hist.densities))]


@pytest.fixture(scope="module")
def archetypes(calibrated_engine):
    """5 s tone, 10 Hz click train and white noise: cochleagram, maps and energy-weighted descriptors."""
    engine = calibrated_engine
    profile = engine.load_profile()
    signals = {
        "tone": synthesize_archetype("tone", 5.0, TONE_HZ, amplitude=10_000.0),
        "clicks": synthesize_archetype("click_train", 5.0, 10.0, amplitude=30_000.0),
        "noise": generate_white_noise(NoiseSpec(duration_s=5.0, seed=engine.config.seed + 3000)),
    }
    results = {}
    for name, signal in signals.items():
        cochleagram, maps = engine.texture(signal, profile)
        triple = compute_descriptors(maps, cochleagram, engine.config.descriptor_config(Weighting.ENERGY), name)
        results[name] = (cochleagram, maps, triple)
    return results


def test_profile_shape(calibrated_engine):
    profile = calibrated_engine.load_profile()
    assert profile.n_channels == 133
    assert all(eps > 0 for eps in profile.eps_t)
    # narrow low-frequency filters stay correlated longer in time
    assert profile.eps_t[0] > profile.eps_t[-1]
    assert profile.eps_f[0] is None
    assert profile.eps_f_up[-1] is None
    assert profile.unavailable_freq_channels < profile.n_channels // 2


def test_tone_is_tonal(calibrated_engine):
    tone = synthesize_archetype("tone", 2.0, TONE_HZ, amplitude=10_000.0)
    row = _energy_row(calibrated_engine.describe_signal(tone))
    assert row["T"] > row["P"]


def test_clicks_are_pulsal(calibrated_engine):
    clicks = synthesize_archetype("click_train", 2.0, 10.0, amplitude=30_000.0)
    row = _energy_row(calibrated_engine.describe_signal(clicks))
    assert row["P"] > row["T"]


def test_each_archetype_leads_its_own_descriptor(archetypes):
    triples = {name: result[2] for name, result in archetypes.items()}
    assert max(triples, key=lambda name: triples[name].tonality) == "tone"
    assert max(triples, key=lambda name: triples[name].pulsality) == "clicks"
    assert max(triples, key=lambda name: triples[name].noisiness) == "noise"


def test_tone_band_tract_medians(archetypes):
    cochleagram, maps, _ = archetypes["tone"]
    channel = int(np.argmin(np.abs(cochleagram.channel_frequencies - TONE_HZ)))
    horiz = maps.t_horiz[maps.valid_t_horiz[:, channel], channel]
    vert = maps.t_vert[maps.valid_t_vert[:, channel], channel]
    assert horiz.size and vert.size
    assert np.median(horiz) > 8.0
    assert np.median(vert) < 5.0


def test_clicks_enrich_high_temporal_contrast(calibrated_engine, archetypes):
    _, maps, _ = archetypes["clicks"]
    report = _report(calibrated_engine, maps, "o_h")
    high = report.defined & (report.bin_edges[:-1] >= 0.0)
    assert np.max(report.log10_ratio[high]) >= 2.0


def test_tone_enriches_low_pulse_tract(calibrated_engine, archetypes):
    _, maps, _ = archetypes["tone"]
    report = _report(calibrated_engine, maps, "t_vert")
    low = report.defined & (report.bin_edges[1:] <= 4.0)
    assert np.max(report.log10_ratio[low]) >= 2.0


def test_round_mode_noise_tract_peak_near_six_db(round_engine):
    reference = round_engine.profiles.load_reference()
    for name in ("t_vert", "t_horiz"):
        assert 5.0 <= _modal_bin_centre(reference.histograms[name]) <= 7.0


def test_independent_noise_keeps_reference_prevalence(calibrated_engine):
    engine = calibrated_engine
    profile = engine.load_profile()
    reference = engine.profiles.load_reference()
    noise = generate_white_noise(NoiseSpec(duration_s=20.0, seed=engine.config.seed + 2000))
    _, maps = engine.texture(noise, profile)
    for name in FEATURES:
        report = _report(engine, maps, name)
        base = reference.histograms[name]
        # bins holding at least 1% of the reference mass (densities are percent per dB)
        populated = report.defined & (base.densities * base.bin_widths >= 1.0)
        assert populated.any()
        assert np.all(np.abs(report.log10_ratio[populated]) < 0.15)


def test_fresh_noise_matches_reference(calibrated_engine):
    engine = calibrated_engine
    profile = engine.load_profile()
    reference = engine.profiles.load_reference()
    noise = generate_white_noise(NoiseSpec(duration_s=60.0, seed=engine.config.seed + 1000))
    cochleagram = compute_cochleagram(noise, engine.config.filterbank, workers=2)
    maps = compute_texture(cochleagram, profile, engine.config.tract, engine.config.offset_mode)
    for name in ("t_vert", "t_horiz"):
        assert analysis.ks_distance(sparse_values(maps, name), reference.samples[name]) < 0.03
