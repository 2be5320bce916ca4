"""
API Test Suite
Exercises every endpoint in-process with the FastAPI TestClient on an
8-channel filterbank, so a full calibration takes a few seconds.
"""

import io

import numpy as np
import pytest
import soundfile as sf
from fastapi.testclient import TestClient

from app.main import app
from app.services.signal_io import synthesize_archetype

client = TestClient(app)

SMALL_FILTERBANK_ENV = {
    "TEXTURE_N_SEG": "8",
    "TEXTURE_F_MIN": "300",
    "TEXTURE_F_MAX": "8000",
    "TEXTURE_T_MAX_S": "0.02",
}


@pytest.fixture(autouse=True)
def texture_env(monkeypatch, tmp_path):
    for key, value in SMALL_FILTERBANK_ENV.items():
        monkeypatch.setenv(key, value)
    monkeypatch.setenv("TEXTURE_PROFILE", str(tmp_path / "profile.json"))
    monkeypatch.setenv("TEXTURE_OUT_DIR", str(tmp_path / "output"))


def wav_upload(samples: np.ndarray, subtype: str = "PCM_16", name: str = "sound.wav"):
    buffer = io.BytesIO()
    sf.write(buffer, samples, 44_100, format="WAV", subtype=subtype)
    return {"file": (name, buffer.getvalue(), "audio/wav")}


def tone_upload():
    tone = synthesize_archetype("tone", 0.5, 1000.0, amplitude=10_000.0)
    return wav_upload(tone.samples.round().astype(np.int16), name="tone.wav")


def test_health():
    response = client.get("/api/health")
    assert response.status_code == 200
    body = response.json()
    assert body["status"] == "healthy"
    assert body["profile"] == "missing"


def test_root():
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["docs"] == "/docs"


def test_profile_missing():
    assert client.get("/api/texture/profile").status_code == 404


def test_describe_rejects_float_wav():
    response = client.post("/api/texture/describe", files=wav_upload(np.zeros(1000, dtype=np.float32), "FLOAT"))
    assert response.status_code == 422


def test_describe_needs_profile():
    assert client.post("/api/texture/describe", files=tone_upload()).status_code == 404


def test_calibrate_validation():
    assert client.post("/api/texture/calibrate", json={"duration_s": 0}).status_code == 422


def test_calibrate_describe_analyze(monkeypatch):
    response = client.post("/api/texture/calibrate", json={"duration_s": 5, "seed": 3})
    assert response.status_code == 200
    summary = response.json()
    assert summary["n_channels"] == 8
    assert summary["seed"] == 3

    profile = client.get("/api/texture/profile").json()
    assert profile["profile_id"] == summary["profile_id"]
    assert client.get("/api/health").json()["profile"] == "present"

    rows = client.post("/api/texture/describe", files=tone_upload()).json()
    assert [row["weighting"] for row in rows] == ["energy", "area"]
    assert all(row["file"] == "tone.wav" for row in rows)

    analysis = client.post("/api/texture/analyze", files=tone_upload())
    assert analysis.status_code == 200
    body = analysis.json()
    assert set(body["ks_distance"]) == {"o_h", "o_v", "t_vert", "t_horiz"}
    assert len(body["descriptors"]) == 2

    monkeypatch.setenv("TEXTURE_N_SEG", "9")
    assert client.get("/api/texture/profile").status_code == 409


def test_compare():
    ids = [f"s{i}" for i in range(5)]
    mds1 = [-1.0, -0.5, 0.0, 0.5, 1.0]
    payload = {
        "descriptors": [
            {"file": f"{sid}.wav", "weighting": "energy", "P": -x, "T": x, "N": None if i == 0 else -0.5 - 0.1 * i,
             "n_valid_cells": 100}
            for i, (sid, x) in enumerate(zip(ids, mds1))
        ],
        "perceptual": [
            {"sound_id": sid, "category": "impact", "mds1": x, "mds2": 0.1 * i, "mds3": (-1.0) ** i}
            for i, (sid, x) in enumerate(zip(ids, mds1))
        ],
    }
    response = client.post("/api/texture/compare", json=payload)
    assert response.status_code == 200
    body = response.json()
    assert body["matched"] == 5
    assert len(body["cells"]) == 9
    p_mds1 = next(c for c in body["cells"] if c["descriptor"] == "P(energy)" and c["dimension"] == "mds1")
    assert p_mds1["r"] == pytest.approx(-1.0)
    n_mds2 = next(c for c in body["cells"] if c["descriptor"] == "N(energy)" and c["dimension"] == "mds2")
    assert n_mds2["n"] == 4 and n_mds2["excluded"] == 1

    payload["perceptual"][0]["category"] = "animal"
    assert client.post("/api/texture/compare", json=payload).status_code == 422
