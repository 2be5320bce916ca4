"""REST routes for the calibration profile, per-file analysis and perceptual comparison."""

from __future__ import annotations

import io
import logging
from typing import List

import pandas as pd
from fastapi import APIRouter, File, HTTPException, UploadFile

from app.core.config import load_run_config
from app.core.errors import (
    AudioFormatError,
    AudioIOError,
    ConfigError,
    ProfileVersionError,
    TextureError,
)
from app.models.texture import Signal
from app.repositories.export_repo import clean_json
from app.schemas.texture import (
    AnalyzeSummary,
    CalibrateRequest,
    CompareRequest,
    CompareResponse,
    CorrelationCell,
    DescriptorRowRead,
    ProfileSummary,
)
from app.services.signal_io import read_wav
from app.services.texture_engine import TextureEngine, get_texture_engine

logger = logging.getLogger(__name__)

router = APIRouter(prefix="/api/texture", tags=["Texture"])


def _engine() -> TextureEngine:
    try:
        return get_texture_engine(load_run_config())
    except ConfigError as e:
        raise HTTPException(status_code=400, detail=str(e)) from e


def _http_error(e: TextureError) -> HTTPException:
    if isinstance(e, ConfigError):
        status = 400
    elif isinstance(e, AudioFormatError):
        status = 422
    elif isinstance(e, AudioIOError):
        status = 404
    elif isinstance(e, ProfileVersionError):
        status = 409
    else:
        status = 422
    logger.warning(f"Request failed ({status}): {e}")
    return HTTPException(status_code=status, detail=str(e))


async def _upload_signal(file: UploadFile) -> Signal:
    data = await file.read()
    if not data:
        raise HTTPException(status_code=422, detail="uploaded file is empty")
    return read_wav(io.BytesIO(data), source_id=file.filename or "upload.wav")


def _profile_summary(engine: TextureEngine) -> ProfileSummary:
    profile = engine.load_profile()
    return ProfileSummary(
        profile_id=profile.profile_id,
        config_hash=profile.config_hash,
        theta=profile.theta,
        duration_s=profile.duration_s,
        n_channels=profile.n_channels,
        unavailable_freq_channels=profile.unavailable_freq_channels,
        seed=profile.noise_spec.seed if profile.noise_spec else None,
    )


@router.get("/profile", response_model=ProfileSummary)
def get_profile() -> ProfileSummary:
    engine = _engine()
    try:
        return _profile_summary(engine)
    except TextureError as e:
        raise _http_error(e) from e


@router.post("/calibrate", response_model=ProfileSummary)
def calibrate(body: CalibrateRequest) -> ProfileSummary:
    engine = _engine()
    try:
        engine.calibrate(duration_s=body.duration_s, seed=body.seed)
        return _profile_summary(engine)
    except TextureError as e:
        raise _http_error(e) from e


@router.post("/describe", response_model=List[DescriptorRowRead])
async def describe(file: UploadFile = File(...)) -> List[DescriptorRowRead]:
    engine = _engine()
    try:
        signal = await _upload_signal(file)
        rows = engine.describe_signal(signal)
    except TextureError as e:
        raise _http_error(e) from e
    return [DescriptorRowRead.model_validate(clean_json(dict(r))) for r in rows]


@router.post("/analyze", response_model=AnalyzeSummary)
async def analyze(file: UploadFile = File(...)) -> AnalyzeSummary:
    engine = _engine()
    try:
        signal = await _upload_signal(file)
        summary = engine.analyze(signal)
    except TextureError as e:
        raise _http_error(e) from e
    return AnalyzeSummary.model_validate(clean_json(summary))


@router.post("/compare", response_model=CompareResponse)
def compare(body: CompareRequest) -> CompareResponse:
    engine = _engine()
    descriptors = pd.DataFrame([row.model_dump() for row in body.descriptors]).astype(
        {"P": float, "T": float, "N": float}
    )
    perceptual = pd.DataFrame([row.model_dump() for row in body.perceptual])
    try:
        grid, _ = engine.compare(descriptors, perceptual)
    except TextureError as e:
        raise _http_error(e) from e

    cells = [
        CorrelationCell(
            descriptor=f"{row['descriptor']}({row['weighting']})",
            dimension=row["dimension"],
            r=row["r"],
            abs_r=row["abs_r"],
            n=int(row["n"]),
            excluded=int(row["excluded"]),
            published_r=row["published_r"],
        )
        for row in clean_json(grid.to_dict("records"))
    ]
    return CompareResponse(matched=int(grid["matched"].max()), cells=cells)
