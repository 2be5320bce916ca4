"""
FastAPI Backend - Texture Analysis
Thin HTTP layer over the texture engine. Calibration state lives in the
profile files on disk; the API itself is stateless.
"""

import logging
import os
from datetime import datetime

import uvicorn
from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from app.api.texture import router as texture_router
from app.core.config import load_run_config
from app.core.errors import ConfigError
from app.core.texture_defaults import TOOL_VERSION
from app.repositories.profile_repo import get_profile_repo

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

# Initialize FastAPI app
app = FastAPI(
    title="Texture Analysis API",
    description="Tonal, pulsal and noisy texture descriptors on a calibrated gammachirp cochleagram",
    version=TOOL_VERSION
)

# Comma-separated override, e.g. TEXTURE_CORS_ORIGINS=https://example.org,http://localhost:3000
allowed_origins = [
    origin.strip()
    for origin in os.getenv(
        "TEXTURE_CORS_ORIGINS",
        "http://localhost:8000,http://localhost:3000,http://127.0.0.1:8000,http://127.0.0.1:3000",
    ).split(",")
    if origin.strip()
]

app.add_middleware(
    CORSMiddleware,
    allow_origins=allowed_origins,
    allow_credentials=True,
    allow_methods=["GET", "POST", "OPTIONS"],
    allow_headers=["*"],
    max_age=3600,
)

app.include_router(texture_router)


@app.get("/api/health", tags=["Health"])
async def health_check():
    """Health check endpoint."""
    try:
        config = load_run_config()
    except ConfigError as e:
        return {
            "status": "unhealthy",
            "error": str(e),
            "timestamp": datetime.now().isoformat()
        }
    return {
        "status": "healthy",
        "profile": "present" if get_profile_repo(config.profile_path).exists() else "missing",
        "config_hash": config.filterbank.config_hash(),
        "timestamp": datetime.now().isoformat()
    }


@app.get("/", tags=["Root"])
async def root():
    """Root endpoint."""
    return {
        "message": "Texture Analysis API",
        "version": TOOL_VERSION,
        "docs": "/docs",
    }


@app.exception_handler(Exception)
async def global_exception_handler(request: Request, exc: Exception):
    """Global exception handler so unexpected failures still return JSON."""
    if isinstance(exc, HTTPException):
        raise exc

    logger.error(f"Unhandled exception on {request.url.path}: {str(exc)}", exc_info=True)
    return JSONResponse(
        status_code=500,
        content={
            "status": "error",
            "message": "Internal server error",
            "detail": str(exc) if logger.isEnabledFor(logging.DEBUG) else None
        }
    )


if __name__ == "__main__":
    # For local development
    port = int(os.getenv("PORT", 8000))
    uvicorn.run(
        "app.main:app",
        host="0.0.0.0",
        port=port,
        reload=True,
        log_level="info"
    )
