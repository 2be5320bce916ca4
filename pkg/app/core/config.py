"""
Run configuration loader.

Resolution order (later wins): defaults, TEXTURE_* environment variables,
a dotenv-style config file, explicit overrides (CLI flags / request bodies).
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from dotenv import dotenv_values, load_dotenv
from pydantic import ValidationError

from app.core.errors import ConfigError
from app.schemas.texture import RunConfig

load_dotenv()

logger = logging.getLogger(__name__)

ENV_PREFIX = "TEXTURE_"

# key -> (section, field). Section None means a top-level RunConfig field.
CONFIG_KEYS: Dict[str, tuple] = {
    "THETA": (None, "theta"),
    "C_P": ("tract", "c_p"),
    "C_T": ("tract", "c_t"),
    "GATE_THRESHOLD": (None, "gate_threshold"),
    "GATE_SLOPE": (None, "gate_slope"),
    "WEIGHTING": (None, "weighting"),
    "LOG_BASE": (None, "log_base"),
    "SEED": (None, "seed"),
    "PROFILE": (None, "profile_path"),
    "OUT_DIR": (None, "out_dir"),
    "N_SEG": ("filterbank", "n_seg"),
    "F_MIN": ("filterbank", "f_min"),
    "F_MAX": ("filterbank", "f_max"),
    "SAMPLE_RATE": ("filterbank", "sample_rate"),
    "T_MAX_S": ("filterbank", "t_max_s"),
    "DECIMATION_PRE": ("filterbank", "decimation_pre"),
    "DECIMATION_POST": ("filterbank", "decimation_post"),
    "NOISE_DURATION_S": (None, "noise_duration_s"),
    "ADD_FLOOR": (None, "add_floor"),
    "OFFSET_MODE": (None, "offset_mode"),
    "WORKERS": (None, "workers"),
    "LOG_LEVEL": (None, "log_level"),
}


def _merge(target: Dict[str, Any], key: str, value: Any, source: str) -> None:
    normalized = key.upper()
    if normalized.startswith(ENV_PREFIX):
        normalized = normalized[len(ENV_PREFIX):]
    if normalized not in CONFIG_KEYS:
        raise ConfigError(f"unknown configuration key '{key}' in {source}")
    section, name = CONFIG_KEYS[normalized]
    if section is None:
        target[name] = value
    else:
        target.setdefault(section, {})[name] = value


def _from_environment(environ: Mapping[str, str]) -> Dict[str, Any]:
    values: Dict[str, Any] = {}
    for key, value in environ.items():
        if key.startswith(ENV_PREFIX) and key[len(ENV_PREFIX):] in CONFIG_KEYS:
            _merge(values, key, value, "environment")
    return values


def _from_file(path: str) -> Dict[str, Any]:
    file_path = Path(path)
    if not file_path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values: Dict[str, Any] = {}
    for key, value in dotenv_values(file_path).items():
        if value is None:
            raise ConfigError(f"config key '{key}' in {path} has no value")
        _merge(values, key, value, path)
    return values


def _layer(base: Dict[str, Any], update: Dict[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict):
            merged[key] = {**merged.get(key, {}), **value}
        else:
            merged[key] = value
    return merged


def load_run_config(
    config_file: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
    environ: Optional[Mapping[str, str]] = None,
) -> RunConfig:
    """
    Resolve a RunConfig from environment, config file and overrides.

    Args:
        config_file: Optional dotenv-style KEY=value file (keys with or without TEXTURE_ prefix)
        overrides: Flat mapping of CONFIG_KEYS names to values; None values are ignored
        environ: Environment mapping (defaults to os.environ)

    Returns:
        Validated, frozen RunConfig

    Raises:
        ConfigError: Unknown key, missing file or invalid value
    """
    layers = _from_environment(os.environ if environ is None else environ)
    if config_file:
        layers = _layer(layers, _from_file(config_file))
    if overrides:
        flags: Dict[str, Any] = {}
        for key, value in overrides.items():
            if value is not None:
                _merge(flags, key, value, "overrides")
        layers = _layer(layers, flags)

    try:
        config = RunConfig(**layers)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e

    logger.debug(f"Resolved run configuration: {config.canonical_json()}")
    return config
