"""
Exports: CSV tables, binary matrices and text summaries.

Every file starts with a provenance block of '# key: value' lines (JSON files
carry the same fields under "provenance"). Nothing time-dependent is written,
so identical inputs produce identical bytes.

Binary matrix layout (little-endian):
  4s   magic b"TXCG"
  u32  format version (1)
  u32  frames
  u32  channels
  f64  frame rate (Hz)
  f64  channel frequencies [channels]
  f32  values [frames x channels], row-major
"""

from __future__ import annotations

import io
import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from app.core.errors import AudioIOError, InputError
from app.core.texture_defaults import TOOL_NAME, TOOL_VERSION
from app.models.texture import FeatureHistogram, PrevalenceReport
from app.schemas.texture import RunConfig

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MATRIX_MAGIC = b"TXCG"
MATRIX_VERSION = 1
_HEADER = np.dtype([("magic", "S4"), ("version", "<u4"), ("frames", "<u4"), ("channels", "<u4"), ("frame_rate", "<f8")])


def provenance(config: RunConfig, profile_id: str = "", **extra: Any) -> Dict[str, Any]:
    fields: Dict[str, Any] = {
        "tool": f"{TOOL_NAME} {TOOL_VERSION}",
        "config_hash": config.filterbank.config_hash(),
        "profile_id": profile_id,
        "seed": config.seed,
    }
    fields.update(extra)
    fields["config"] = config.canonical_json()
    return fields


def provenance_lines(fields: Dict[str, Any]) -> List[str]:
    return [f"# {key}: {value}" for key, value in fields.items()]


def _write(path: PathLike, text: str) -> Path:
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding="utf-8")
    except OSError as e:
        raise AudioIOError(f"cannot write {target}: {e}") from e
    return target


def write_csv(frame: pd.DataFrame, path: PathLike, fields: Dict[str, Any]) -> Path:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    target = _write(path, "\n".join(provenance_lines(fields)) + "\n" + buffer.getvalue())
    logger.info(f"Wrote {len(frame)} row(s) to {target}")
    return target


def read_csv(path: PathLike) -> pd.DataFrame:
    target = Path(path)
    if not target.is_file():
        raise AudioIOError(f"table not found: {target}")
    try:
        return pd.read_csv(target, comment="#")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise InputError(f"{target} is not a readable CSV table: {e}") from e


def write_json(payload: Dict[str, Any], path: PathLike, fields: Dict[str, Any]) -> Path:
    document = {"provenance": fields, **payload}
    return _write(path, json.dumps(document, indent=2, allow_nan=False, default=_json_default) + "\n")


def _json_default(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_matrix_csv(
    matrix: np.ndarray,
    channel_frequencies: np.ndarray,
    path: PathLike,
    fields: Dict[str, Any],
) -> Path:
    """Frames x channels; header row holds the channel frequencies in Hz."""
    frame = pd.DataFrame(np.asarray(matrix), columns=[f"{f:.4f}" for f in channel_frequencies])
    return write_csv(frame, path, fields)


def write_matrix_binary(
    matrix: np.ndarray,
    frame_rate: float,
    channel_frequencies: np.ndarray,
    path: PathLike,
) -> Path:
    values = np.asarray(matrix, dtype="<f4")
    freqs = np.asarray(channel_frequencies, dtype="<f8")
    if values.ndim != 2 or values.shape[1] != freqs.size:
        raise InputError(f"matrix shape {values.shape} does not match {freqs.size} frequencies")
    header = np.array([(MATRIX_MAGIC, MATRIX_VERSION, values.shape[0], values.shape[1], frame_rate)], dtype=_HEADER)
    target = Path(path)
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(header.tobytes() + freqs.tobytes() + np.ascontiguousarray(values).tobytes())
    except OSError as e:
        raise AudioIOError(f"cannot write {target}: {e}") from e
    return target


def read_matrix_binary(path: PathLike) -> Tuple[np.ndarray, float, np.ndarray]:
    """Inverse of write_matrix_binary: (values float32, frame_rate, frequencies)."""
    target = Path(path)
    if not target.is_file():
        raise AudioIOError(f"matrix file not found: {target}")
    data = target.read_bytes()
    if len(data) < _HEADER.itemsize:
        raise InputError(f"{target} is too short for a matrix header")
    header = np.frombuffer(data[:_HEADER.itemsize], dtype=_HEADER)[0]
    if header["magic"] != MATRIX_MAGIC or header["version"] != MATRIX_VERSION:
        raise InputError(f"{target} is not a version {MATRIX_VERSION} matrix file")
    frames, channels = int(header["frames"]), int(header["channels"])
    offset = _HEADER.itemsize
    freqs = np.frombuffer(data, dtype="<f8", count=channels, offset=offset)
    offset += 8 * channels
    expected = offset + 4 * frames * channels
    if len(data) != expected:
        raise InputError(f"{target} has {len(data)} bytes, expected {expected}")
    values = np.frombuffer(data, dtype="<f4", count=frames * channels, offset=offset).reshape(frames, channels)
    return values.copy(), float(header["frame_rate"]), freqs.copy()


def histogram_frame(hist: FeatureHistogram) -> pd.DataFrame:
    return pd.DataFrame({
        "bin_low": hist.bin_edges[:-1],
        "bin_high": hist.bin_edges[1:],
        "density": hist.densities,
        "flags": "",
    })


def prevalence_frame(report: PrevalenceReport) -> pd.DataFrame:
    flags = np.where(~report.defined, "undefined", np.where(np.isneginf(report.log10_ratio), "no_sound", ""))
    return pd.DataFrame({
        "bin_low": report.bin_edges[:-1],
        "bin_high": report.bin_edges[1:],
        "log10_ratio": report.log10_ratio,
        "flags": flags,
    })


def write_histogram(hist: FeatureHistogram, path: PathLike, fields: Dict[str, Any]) -> Path:
    tallies = {"samples": hist.sample_count, "underflow": hist.underflow, "overflow": hist.overflow}
    return write_csv(histogram_frame(hist), path, {**fields, **tallies})


def write_prevalence(report: PrevalenceReport, path: PathLike, fields: Dict[str, Any]) -> Path:
    return write_csv(prevalence_frame(report), path, fields)


def _format_r(value: Optional[float]) -> str:
    if value is None or not np.isfinite(value):
        return "   n/a"
    return f"{value:+.2f}"


def correlation_summary(grid: pd.DataFrame, intercorrelations: Optional[pd.DataFrame] = None) -> str:
    """Plain-text tables: one block per weighting, descriptors x MDS dimensions."""
    lines: List[str] = []
    for weighting in sorted(grid["weighting"].unique()):
        block = grid[grid["weighting"] == weighting]
        matched = int(block["matched"].iloc[0])
        lines.append(f"{weighting} weighting ({matched} matched sounds)")
        lines.append(f"{'':<4}{'MDS1':>16}{'MDS2':>16}{'MDS3':>16}")
        for name in ("P", "T", "N"):
            cells = []
            for dimension in ("mds1", "mds2", "mds3"):
                row = block[(block["descriptor"] == name) & (block["dimension"] == dimension)].iloc[0]
                cells.append(f"{_format_r(row['r'])} ({_format_r(row['published_r'])})")
            lines.append(f"{name:<4}" + "".join(f"{c:>16}" for c in cells))
        lines.append("")
    if intercorrelations is not None and not intercorrelations.empty:
        lines.append("descriptor intercorrelations")
        for _, row in intercorrelations.iterrows():
            lines.append(f"  {row['weighting']:<7}{row['pair']:<5}{_format_r(row['r'])} ({_format_r(row['published_r'])})")
        lines.append("")
    lines.append("values in parentheses: published reference")
    return "\n".join(lines) + "\n"


def write_text(text: str, path: PathLike, fields: Dict[str, Any]) -> Path:
    return _write(path, "\n".join(provenance_lines(fields)) + "\n" + text)


def clean_json(data: Any) -> Any:
    """Replace NaN/Inf with None so the structure is strict JSON."""
    if isinstance(data, dict):
        return {k: clean_json(v) for k, v in data.items()}
    if isinstance(data, (list, tuple)):
        return [clean_json(item) for item in data]
    if isinstance(data, float):
        if math.isnan(data) or math.isinf(data):
            return None
        return float(data)
    if isinstance(data, np.integer):
        return int(data)
    return data
