"""
Error hierarchy for the texture pipeline.

Every error carries the process exit code the CLI returns for it:
0 success, 2 config, 3 calibration mismatch, 4 I/O, 5 data.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CALIBRATION_MISMATCH = 3
EXIT_IO = 4
EXIT_DATA = 5


class TextureError(Exception):
    """Base class for all pipeline errors."""

    exit_code: int = EXIT_DATA


class ConfigError(TextureError, ValueError):
    """Invalid parameter or configuration value."""

    exit_code = EXIT_CONFIG


class ProfileVersionError(TextureError):
    """Calibration profile does not match the schema or the run configuration."""

    exit_code = EXIT_CALIBRATION_MISMATCH


class AudioIOError(TextureError, OSError):
    """File could not be read or written."""

    exit_code = EXIT_IO


class AudioFormatError(AudioIOError):
    """File is not a 16-bit PCM WAV."""


class InputError(TextureError, ValueError):
    """Input data is empty or otherwise unusable."""


class SampleRangeError(TextureError, ValueError):
    """Sample outside the 16-bit signed range."""


class NumericError(TextureError, ArithmeticError):
    """Zero energy, zero variance, or another degenerate numeric condition."""


class CalibrationError(TextureError):
    """Correlation distances could not be established."""


class DescriptorError(TextureError):
    """Descriptors cannot be computed (no valid cells)."""


class UndefinedCorrelationError(TextureError):
    """Pearson correlation undefined (zero variance or too few rows)."""


class FrameIndexError(TextureError, IndexError):
    """Frame index outside the cochleagram."""
