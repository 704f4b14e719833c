"""Exception types shared across the package.

Most errors subclass ValueError so callers using plain try/except ValueError
keep working; StateError marks missing runtime state (unfitted estimator,
absent artifacts) and subclasses RuntimeError instead.
"""


class GuardError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(GuardError, ValueError):
    """Array shapes do not line up."""


class InputError(GuardError, ValueError):
    """Invalid input data: empty, misaligned, or out of contract."""


class NumericError(GuardError, ValueError):
    """Non-finite values where finite ones are required."""


class RangeError(GuardError, ValueError):
    """A degree or step outside its legal range."""


class MiningError(GuardError, ValueError):
    """A batch anchor lacks a positive or negative partner."""


class FormatError(GuardError, ValueError):
    """A file does not conform to its declared binary/JSON schema."""


class CalibrationError(GuardError, ValueError):
    """Threshold calibration failed; message carries distance summaries."""


class StateError(GuardError, RuntimeError):
    """Required state (fitted model, artifacts on disk) is missing."""
