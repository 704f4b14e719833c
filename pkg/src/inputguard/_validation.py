"""Input validation helpers used at the public entry points."""

import numpy as np

from .errors import DimensionError, InputError, NumericError


def as_float_matrix(x, name="X"):
    """Coerce to a 2-D float64 array with finite entries and size >= 1x1."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InputError(f"{name} must have at least one row and column, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite entries")
    return arr


def as_float_vector(x, name="v"):
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size < 1:
        raise InputError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite entries")
    return arr


def as_label_vector(y, name="labels"):
    arr = np.asarray(y)
    if arr.ndim != 1:
        arr = arr.ravel()
    if arr.size < 1:
        raise InputError(f"{name} must be non-empty")
    try:
        out = arr.astype(np.int64)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} must be integer class ids") from exc
    if not np.array_equal(out, np.asarray(arr, dtype=np.float64)):
        raise InputError(f"{name} must be integer class ids")
    return out


def check_same_rows(name_a, a, name_b, b):
    if a.shape[0] != b.shape[0]:
        raise InputError(
            f"{name_a} and {name_b} must be row-aligned: {a.shape[0]} vs {b.shape[0]} rows"
        )


def as_image(img, name="image"):
    """Coerce to float64 pixels in [0, 255]; accepts (..., H, W) stacks."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim < 2:
        raise DimensionError(f"{name} must have at least 2 dimensions, got {arr.ndim}")
    if min(arr.shape[-2:]) < 1:
        raise InputError(f"{name} spatial dimensions must be >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains non-finite pixels")
    if arr.min() < 0.0 or arr.max() > 255.0:
        raise InputError(
            f"{name} pixels must lie in [0, 255], got range "
            f"[{arr.min():.3f}, {arr.max():.3f}]"
        )
    return arr
