"""Input validation helpers used by the estimators and the functional API."""

import numbers

import numpy as np

from .exceptions import DataError


def check_losses(X, *, name="X", allow_negative=False, min_samples=1):
    """Coerce ``X`` to a 1-D float64 array of finite values.

    Accepts a flat sequence or a single-column 2-D array, which is what a
    scikit-learn pipeline hands to a univariate step.
    """
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise DataError(f"{name} must have exactly one feature, got {arr.shape[1]}")
        arr = arr[:, 0]
    elif arr.ndim != 1:
        raise DataError(f"{name} must be 1-D or a single column, got ndim={arr.ndim}")
    if arr.shape[0] < min_samples:
        raise DataError(f"{name} needs at least {min_samples} sample(s), got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite values")
    if not allow_negative and np.any(arr < 0):
        raise DataError(f"{name} contains negative values")
    return arr


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return float(value)


def check_grid(grid):
    arr = np.asarray(grid, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValueError("lambda grid is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError("lambda grid contains non-finite values")
    return arr
