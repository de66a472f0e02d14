"""Input validation helpers.

Converters return float64 numpy arrays so downstream arithmetic runs in
double precision regardless of how the caller stored the data.
"""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidInput, InvalidVector


def as_vector(x: Any, name: str = "vector", dim: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a finite 1-D float64 array.

    Args:
        x: array-like of numbers.
        name: label used in error messages.
        dim: required length, unchecked when None.

    Raises:
        InvalidInput: not coercible to a 1-D numeric array.
        InvalidVector: contains NaN or infinity.
        DimensionMismatch: length differs from ``dim``.
    """
    try:
        arr = np.asarray(x, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{name} is not numeric: {exc}") from None
    if arr.ndim != 1:
        raise InvalidInput(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInput(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidVector(f"{name} contains NaN or infinite values")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(
            f"{name} has length {arr.shape[0]}, expected {dim}"
        )
    return arr


def as_matrix(x: Any, name: str = "matrix", n_cols: int | None = None) -> np.ndarray:
    """Coerce ``x`` to a finite 2-D float64 array.

    Raises:
        InvalidInput: not coercible, wrong rank, or empty.
        InvalidVector: contains NaN or infinity.
        DimensionMismatch: column count differs from ``n_cols``.
    """
    try:
        arr = np.asarray(x, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{name} is not numeric: {exc}") from None
    if arr.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidInput(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise InvalidVector(f"{name} contains NaN or infinite values")
    if n_cols is not None and arr.shape[1] != n_cols:
        raise DimensionMismatch(
            f"{name} has {arr.shape[1]} columns, expected {n_cols}"
        )
    return arr


def check_fraction(value: float, name: str, *, inclusive: bool = False) -> float:
    """Validate a scalar in (0, 1), or [0, 1] when ``inclusive``."""
    v = float(value)
    if not np.isfinite(v):
        raise InvalidInput(f"{name} must be finite, got {value!r}")
    if inclusive:
        if not 0.0 <= v <= 1.0:
            raise InvalidInput(f"{name} must be in [0, 1], got {value!r}")
    elif not 0.0 < v < 1.0:
        raise InvalidInput(f"{name} must be in (0, 1), got {value!r}")
    return v


def check_non_negative(value: float, name: str) -> float:
    v = float(value)
    if not np.isfinite(v) or v < 0.0:
        raise InvalidInput(f"{name} must be a finite non-negative number, got {value!r}")
    return v


def check_positive_int(value: int, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise InvalidInput(f"{name} must be an integer, got {value!r}")
    if value <= 0:
        raise InvalidInput(f"{name} must be positive, got {value!r}")
    return int(value)


def check_choice(value: str, name: str, choices: Sequence[str]) -> str:
    if value not in choices:
        opts = ", ".join(choices)
        raise InvalidInput(f"{name} must be one of {{{opts}}}, got {value!r}")
    return value
