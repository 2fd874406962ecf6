"""Input coercion and validation helpers.

Every public entry point funnels array-likes through these so the rest of the
package can assume finite, float64, C-ordered, 2-D arrays.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite float64 2-D C-ordered array."""
    arr = np.array(a, dtype=np.float64, order="C", copy=True)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError(f"{name} must be non-empty, got shape {arr.shape}")
    check_finite(arr, name)
    return arr


def check_finite(a: np.ndarray, name: str = "matrix") -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")


def check_square(a: np.ndarray, name: str = "matrix") -> None:
    if a.shape[0] != a.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {a.shape}")


def check_same_shape(a: np.ndarray, b: np.ndarray, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op} requires identical shapes, got {a.shape} and {b.shape}")


def frozen(a: np.ndarray) -> np.ndarray:
    """Return a read-only copy; stored fields stay immutable after validation."""
    out = np.array(a, dtype=np.float64, order="C", copy=True)
    out.flags.writeable = False
    return out
