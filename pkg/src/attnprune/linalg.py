"""Dense float64 matrix primitives used by every other module.

Matrices are plain numpy float64 2-D arrays (row-major). The wrappers here add
the shape/finiteness contracts the rest of the package relies on.
"""

from __future__ import annotations

import numpy as np

from ._validation import as_matrix, check_finite, check_same_shape, check_square
from .errors import NumericError, ShapeError


def matmul(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    return a @ b


def hadamard(a, b) -> np.ndarray:
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    check_same_shape(a, b, "hadamard")
    return a * b


def transpose(a) -> np.ndarray:
    # explicit copy so the result is itself row-major, not a strided view
    return np.ascontiguousarray(as_matrix(a, "a").T)


def frobenius_norm(a) -> float:
    a = as_matrix(a, "a")
    return float(np.sqrt(np.sum(a * a)))


def svd(a) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full SVD of a square matrix: a == U @ diag(s) @ V.T.

    Returns (U, s, V) with s non-negative and non-increasing.
    """
    a = as_matrix(a, "a")
    check_square(a, "a")
    try:
        u, s, vh = np.linalg.svd(a)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"svd did not converge: {exc}") from exc
    return np.ascontiguousarray(u), s, np.ascontiguousarray(vh.T)


def kth_largest(values, k: int) -> float:
    """k-th largest element (1-based) under the order (value desc, index asc).

    Deterministic under ties: equal values rank in original index order.
    """
    vals = np.asarray(values, dtype=np.float64).ravel()
    if vals.size == 0:
        raise ValueError("values must be non-empty")
    check_finite(vals, "values")
    if not 1 <= k <= vals.size:
        raise ValueError(f"k must be in [1, {vals.size}], got {k}")
    order = np.argsort(-vals, kind="stable")
    return float(vals[order[k - 1]])
