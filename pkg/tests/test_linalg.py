"""Dense kernels checked against hand values and brute-force oracles."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from attnprune import ShapeError
from attnprune.linalg import (
    frobenius_norm,
    hadamard,
    kth_largest,
    matmul,
    svd,
    transpose,
)


def test_matmul_hand_case():
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    b = np.array([[5.0, 6.0], [7.0, 8.0]])
    expected = np.array([[19.0, 22.0], [43.0, 50.0]])
    assert np.array_equal(matmul(a, b), expected)


def test_matmul_shape_mismatch():
    with pytest.raises(ShapeError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_rejects_non_finite():
    a = np.array([[1.0, np.nan]])
    with pytest.raises(ValueError):
        matmul(a, np.ones((2, 1)))


def test_hadamard_hand_case():
    a = np.array([[1.0, -2.0], [0.5, 4.0]])
    b = np.array([[3.0, 3.0], [2.0, -1.0]])
    assert np.array_equal(hadamard(a, b), np.array([[3.0, -6.0], [1.0, -4.0]]))


def test_hadamard_shape_mismatch():
    with pytest.raises(ShapeError):
        hadamard(np.ones((2, 2)), np.ones((2, 3)))


def test_transpose_returns_contiguous_copy():
    a = np.arange(6.0).reshape(2, 3)
    t = transpose(a)
    assert np.array_equal(t, a.T)
    assert t.flags["C_CONTIGUOUS"]
    a[0, 0] = 99.0
    assert t[0, 0] == 0.0


def test_frobenius_norm_hand_case():
    a = np.array([[3.0, 0.0], [0.0, 4.0]])
    assert frobenius_norm(a) == 5.0


def test_frobenius_norm_zero():
    assert frobenius_norm(np.zeros((3, 3))) == 0.0


def test_svd_reconstruction_and_orthogonality():
    rng = np.random.default_rng(3)
    a = rng.normal(size=(5, 5))
    u, s, v = svd(a)
    assert np.allclose(u @ np.diag(s) @ v.T, a, atol=1e-9)
    assert np.allclose(u.T @ u, np.eye(5), atol=1e-9)
    assert np.allclose(v.T @ v, np.eye(5), atol=1e-9)
    assert np.all(s >= 0)
    assert np.all(np.diff(s) <= 0)


def test_svd_rank_deficient():
    a = np.outer(np.arange(1.0, 5.0), np.arange(1.0, 5.0))
    u, s, v = svd(a)
    assert s[0] > 1.0
    assert np.all(s[1:] < 1e-9 * s[0])
    assert np.allclose(u @ np.diag(s) @ v.T, a, atol=1e-9)


def test_kth_largest_hand_case():
    vals = np.array([[3.0, 1.0], [2.0, 5.0]])
    assert kth_largest(vals, 1) == 5.0
    assert kth_largest(vals, 2) == 3.0
    assert kth_largest(vals, 4) == 1.0


def test_kth_largest_with_ties():
    vals = np.array([[2.0, 2.0], [2.0, 1.0]])
    assert kth_largest(vals, 1) == 2.0
    assert kth_largest(vals, 3) == 2.0
    assert kth_largest(vals, 4) == 1.0


def test_kth_largest_bounds():
    vals = np.ones((2, 2))
    with pytest.raises(ValueError):
        kth_largest(vals, 0)
    with pytest.raises(ValueError):
        kth_largest(vals, 5)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.floats(-100, 100), min_size=1, max_size=36),
    st.data(),
)
def test_kth_largest_matches_full_sort(values, data):
    # pad to a rectangle, compare against a plain descending sort
    size = len(values)
    arr = np.array(values, dtype=float).reshape(1, size)
    k = data.draw(st.integers(1, size))
    expected = np.sort(np.asarray(values))[::-1][k - 1]
    assert kth_largest(arr, k) == expected
