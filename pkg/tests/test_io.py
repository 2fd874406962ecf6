"""Binary and CSV matrix serialization round-trips."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from attnprune import ShapeError
from attnprune.io import (
    MAGIC,
    format_float,
    read_matrix,
    read_matrix_csv,
    write_matrix,
    write_matrix_csv,
)


def test_binary_roundtrip_exact(tmp_path):
    a = np.array([[1.5, -2.25, 1e-300], [0.1, 7.0, np.pi]])
    p = tmp_path / "m.atpm"
    write_matrix(p, a)
    b = read_matrix(p)
    assert b.shape == a.shape
    assert np.array_equal(a, b)


def test_binary_layout(tmp_path):
    a = np.array([[1.0, 2.0], [3.0, 4.0]])
    p = tmp_path / "m.atpm"
    write_matrix(p, a)
    raw = p.read_bytes()
    assert raw[:4] == MAGIC
    rows, cols = struct.unpack("<II", raw[4:12])
    assert (rows, cols) == (2, 2)
    assert struct.unpack("<4d", raw[12:]) == (1.0, 2.0, 3.0, 4.0)


def test_read_rejects_bad_magic(tmp_path):
    p = tmp_path / "bad.atpm"
    p.write_bytes(b"XXXX" + struct.pack("<II", 1, 1) + struct.pack("<d", 0.0))
    with pytest.raises(ValueError):
        read_matrix(p)


def test_read_rejects_truncated_payload(tmp_path):
    p = tmp_path / "short.atpm"
    p.write_bytes(MAGIC + struct.pack("<II", 2, 2) + struct.pack("<d", 1.0))
    with pytest.raises(ValueError):
        read_matrix(p)


def test_read_rejects_non_finite_payload(tmp_path):
    p = tmp_path / "inf.atpm"
    p.write_bytes(MAGIC + struct.pack("<II", 1, 1) + struct.pack("<d", np.inf))
    with pytest.raises(ValueError):
        read_matrix(p)


def test_write_rejects_non_finite(tmp_path):
    with pytest.raises(ValueError):
        write_matrix(tmp_path / "x.atpm", np.array([[np.nan]]))


def test_write_rejects_non_2d(tmp_path):
    with pytest.raises(ShapeError):
        write_matrix(tmp_path / "x.atpm", np.ones(3))


def test_format_float_shortest_roundtrip():
    assert format_float(0.1) == "0.1"
    assert format_float(1.0) == "1.0"
    assert float(format_float(1 / 3)) == 1 / 3


def test_csv_roundtrip_exact(tmp_path):
    a = np.array([[0.1, 1 / 3], [-1e-17, 12345.678]])
    p = tmp_path / "m.csv"
    write_matrix_csv(p, a)
    assert np.array_equal(read_matrix_csv(p), a)


@settings(max_examples=40, deadline=None)
@given(
    st.integers(1, 5),
    st.integers(1, 5),
    st.integers(0, 2**32 - 1),
)
def test_roundtrips_preserve_random_payloads(rows, cols, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(scale=1e3, size=(rows, cols))
    import tempfile, os

    fd, p = tempfile.mkstemp(suffix=".atpm")
    os.close(fd)
    try:
        write_matrix(p, a)
        assert np.array_equal(read_matrix(p), a)
        write_matrix_csv(p, a)
        assert np.array_equal(read_matrix_csv(p), a)
    finally:
        os.unlink(p)
