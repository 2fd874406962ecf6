"""Matrix file formats: the ATPM binary container and a plain CSV form.

Binary layout: magic b"ATPM", u32 little-endian rows, u32 little-endian cols,
then rows*cols float64 little-endian values in row-major order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ._validation import as_matrix

MAGIC = b"ATPM"
_HEADER = struct.Struct("<4sII")


def write_matrix(path, a) -> None:
    a = as_matrix(a, "matrix")
    rows, cols = a.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, rows, cols))
        fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def read_matrix(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, rows, cols = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if rows < 1 or cols < 1:
        raise ValueError(f"{path}: invalid dimensions {rows}x{cols}")
    expected = _HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    return as_matrix(data.reshape(rows, cols), "matrix")


def format_float(x: float) -> str:
    """Shortest decimal text that round-trips the exact float64 value."""
    return repr(float(x))


def write_matrix_csv(path, a) -> None:
    a = as_matrix(a, "matrix")
    with open(path, "w", newline="\n") as fh:
        for row in a:
            fh.write(",".join(format_float(v) for v in row))
            fh.write("\n")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path, "r") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rows.append([float(tok) for tok in line.split(",")])
    if not rows:
        raise ValueError(f"{path}: empty CSV matrix")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"{path}: row {i} has {len(row)} fields, expected {width}")
    return as_matrix(rows, "matrix")
