"""Self-describing binary matrix files plus a CSV export mode.

Layout: 8-byte magic ``SROMMAT1``, little-endian u64 row count, u64 column
count, then the row-major float64 payload.
"""

import struct

import numpy as np

from .errors import BadMagic, NonFinite, TruncatedFile

__all__ = ["MAGIC", "write_matrix", "read_matrix", "write_csv", "read_csv"]

MAGIC = b"SROMMAT1"
_HEADER = struct.Struct("<QQ")


def write_matrix(path, matrix):
    """Write a 2-D float64 matrix (vectors are stored as single columns)."""
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValueError(f"matrix file format stores 2-D arrays, got ndim={arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"refusing to write non-finite entries to {path}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(arr.shape[0], arr.shape[1]))
        fh.write(np.ascontiguousarray(arr).tobytes())


def read_matrix(path):
    """Read a matrix written by :func:`write_matrix`."""
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
        if len(head) < len(MAGIC):
            raise TruncatedFile(f"{path}: file shorter than the magic header")
        if head != MAGIC:
            raise BadMagic(f"{path}: expected {MAGIC!r}, found {head!r}")
        dims = fh.read(_HEADER.size)
        if len(dims) < _HEADER.size:
            raise TruncatedFile(f"{path}: missing dimension header")
        rows, cols = _HEADER.unpack(dims)
        payload = fh.read(rows * cols * 8)
    if len(payload) < rows * cols * 8:
        raise TruncatedFile(
            f"{path}: expected {rows * cols * 8} payload bytes, got {len(payload)}"
        )
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()


def write_csv(path, matrix, header=None):
    """Export a matrix as comma-delimited text, one matrix row per line.

    Values are written with ``repr``-faithful float formatting so a
    read-back reproduces them exactly.
    """
    arr = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    with open(path, "w") as fh:
        if header is not None:
            fh.write(",".join(str(h) for h in header) + "\n")
        for row in arr:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_csv(path, skip_header=False):
    """Read a matrix from the CSV layout written by :func:`write_csv`."""
    return np.loadtxt(path, delimiter=",", skiprows=1 if skip_header else 0, ndmin=2)
