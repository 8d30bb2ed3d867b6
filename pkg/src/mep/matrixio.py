"""Binary and CSV export for masks, spectra, and gradients.

Binary layout: magic ``MEPM``, little-endian u32 rows, u32 cols, then
rows*cols float-32 values row-major.
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import IoFailureError, MalformedContainerError
from .validation import as_matrix

MAGIC = b"MEPM"
_HEADER = struct.Struct("<4sII")


def save_matrix(matrix, path) -> None:
    """Write a 2-D array in the MEPM binary layout."""
    arr = as_matrix(matrix).astype("<f4")
    rows, cols = arr.shape
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, rows, cols))
            fh.write(arr.tobytes(order="C"))
    except OSError as exc:
        raise IoFailureError(f"{path}: {exc}") from exc


def load_matrix(path) -> np.ndarray:
    """Read a MEPM binary matrix back as float64."""
    try:
        with open(path, "rb") as fh:
            header = fh.read(_HEADER.size)
            if len(header) != _HEADER.size:
                raise MalformedContainerError(f"{path}: truncated header")
            magic, rows, cols = _HEADER.unpack(header)
            if magic != MAGIC:
                raise MalformedContainerError(f"{path}: bad magic {magic!r}")
            payload = fh.read(4 * rows * cols)
    except OSError as exc:
        raise IoFailureError(f"{path}: {exc}") from exc
    if len(payload) != 4 * rows * cols:
        raise MalformedContainerError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype="<f4").reshape(rows, cols).astype(np.float64)


def save_matrix_csv(matrix, path) -> None:
    """Row-per-line CSV export with stable formatting."""
    arr = as_matrix(matrix)
    try:
        np.savetxt(path, arr, delimiter=",", fmt="%.9e")
    except OSError as exc:
        raise IoFailureError(f"{path}: {exc}") from exc
