"""Input validation helpers shared across the package.

These mirror the role of ``sklearn.utils.validation`` for our domain
objects: coerce to float64 numpy arrays, enforce shape/finiteness
invariants, raise the package's own exception types.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    EmptyAudioError,
    LengthMismatchError,
    ShapeMismatchError,
    TooFewFramesError,
)

#: Minimum accepted signal length: one analysis window at the default setup.
MIN_SAMPLES = 400


def as_samples(x, *, min_length: int = 1) -> np.ndarray:
    """Coerce ``x`` to a 1-D float64 sample vector and validate it."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ShapeMismatchError(f"expected mono 1-D samples, got shape {arr.shape}")
    if arr.size == 0:
        raise EmptyAudioError("empty sample buffer")
    if arr.size < min_length:
        raise EmptyAudioError(
            f"buffer has {arr.size} samples, need at least {min_length}"
        )
    if not np.all(np.isfinite(arr)):
        raise EmptyAudioError("samples contain NaN or infinity")
    return arr


def as_matrix(x, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "operands") -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"{what} differ in shape: {a.shape} vs {b.shape}")


def check_same_length(a: np.ndarray, b: np.ndarray) -> None:
    if len(a) != len(b):
        raise LengthMismatchError(f"lengths differ: {len(a)} vs {len(b)}")


def check_min_frames(frames: int, minimum: int = 2) -> None:
    if frames < minimum:
        raise TooFewFramesError(f"need at least {minimum} frames, got {frames}")


def check_unit_norm(v: np.ndarray, name: str = "embedding", tol: float = 1e-6) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeMismatchError(f"{name} must be a vector, got shape {v.shape}")
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > tol:
        raise ValueError(f"{name} must be unit-norm, got ||v|| = {norm!r}")
    return v
