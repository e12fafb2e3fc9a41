"""Vector primitives shared by every retrieval method.

All embeddings in this package are plain numpy arrays. They are normalized
once at ingest, so downstream similarity reduces to a dot product. Dot
products always accumulate in float64 regardless of storage precision,
which keeps rankings stable near ties.
"""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from .errors import DimensionMismatchError, EmptyListError, ZeroVectorError

ZERO_NORM_EPS = 1e-12


def as_vector(values: Sequence[float] | np.ndarray) -> np.ndarray:
    """Coerce to a 1-D float64 array, rejecting NaN/Inf components."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ZeroVectorError("embedding must be a nonempty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise ZeroVectorError("embedding contains NaN or Inf")
    return v


def normalize(v: Sequence[float] | np.ndarray) -> np.ndarray:
    """Scale ``v`` to unit Euclidean norm, preserving direction."""
    v = as_vector(v)
    norm = math.sqrt(float(np.dot(v, v)))
    if norm < ZERO_NORM_EPS:
        raise ZeroVectorError("cannot normalize a zero vector")
    return v / norm


def cosine_sim(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Cosine similarity in [-1, 1], clamped against rounding drift."""
    a = as_vector(a)
    b = as_vector(b)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchError(f"dimensions differ: {a.shape[0]} vs {b.shape[0]}")
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        raise ZeroVectorError("cosine similarity of a zero vector is undefined")
    sim = float(np.dot(a, b)) / (na * nb)
    return max(-1.0, min(1.0, sim))


def mean_embedding(vs: Sequence[Sequence[float] | np.ndarray]) -> np.ndarray:
    """Componentwise mean of the vectors, renormalized to unit length."""
    if len(vs) == 0:
        raise EmptyListError("mean_embedding needs at least one vector")
    arrays = [as_vector(v) for v in vs]
    dim = arrays[0].shape[0]
    for v in arrays[1:]:
        if v.shape[0] != dim:
            raise DimensionMismatchError(f"dimensions differ: {dim} vs {v.shape[0]}")
    mean = np.mean(arrays, axis=0)
    return normalize(mean)
