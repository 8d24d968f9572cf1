"""Cosine-similarity neighborhoods and neighbor weighting schemes."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import ConfigError, UsageError
from .features import FeatureVector

SCHEMES = ("eq", "soft", "diff", "log")


def _values(v) -> np.ndarray:
    return v.values if isinstance(v, FeatureVector) else np.asarray(v, dtype=np.float64)


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors; 0 if either has zero norm."""
    a, b = _values(a), _values(b)
    if a.shape != b.shape:
        raise UsageError(f"cannot compare vectors of shapes {a.shape} and {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


@dataclass(frozen=True)
class Neighborhood:
    target_function_id: int
    neighbor_ids: tuple[int, ...]
    similarities: tuple[float, ...]
    boundary_similarity: float

    @property
    def k(self) -> int:
        return len(self.neighbor_ids)

    def to_dict(self) -> dict:
        return {
            "target_function_id": self.target_function_id,
            "neighbor_ids": list(self.neighbor_ids),
            "similarities": list(self.similarities),
            "boundary_similarity": self.boundary_similarity,
        }


def knn(target: FeatureVector, train_vectors: Mapping[int, FeatureVector] | list, k: int) -> Neighborhood:
    """The ``k`` most similar training functions (ties: lower function id first).

    ``train_vectors`` maps function id to vector, or is a list of FeatureVector.
    """
    if not isinstance(train_vectors, Mapping):
        train_vectors = {v.function_id: v for v in train_vectors}
    if not 1 <= k < len(train_vectors):
        raise ConfigError(f"k={k} must satisfy 1 <= k < {len(train_vectors)} (training set size)")
    ranked = sorted(
        ((cosine_similarity(target, v), int(fid)) for fid, v in train_vectors.items()),
        key=lambda t: (-t[0], t[1]),
    )
    top = ranked[:k]
    return Neighborhood(
        target_function_id=int(target.function_id),
        neighbor_ids=tuple(fid for _, fid in top),
        similarities=tuple(s for s, _ in top),
        boundary_similarity=ranked[k][0],
    )


def raw_weights(scheme: str, neighborhood: Neighborhood) -> np.ndarray:
    d = np.asarray(neighborhood.similarities, dtype=np.float64)
    k = d.size
    if scheme == "eq":
        return np.ones(k)
    if scheme == "soft":
        return np.exp(d)
    if scheme == "diff":
        return d - neighborhood.boundary_similarity
    if scheme == "log":
        # CMA-ES style rank weights, truncated at zero
        w = math.log((k + 1) / 2.0) - np.log(np.arange(1, k + 1))
        return np.maximum(w, 0.0)
    raise ConfigError(f"unknown weighting scheme {scheme!r}; expected one of {SCHEMES}")


def weights(scheme: str, neighborhood: Neighborhood) -> np.ndarray:
    """Normalized neighbor weights; all-zero raw weights fall back to uniform."""
    w = np.maximum(raw_weights(scheme, neighborhood), 0.0)
    total = w.sum()
    if total <= 0.0:
        return np.full(w.size, 1.0 / w.size)
    return w / total
