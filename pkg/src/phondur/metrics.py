"""Distance metrics between speakers' duration characteristics.

Three distances, all oriented so that smaller means more similar:

* cosine:  1 - cos(f(a), f(b)) on mean-duration vectors, where f is a
           configurable normalization (component-mean centering by default).
           Range [0, 2].
* ratio:   1 - mean_k min(a_k/b_k, b_k/a_k) on strictly positive vectors.
           Range [0, 1), zero iff the vectors are equal.
* rate:    the ratio distance applied to two scalar speech rates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateProfileError, PhondurError

METRIC_KINDS = ("cosine", "ratio", "rate")
NORM_KINDS = ("center", "divide-by-mean", "none")

# A centered profile is degenerate when its norm is negligible against the
# raw vector: exact-constant vectors center to rounding noise, not to zero.
DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class MetricConfig:
    """Scoring configuration: which metric, its normalization, the
    minimum-instance threshold used when building side profiles."""

    kind: str = "ratio"
    norm: str = "center"  # cosine only
    min_instances: int = 1

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}; choose from {METRIC_KINDS}")
        if self.norm not in NORM_KINDS:
            raise ValueError(f"unknown normalization {self.norm!r}; choose from {NORM_KINDS}")
        if self.min_instances < 1:
            raise ValueError(f"min_instances must be >= 1, got {self.min_instances}")


def _as_vector(profile) -> np.ndarray:
    return np.asarray(getattr(profile, "mu", profile), dtype=float)


def _normalize_rows(rows: np.ndarray, norm: str) -> np.ndarray:
    if norm == "center":
        return rows - rows.mean(axis=1, keepdims=True)
    if norm == "divide-by-mean":
        return rows / rows.mean(axis=1, keepdims=True)
    return rows


def cosine_distance(profile_a, profile_b, norm: str = "center") -> float:
    """1 - cosine similarity after normalization; symmetric, in [0, 2].

    Raises DegenerateProfileError when a vector is zero after normalization
    (a constant profile under centering), since cosine is then undefined.
    """
    scores, degenerate = cosine_distance_rows(
        _as_vector(profile_a)[None, :], _as_vector(profile_b)[None, :], norm
    )
    if degenerate[0]:
        raise DegenerateProfileError("degenerate profile: zero vector after normalization")
    return float(scores[0])


def cosine_distance_rows(
    a: np.ndarray, b: np.ndarray, norm: str = "center"
) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise cosine distance; returns (scores, degenerate row mask).

    Degenerate rows (vector effectively zero after normalization) get a NaN
    score; callers must exclude them.
    """
    if norm not in NORM_KINDS:
        raise ValueError(f"unknown normalization {norm!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        fa = _normalize_rows(a, norm)
        fb = _normalize_rows(b, norm)
        na = np.sqrt(np.einsum("ij,ij->i", fa, fa))
        nb = np.sqrt(np.einsum("ij,ij->i", fb, fb))
        scale_a = np.sqrt(np.einsum("ij,ij->i", a, a))
        scale_b = np.sqrt(np.einsum("ij,ij->i", b, b))
        degenerate = (
            ~np.isfinite(na) | ~np.isfinite(nb)
            | (na <= DEGENERATE_RTOL * scale_a) | (nb <= DEGENERATE_RTOL * scale_b)
        )
        denom = np.where(degenerate, 1.0, na * nb)
        cos = np.clip(np.einsum("ij,ij->i", fa, fb) / denom, -1.0, 1.0)
    scores = 1.0 - cos
    scores[degenerate] = np.nan
    return scores, degenerate


def ratio_distance(profile_a, profile_b) -> float:
    """1 - mean componentwise min-ratio; symmetric, in [0, 1).

    Zero exactly when the vectors match componentwise. Both vectors must be
    strictly positive, which holds for every valid duration profile.
    """
    a, b = _as_vector(profile_a), _as_vector(profile_b)
    if np.any(a <= 0) or np.any(b <= 0):
        raise PhondurError("ratio distance requires strictly positive components")
    return float(ratio_distance_rows(a[None, :], b[None, :])[0])


def ratio_distance_rows(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise ratio distance on strictly positive matrices."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return 1.0 - np.minimum(a / b, b / a).mean(axis=1)


def rate_distance(rate_a: float, rate_b: float) -> float:
    """Ratio distance between two scalar speech rates; symmetric, in [0, 1)."""
    if rate_a <= 0 or rate_b <= 0:
        raise PhondurError("rate distance requires positive rates")
    return 1.0 - min(rate_a / rate_b, rate_b / rate_a)
