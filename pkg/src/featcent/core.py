"""Numerical primitives shared by every pipeline stage.

Features are stored at whatever float precision the caller supplies
(typically float32 from an upstream embedding model); every reduction in
this module accumulates in float64 and casts back, so results do not
depend on storage precision beyond representation error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DimensionMismatch,
    SingularCovariance,
    UnknownId,
    ZeroVector,
)

NORM_TOL = 1e-5       # unit-norm tolerance for the `normalized` flag
ZERO_NORM_FLOOR = 1e-12


@dataclass(frozen=True)
class FeatureSet:
    """n samples of d-dimensional embeddings with identity/camera labels.

    ``ids`` are integers; negative values mark junk/distractor samples.
    ``cams`` and ``names`` are optional but, when present, must align 1:1
    with the feature rows.
    """

    features: np.ndarray
    ids: np.ndarray
    cams: np.ndarray | None = None
    names: tuple[str, ...] | None = None
    normalized: bool = False

    def __post_init__(self):
        feats = np.asarray(self.features)
        if feats.ndim != 2 or feats.shape[1] < 1:
            raise DimensionMismatch(f"features must be n x d with d >= 1, got shape {feats.shape}")
        ids = np.asarray(self.ids, dtype=np.int64)
        if ids.shape != (feats.shape[0],):
            raise DimensionMismatch(f"ids length {ids.shape} does not match n={feats.shape[0]}")
        object.__setattr__(self, "features", np.ascontiguousarray(feats))
        object.__setattr__(self, "ids", ids)
        if self.cams is not None:
            cams = np.asarray(self.cams, dtype=np.int64)
            if cams.shape != (feats.shape[0],):
                raise DimensionMismatch("cams length does not match n")
            object.__setattr__(self, "cams", cams)
        if self.names is not None:
            names = tuple(self.names)
            if len(names) != feats.shape[0]:
                raise DimensionMismatch("names length does not match n")
            object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def with_features(self, features: np.ndarray, normalized: bool) -> "FeatureSet":
        """Same labels, new feature matrix."""
        return FeatureSet(features, self.ids, self.cams, self.names, normalized=normalized)

    def take(self, indices) -> "FeatureSet":
        indices = np.asarray(indices, dtype=np.int64)
        return FeatureSet(
            self.features[indices],
            self.ids[indices],
            None if self.cams is None else self.cams[indices],
            None if self.names is None else tuple(self.names[i] for i in indices),
            normalized=self.normalized,
        )


@dataclass(frozen=True)
class DistanceMatrix:
    """Dense pairwise distances.

    ``self_excluded`` marks that, for the square self-distance case, the
    diagonal is semantically "not a neighbor" and must be skipped by any
    neighbor query regardless of the stored value.
    """

    values: np.ndarray
    self_excluded: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 2:
            raise DimensionMismatch("distance matrix must be 2-d")
        object.__setattr__(self, "values", vals)

    def neighbor_view(self) -> np.ndarray:
        """Copy of the values with excluded self-distances set to +inf."""
        out = np.array(self.values, dtype=np.float64, copy=True)
        if self.self_excluded:
            np.fill_diagonal(out, np.inf)
        return out


@dataclass(frozen=True)
class IdentityStats:
    """Per-identity mean and population covariance."""

    id: int
    mean: np.ndarray
    covariance: np.ndarray
    count: int = field(default=1)


def l2_normalize(fset: FeatureSet) -> FeatureSet:
    """Scale every row to unit Euclidean length.

    Raises ZeroVector for any row whose norm is at or below 1e-12.
    """
    feats = fset.features.astype(np.float64, copy=False)
    norms = np.linalg.norm(feats, axis=1)
    bad = np.flatnonzero(norms <= ZERO_NORM_FLOOR)
    if bad.size:
        raise ZeroVector(int(bad[0]))
    out = (feats / norms[:, None]).astype(fset.features.dtype)
    return fset.with_features(out, normalized=True)


def pairwise_distances(a: FeatureSet, b: FeatureSet | None = None) -> DistanceMatrix:
    """Euclidean distance between every row of ``a`` and every row of ``b``.

    With ``b`` omitted the result is the square self-distance matrix with
    the diagonal flagged as excluded. Computed via the expanded quadratic
    form in float64 with a non-negativity clamp.
    """
    x = a.features.astype(np.float64, copy=False)
    if b is None:
        y = x
    else:
        if a.dim != b.dim:
            raise DimensionMismatch(f"dimension mismatch: {a.dim} vs {b.dim}")
        y = b.features.astype(np.float64, copy=False)
    xx = np.einsum("ij,ij->i", x, x)
    yy = np.einsum("ij,ij->i", y, y)
    sq = xx[:, None] + yy[None, :] - 2.0 * (x @ y.T)
    np.maximum(sq, 0.0, out=sq)
    vals = np.sqrt(sq)
    if b is None:
        np.fill_diagonal(vals, 0.0)
        # symmetrize: the quadratic form can differ in the last ulp
        vals = 0.5 * (vals + vals.T)
        return DistanceMatrix(vals, self_excluded=True)
    return DistanceMatrix(vals, self_excluded=False)


def _id_rows(fset: FeatureSet, id_label: int) -> np.ndarray:
    rows = np.flatnonzero(fset.ids == id_label)
    if rows.size == 0:
        raise UnknownId(id_label)
    return rows


def identity_center(fset: FeatureSet, id_label: int) -> np.ndarray:
    """Arithmetic mean of the identity's rows (not re-normalized)."""
    rows = _id_rows(fset, id_label)
    return fset.features[rows].astype(np.float64, copy=False).mean(axis=0)


def fit_identity_stats(fset: FeatureSet, id_label: int) -> IdentityStats:
    """Population mean/covariance (1/N divisor) of one identity's rows."""
    rows = _id_rows(fset, id_label)
    x = fset.features[rows].astype(np.float64, copy=False)
    mu = x.mean(axis=0)
    centered = x - mu
    cov = centered.T @ centered / x.shape[0]
    cov = 0.5 * (cov + cov.T)
    return IdentityStats(id=int(id_label), mean=mu, covariance=cov, count=x.shape[0])


def mahalanobis(f: np.ndarray, stats: IdentityStats, epsilon_scale: float = 1e-6) -> float:
    """Mahalanobis distance of ``f`` from the fitted identity distribution.

    The covariance is ridge-regularized by eps*I with
    eps = max(epsilon_scale * trace/d, 1e-12) before factorization.
    """
    cov = np.asarray(stats.covariance, dtype=np.float64)
    d = cov.shape[0]
    eps = max(epsilon_scale * float(np.trace(cov)) / d, 1e-12)
    reg = cov + eps * np.eye(d)
    try:
        chol = np.linalg.cholesky(reg)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(stats.id) from exc
    delta = np.asarray(f, dtype=np.float64) - stats.mean
    w = np.linalg.solve(chol, delta)
    return float(np.sqrt(w @ w))


def mahalanobis_many(x: np.ndarray, stats: IdentityStats, epsilon_scale: float = 1e-6) -> np.ndarray:
    """Vectorized ``mahalanobis`` over the rows of ``x``."""
    cov = np.asarray(stats.covariance, dtype=np.float64)
    d = cov.shape[0]
    eps = max(epsilon_scale * float(np.trace(cov)) / d, 1e-12)
    reg = cov + eps * np.eye(d)
    try:
        chol = np.linalg.cholesky(reg)
    except np.linalg.LinAlgError as exc:
        raise SingularCovariance(stats.id) from exc
    delta = np.asarray(x, dtype=np.float64) - stats.mean
    w = np.linalg.solve(chol, delta.T)
    return np.sqrt(np.einsum("ij,ij->j", w, w))
