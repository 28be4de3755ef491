"""Feature centralization: mutual-neighbor aggregation and auxiliary-feature
aggregation, plus representative-sample selection.

Both mechanisms move each embedding toward its (unknown) identity center and
renormalize, preserving the unit-sphere geometry the retrieval stage assumes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import FeatureSet, identity_center, l2_normalize, pairwise_distances
from .errors import DimensionMismatch, Misalignment, TooFewSamples, UnknownId


@dataclass(frozen=True)
class AuxFeatureSet:
    """Per-sample bundle of M auxiliary feature vectors, aligned to a FeatureSet.

    ``aux`` has shape (n, M, d); M = 0 means no auxiliaries.
    """

    aux: np.ndarray
    source_tag: str = "synthetic"

    def __post_init__(self):
        a = np.asarray(self.aux)
        if a.ndim != 3:
            raise DimensionMismatch(f"aux must be n x M x d, got shape {a.shape}")
        object.__setattr__(self, "aux", np.ascontiguousarray(a))

    @property
    def n(self) -> int:
        return self.aux.shape[0]

    @property
    def m(self) -> int:
        return self.aux.shape[1]

    @property
    def dim(self) -> int:
        return self.aux.shape[2]

    def take(self, indices) -> "AuxFeatureSet":
        return AuxFeatureSet(self.aux[np.asarray(indices, dtype=np.int64)], self.source_tag)


@dataclass(frozen=True)
class NfcParams:
    k1: int = 2
    k2: int = 2

    def __post_init__(self):
        if self.k1 < 1 or self.k2 < 1:
            raise ValueError("k1 and k2 must be >= 1")


@dataclass(frozen=True)
class AggregateParams:
    eta: float = 1.0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be >= 0")


def _require_normalized(fset: FeatureSet, op: str):
    if not fset.normalized:
        raise ValueError(f"{op} requires a normalized FeatureSet; call l2_normalize first")


def mutual_neighbor_sets(fset: FeatureSet, params: NfcParams) -> list[np.ndarray]:
    """Mutual nearest-neighbor index set for every sample.

    Sample j belongs to the set of sample i iff j is among i's top-k1
    neighbors and i is among j's top-k2 neighbors (self always excluded,
    distance ties broken by ascending index).
    """
    n = fset.n
    if n < 2 or n <= params.k1 or n <= params.k2:
        raise TooFewSamples(f"need n > max(k1, k2) and n >= 2, got n={n}, k1={params.k1}, k2={params.k2}")
    dist = pairwise_distances(fset).neighbor_view()
    order = np.argsort(dist, axis=1, kind="stable")
    top1 = order[:, : params.k1]
    top2 = order[:, : params.k2]
    in_top2 = np.zeros((n, n), dtype=bool)
    np.put_along_axis(in_top2, top2, True, axis=1)
    out = []
    for i in range(n):
        cand = top1[i]
        out.append(np.sort(cand[in_top2[cand, i]]))
    return out


def nfc(fset: FeatureSet, params: NfcParams) -> FeatureSet:
    """Aggregate each feature with its mutual nearest neighbors, then renormalize.

    Snapshot semantics: every sum uses the original input rows, so the
    result is independent of processing order.
    """
    _require_normalized(fset, "nfc")
    mutual = mutual_neighbor_sets(fset, params)
    z = fset.features.astype(np.float64, copy=False)
    out = z.copy()
    for i, mset in enumerate(mutual):
        if mset.size:
            out[i] += z[mset].sum(axis=0)
    out = out.astype(fset.features.dtype)
    return l2_normalize(fset.with_features(out, normalized=False))


def aggregate(fset: FeatureSet, aux: AuxFeatureSet, params: AggregateParams) -> FeatureSet:
    """Blend each feature with the mean of its auxiliary features.

    Row i becomes normalize(f_i + (eta/M) * sum_m aux[i, m]); with M = 0 the
    features are simply renormalized.
    """
    _require_normalized(fset, "aggregate")
    if aux.n != fset.n or (aux.m > 0 and aux.dim != fset.dim):
        raise Misalignment(
            f"aux shape {aux.aux.shape} does not align with set (n={fset.n}, d={fset.dim})"
        )
    z = fset.features.astype(np.float64, copy=False)
    if aux.m == 0 or params.eta == 0.0:
        out = z.copy()
    else:
        out = z + (params.eta / aux.m) * aux.aux.astype(np.float64, copy=False).sum(axis=1)
    out = out.astype(fset.features.dtype)
    return l2_normalize(fset.with_features(out, normalized=False))


def select_representative(fset: FeatureSet, id_label: int) -> int:
    """Index of the identity's sample closest to its identity center.

    Ties break toward the lower sample index.
    """
    _require_normalized(fset, "select_representative")
    rows = np.flatnonzero(fset.ids == id_label)
    if rows.size == 0:
        raise UnknownId(id_label)
    center = identity_center(fset, id_label)
    d = np.linalg.norm(fset.features[rows].astype(np.float64) - center, axis=1)
    return int(rows[int(np.argmin(d))])


@dataclass(frozen=True)
class PipelineResult:
    features: FeatureSet
    stages: tuple[dict, ...] = field(default_factory=tuple)


def pipeline(
    fset: FeatureSet,
    aux: AuxFeatureSet | None = None,
    agg: AggregateParams | None = None,
    nfc_params: NfcParams | None = None,
) -> PipelineResult:
    """Full centralization pass: auxiliary aggregation first (when auxiliaries
    are supplied), then mutual-neighbor aggregation (when parameters are
    supplied), each followed by renormalization.
    """
    stages: list[dict] = []
    out = fset if fset.normalized else l2_normalize(fset)
    if aux is not None:
        params = agg or AggregateParams()
        out = aggregate(out, aux, params)
        stages.append({"stage": "aggregate", "eta": params.eta, "m": aux.m, "source": aux.source_tag})
    if nfc_params is not None:
        out = nfc(out, nfc_params)
        stages.append({"stage": "nfc", "k1": nfc_params.k1, "k2": nfc_params.k2})
    return PipelineResult(out, tuple(stages))
