"""Retrieval evaluation (mAP, CMC), the identity-density metric, and
k-reciprocal re-ranking.

Protocol conventions: gallery entries with a negative id (or an id listed in
``junk_ids``) are excluded from every ranking; with ``cam_filter`` enabled,
gallery entries sharing both id and camera with the query are excluded as
well. Queries left with no valid match do not count toward mAP or CMC.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DistanceMatrix, FeatureSet, pairwise_distances
from .errors import DimensionMismatch, EmptySet, NoValidQueries, TooFewSamples


@dataclass(frozen=True)
class EvalProtocol:
    cam_filter: bool = True
    junk_ids: frozenset = frozenset()
    max_rank: int = 50

    def __post_init__(self):
        if self.max_rank < 1:
            raise ValueError("max_rank must be >= 1")
        object.__setattr__(self, "junk_ids", frozenset(self.junk_ids))

    def is_junk(self, ids: np.ndarray) -> np.ndarray:
        junk = ids < 0
        for j in self.junk_ids:
            junk |= ids == j
        return junk


@dataclass(frozen=True)
class EvalResult:
    map: float
    cmc: np.ndarray
    id2: float | None
    n_valid_queries: int
    manifest: dict = field(default_factory=dict)


def evaluate(
    query: FeatureSet,
    gallery: FeatureSet,
    protocol: EvalProtocol = EvalProtocol(),
    distances: DistanceMatrix | None = None,
) -> EvalResult:
    """Rank the gallery per query and compute mAP and the CMC curve.

    ``distances`` may carry externally refined (e.g. re-ranked) distances;
    otherwise Euclidean distances are computed here. Ties rank by ascending
    gallery index.
    """
    if distances is None:
        dist = pairwise_distances(query, gallery).values
    else:
        dist = np.asarray(distances.values, dtype=np.float64)
        if dist.shape != (query.n, gallery.n):
            raise DimensionMismatch(
                f"distance matrix shape {dist.shape} != ({query.n}, {gallery.n})"
            )

    g_junk = protocol.is_junk(gallery.ids)
    q_junk = protocol.is_junk(query.ids)
    keep_base = ~g_junk

    aps = []
    first_match_ranks = []
    for i in range(query.n):
        if q_junk[i]:
            continue
        keep = keep_base.copy()
        if protocol.cam_filter and query.cams is not None and gallery.cams is not None:
            keep &= ~((gallery.ids == query.ids[i]) & (gallery.cams == query.cams[i]))
        idx = np.flatnonzero(keep)
        if idx.size == 0:
            continue
        order = idx[np.argsort(dist[i, idx], kind="stable")]
        matches = gallery.ids[order] == query.ids[i]
        pos = np.flatnonzero(matches)
        if pos.size == 0:
            continue
        precision = np.arange(1, pos.size + 1, dtype=np.float64) / (pos + 1)
        aps.append(precision.mean())
        first_match_ranks.append(pos[0])

    if not aps:
        raise NoValidQueries("no query has a valid gallery match")

    ranks = np.asarray(first_match_ranks)
    cmc = np.zeros(protocol.max_rank, dtype=np.float64)
    hit_counts = np.bincount(np.minimum(ranks, protocol.max_rank), minlength=protocol.max_rank + 1)
    cmc = np.cumsum(hit_counts[: protocol.max_rank]) / len(aps)
    return EvalResult(
        map=float(np.mean(aps)),
        cmc=cmc,
        id2=None,
        n_valid_queries=len(aps),
        manifest={"cam_filter": protocol.cam_filter, "max_rank": protocol.max_rank},
    )


def id2(fset: FeatureSet, junk_ids: frozenset = frozenset()) -> float:
    """Identity density: mean Euclidean distance of each normalized feature to
    its identity center (the mean of the identity's normalized features, not
    re-normalized), averaged over identities. Lower is denser.
    """
    ids = fset.ids
    junk = ids < 0
    for j in junk_ids:
        junk |= ids == j
    keep = np.flatnonzero(~junk)
    if keep.size == 0:
        raise EmptySet("no samples left after junk-id exclusion")
    feats = fset.features[keep].astype(np.float64, copy=False)
    norms = np.linalg.norm(feats, axis=1)
    feats = feats / norms[:, None]
    labels = ids[keep]
    total = 0.0
    uniq = np.unique(labels)
    for lab in uniq:
        rows = feats[labels == lab]
        center = rows.mean(axis=0)
        total += float(np.linalg.norm(rows - center, axis=1).mean())
    return total / uniq.size


def k_reciprocal_rerank(
    query: FeatureSet,
    gallery: FeatureSet,
    k1: int = 20,
    k2: int = 6,
    lam: float = 0.3,
) -> DistanceMatrix:
    """k-reciprocal encoding re-ranking over the concatenated query+gallery set.

    Steps: reciprocal neighbor sets R(p, k1) including the sample itself;
    expansion by half-k1 reciprocal sets whose overlap with R is >= 2/3 of
    their size; Gaussian weights exp(-d^2) over the expanded set, row
    normalized; local query expansion averaging over the k2 nearest
    neighbors; Jaccard distance between weight vectors; final distance
    (1-lam) * jaccard + lam * original Euclidean. Returns the
    query x gallery block.
    """
    if not (k1 >= k2 >= 1):
        raise ValueError(f"need k1 >= k2 >= 1, got k1={k1}, k2={k2}")
    if not (0.0 <= lam <= 1.0):
        raise ValueError(f"lambda must be in [0, 1], got {lam}")
    if query.dim != gallery.dim:
        raise DimensionMismatch(f"dimension mismatch: {query.dim} vs {gallery.dim}")
    n_q, n_g = query.n, gallery.n
    n_all = n_q + n_g
    if n_all <= k1:
        raise TooFewSamples(f"combined set size {n_all} must exceed k1={k1}")

    feats = np.vstack(
        [query.features.astype(np.float64, copy=False), gallery.features.astype(np.float64, copy=False)]
    )
    all_set = FeatureSet(feats, np.zeros(n_all, dtype=np.int64))
    dist = pairwise_distances(all_set).values
    orig_qg = dist[:n_q, n_q:].copy()
    if lam == 1.0:
        return DistanceMatrix(orig_qg)

    rank = np.argsort(dist, axis=1, kind="stable")  # self first (distance 0)

    def reciprocal(i: int, k: int) -> np.ndarray:
        forward = rank[i, : k + 1]
        backward = rank[forward, : k + 1]
        return forward[np.any(backward == i, axis=1)]

    sq = dist**2
    weights = np.zeros((n_all, n_all), dtype=np.float64)
    half_k1 = int(round(k1 / 2))
    for i in range(n_all):
        r = reciprocal(i, k1)
        expanded = r
        for cand in r:
            rc = reciprocal(int(cand), half_k1)
            if np.intersect1d(rc, r, assume_unique=False).size * 3 >= 2 * rc.size:
                expanded = np.append(expanded, rc)
        expanded = np.unique(expanded)
        w = np.exp(-sq[i, expanded])
        weights[i, expanded] = w / w.sum()

    # local query expansion over each sample's k2 nearest (self included)
    weights = weights[rank[:, :k2]].mean(axis=1)

    jaccard = np.empty((n_q, n_g), dtype=np.float64)
    wg = weights[n_q:]
    for i in range(n_q):
        minimum = np.minimum(weights[i], wg).sum(axis=1)
        maximum = np.maximum(weights[i], wg).sum(axis=1)
        jaccard[i] = 1.0 - minimum / maximum
    return DistanceMatrix((1.0 - lam) * jaccard + lam * orig_qg)
