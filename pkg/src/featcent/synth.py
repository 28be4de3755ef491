"""Synthetic identity-feature generator.

Each identity is a point on the unit sphere; samples (and auxiliary
features) are that center plus isotropic Gaussian noise, renormalized.
This is the desk-scale ground truth every centralization claim is
checked against.

Randomness comes from numpy's default_rng (PCG64), seeded explicitly:
identical configs produce bit-identical output. The generator identity is
part of the reproducibility contract (see README).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .centralize import AuxFeatureSet
from .core import FeatureSet


@dataclass(frozen=True)
class SynthConfig:
    n_ids: int = 50
    samples_per_id: int = 10
    dim: int = 64
    sigma: float = 0.1
    aux_per_sample: int = 0
    aux_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_ids < 1 or self.samples_per_id < 1:
            raise ValueError("n_ids and samples_per_id must be >= 1")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.aux_per_sample < 0 or self.aux_sigma < 0:
            raise ValueError("aux_per_sample and aux_sigma must be >= 0")


def _unit_rows(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def generate(config: SynthConfig) -> tuple[FeatureSet, AuxFeatureSet]:
    """Draw a labeled feature set and aligned auxiliary bundle.

    Identity centers are uniform on the unit sphere. Cameras alternate 0/1
    within each identity so the same-id-same-camera evaluation exclusion is
    exercised. Features are stored as float32, matching the on-disk format.
    """
    rng = np.random.default_rng(config.seed)
    centers = _unit_rows(rng.standard_normal((config.n_ids, config.dim)))

    n = config.n_ids * config.samples_per_id
    noise = rng.standard_normal((config.n_ids, config.samples_per_id, config.dim))
    samples = _unit_rows(centers[:, None, :] + config.sigma * noise)
    features = samples.reshape(n, config.dim).astype(np.float32)

    m = config.aux_per_sample
    if m > 0:
        aux_noise = rng.standard_normal((config.n_ids, config.samples_per_id, m, config.dim))
        aux = _unit_rows(centers[:, None, None, :] + config.aux_sigma * aux_noise)
        aux = aux.reshape(n, m, config.dim).astype(np.float32)
    else:
        aux = np.zeros((n, 0, config.dim), dtype=np.float32)

    ids = np.repeat(np.arange(config.n_ids, dtype=np.int64), config.samples_per_id)
    cams = np.tile(np.arange(config.samples_per_id, dtype=np.int64) % 2, config.n_ids)
    names = tuple(
        f"id{i:04d}_s{j:03d}"
        for i in range(config.n_ids)
        for j in range(config.samples_per_id)
    )
    fset = FeatureSet(features, ids, cams, names, normalized=True)
    return fset, AuxFeatureSet(aux, source_tag="synthetic")


def split_query_gallery(
    fset: FeatureSet,
    aux: AuxFeatureSet | None = None,
    queries_per_id: int = 2,
) -> tuple:
    """Hold out the first ``queries_per_id`` samples of each identity as the
    query set; the rest form the gallery. Returns (query, gallery) or, with
    an aligned aux bundle, (query, gallery, query_aux, gallery_aux).
    """
    q_idx: list[int] = []
    g_idx: list[int] = []
    seen: dict = {}
    for i, lab in enumerate(fset.ids):
        k = seen.get(int(lab), 0)
        (q_idx if k < queries_per_id else g_idx).append(i)
        seen[int(lab)] = k + 1
    query, gallery = fset.take(q_idx), fset.take(g_idx)
    if aux is None:
        return query, gallery
    return query, gallery, aux.take(q_idx), aux.take(g_idx)
