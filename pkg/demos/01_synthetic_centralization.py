"""Feature centralization on a synthetic identity benchmark.

Generates a seeded benchmark of noisy per-identity feature clusters, then
shows how aggregating auxiliary same-identity features pulls every sample
toward its identity center: retrieval quality (mAP) rises and identity
density (mean distance to the center; lower is denser) falls as the
auxiliary bundle grows.

Run:  python3 demos/01_synthetic_centralization.py
"""

import numpy as np

from featcent import (
    AggregateParams,
    EvalProtocol,
    FeatureSet,
    SynthConfig,
    aggregate,
    evaluate,
    generate,
    id2,
    split_query_gallery,
)
from featcent.centralize import AuxFeatureSet

config = SynthConfig(
    n_ids=50, samples_per_id=10, dim=128,
    sigma=0.3,           # per-coordinate noise around each identity center
    aux_per_sample=8,    # auxiliary same-identity features per sample
    aux_sigma=0.3,
    seed=0,
)
features, aux = generate(config)
query, gallery, q_aux, g_aux = split_query_gallery(features, aux, queries_per_id=2)

print(f"benchmark: {config.n_ids} ids x {config.samples_per_id} samples, "
      f"dim {config.dim}, noise {config.sigma}")
print(f"query {query.n} / gallery {gallery.n}\n")

print(f"{'M':>3} {'mAP':>8} {'density':>9}")
for m in (0, 1, 2, 4, 8):
    if m == 0:
        q, g = query, gallery
    else:
        q = aggregate(query, AuxFeatureSet(q_aux.aux[:, :m]), AggregateParams(eta=1.0))
        g = aggregate(gallery, AuxFeatureSet(g_aux.aux[:, :m]), AggregateParams(eta=1.0))
    result = evaluate(q, g, EvalProtocol())
    union = FeatureSet(np.vstack([q.features, g.features]),
                       np.concatenate([q.ids, g.ids]))
    print(f"{m:>3} {result.map:>8.4f} {id2(union):>9.4f}")

print("\nEvery auxiliary feature is an independent noisy view of the same")
print("identity center, so averaging them into the sample feature cancels")
print("noise: mAP climbs with M while the density metric shrinks.")
