"""Tuning the aggregation weight and using mutual-neighbor centralization.

Two experiments on the synthetic benchmark:

1. When auxiliaries are noisier than the originals, the quality
   coefficient eta trades off their contribution; sweeping eta shows an
   interior optimum rather than "more is better".
2. Mutual k-nearest-neighbor centralization (no auxiliaries at all) sums
   each feature with the neighbors that agree reciprocally. It helps when
   neighbors are mostly same-identity, i.e. at moderate noise.

Run:  python3 demos/02_eta_and_neighbors.py
"""

from featcent import (
    AggregateParams,
    EvalProtocol,
    NfcParams,
    SynthConfig,
    aggregate,
    evaluate,
    generate,
    nfc,
    split_query_gallery,
)

# -- 1. eta sweep with auxiliaries twice as noisy as the originals ----------
config = SynthConfig(n_ids=50, samples_per_id=10, dim=128, sigma=0.3,
                     aux_per_sample=8, aux_sigma=0.6, seed=3)
features, aux = generate(config)
query, gallery, q_aux, g_aux = split_query_gallery(features, aux, queries_per_id=2)

print("eta sweep (aux noise = 2x sample noise):")
print(f"{'eta':>6} {'mAP':>8}")
for eta in (0.25, 0.5, 1.0, 2.0, 4.0, 8.0):
    q = aggregate(query, q_aux, AggregateParams(eta))
    g = aggregate(gallery, g_aux, AggregateParams(eta))
    print(f"{eta:>6.2f} {evaluate(q, g, EvalProtocol()).map:>8.4f}")
print("small eta under-uses the auxiliaries, large eta drowns the original")
print("feature in auxiliary noise; the best setting sits in between.\n")

# -- 2. mutual-neighbor centralization at moderate noise --------------------
print("mutual-neighbor centralization (k1 = k2 = 2), no auxiliaries:")
print(f"{'sigma':>6} {'baseline':>9} {'nfc':>8}")
for sigma in (0.15, 0.2, 0.25):
    features, _ = generate(SynthConfig(n_ids=50, samples_per_id=10, dim=128,
                                       sigma=sigma, seed=3))
    query, gallery = split_query_gallery(features, queries_per_id=2)
    base = evaluate(query, gallery, EvalProtocol()).map
    centralized = evaluate(nfc(query, NfcParams(2, 2)),
                           nfc(gallery, NfcParams(2, 2)),
                           EvalProtocol()).map
    print(f"{sigma:>6.2f} {base:>9.4f} {centralized:>8.4f}")
print("the reciprocal check keeps wrong-identity neighbors out only while")
print("same-identity samples are still each other's nearest neighbors; at")
print("high noise the neighbor graph itself degrades and the gain vanishes.")
