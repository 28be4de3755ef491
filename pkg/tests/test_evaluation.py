import numpy as np
import pytest

from featcent import (
    DistanceMatrix,
    EvalProtocol,
    FeatureSet,
    evaluate,
    id2,
    k_reciprocal_rerank,
    l2_normalize,
)
from featcent.errors import DimensionMismatch, EmptySet, NoValidQueries, TooFewSamples

from oracles import exhaustive_ap_cmc, reference_rerank


def fset(rows, ids, cams=None):
    return FeatureSet(np.asarray(rows, dtype=float), np.asarray(ids), None if cams is None else np.asarray(cams))


def dist_set(n_q, n_g, dist):
    """Wrap a raw distance matrix so evaluate ranks exactly by it."""
    return DistanceMatrix(np.asarray(dist, dtype=float))


class TestEvaluate:
    def test_single_match_rank_one(self):
        q = fset([[1.0, 0.0]], [3], [0])
        g = fset([[0.9, 0.1]], [3], [1])
        res = evaluate(l2_normalize(q), l2_normalize(g))
        assert res.map == pytest.approx(1.0)
        assert res.cmc[0] == pytest.approx(1.0)
        assert res.n_valid_queries == 1

    def test_two_matches_ranks_one_and_three(self):
        # one query; gallery of five with matches placed at ranks 1 and 3
        q = fset([[1.0, 0.0]], [0])
        g = fset(np.zeros((5, 2)), [0, 9, 0, 9, 9])
        dist = dist_set(1, 5, [[0.1, 0.2, 0.3, 0.4, 0.5]])
        res = evaluate(q, g, EvalProtocol(cam_filter=False), dist)
        assert res.map == pytest.approx(5.0 / 6.0)

    def test_junk_ids_excluded(self):
        q = fset([[1.0, 0.0]], [0])
        g = fset(np.zeros((3, 2)), [-1, 0, 1])
        dist = dist_set(1, 3, [[0.0, 0.5, 0.9]])
        res = evaluate(q, g, EvalProtocol(cam_filter=False), dist)
        # the junk entry at rank 0 is removed before ranking
        assert res.map == pytest.approx(1.0)

    def test_cam_filter_removes_same_id_same_cam(self):
        q = fset([[1.0, 0.0]], [0], [0])
        g = fset(np.zeros((2, 2)), [0, 0], [0, 1])
        dist = dist_set(1, 2, [[0.1, 0.9]])
        res = evaluate(q, g, EvalProtocol(cam_filter=True), dist)
        assert res.map == pytest.approx(1.0)  # only the cross-camera copy counts

    def test_no_valid_queries(self):
        q = fset([[1.0, 0.0]], [0])
        g = fset([[1.0, 0.0]], [5])
        with pytest.raises(NoValidQueries):
            evaluate(q, g, EvalProtocol(cam_filter=False))

    def test_queries_without_match_excluded_from_denominator(self):
        q = fset(np.eye(2), [0, 7], [0, 0])
        g = fset([[1.0, 0.0]], [0], [1])
        res = evaluate(q, g, EvalProtocol(cam_filter=True))
        assert res.n_valid_queries == 1
        assert res.map == pytest.approx(1.0)

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(30)
        for _ in range(40):
            n_q = int(rng.integers(1, 11))
            n_g = int(rng.integers(5, 31))
            d = 4
            q = fset(rng.standard_normal((n_q, d)), rng.integers(0, 5, n_q), rng.integers(0, 2, n_q))
            g = fset(rng.standard_normal((n_g, d)), rng.integers(0, 5, n_g), rng.integers(0, 2, n_g))
            dist = np.linalg.norm(q.features[:, None, :] - g.features[None, :, :], axis=2)
            refs = [
                exhaustive_ap_cmc(dist[i], g.ids, g.cams, q.ids[i], q.cams[i], True, 10)
                for i in range(n_q)
            ]
            refs = [r for r in refs if r is not None]
            try:
                res = evaluate(q, g, EvalProtocol(cam_filter=True, max_rank=10))
            except NoValidQueries:
                assert not refs
                continue
            assert res.n_valid_queries == len(refs)
            assert res.map == pytest.approx(np.mean([r[0] for r in refs]), abs=1e-9)
            firsts = np.array([r[1] for r in refs])
            for k in range(10):
                assert res.cmc[k] == pytest.approx(np.mean(firsts <= k), abs=1e-9)

    def test_cmc_monotone_and_bounds(self):
        rng = np.random.default_rng(31)
        q = fset(rng.standard_normal((8, 5)), rng.integers(0, 4, 8), rng.integers(0, 2, 8))
        g = fset(rng.standard_normal((40, 5)), rng.integers(0, 4, 40), rng.integers(0, 2, 40))
        res = evaluate(q, g, EvalProtocol(max_rank=20))
        assert np.all(np.diff(res.cmc) >= 0)
        assert res.map <= res.cmc[-1] + 1e-12

    def test_invariant_under_order_preserving_transform(self):
        rng = np.random.default_rng(32)
        q = fset(rng.standard_normal((6, 4)), rng.integers(0, 3, 6), rng.integers(0, 2, 6))
        g = fset(rng.standard_normal((25, 4)), rng.integers(0, 3, 25), rng.integers(0, 2, 25))
        dist = np.linalg.norm(q.features[:, None, :] - g.features[None, :, :], axis=2)
        base = evaluate(q, g, EvalProtocol(), DistanceMatrix(dist))
        squared = evaluate(q, g, EvalProtocol(), DistanceMatrix(dist**2))
        assert squared.map == pytest.approx(base.map, abs=1e-12)
        np.testing.assert_allclose(squared.cmc, base.cmc, atol=1e-12)

    def test_distance_shape_mismatch(self):
        q = fset([[1.0, 0.0]], [0])
        g = fset([[1.0, 0.0]], [0])
        with pytest.raises(DimensionMismatch):
            evaluate(q, g, EvalProtocol(), DistanceMatrix(np.zeros((2, 2))))


class TestId2:
    def test_identical_samples_zero(self):
        s = fset([[1.0, 0.0]] * 4 + [[0.0, 1.0]] * 3, [0, 0, 0, 0, 1, 1, 1])
        assert id2(s) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_pair(self):
        s = fset([[1.0, 0.0], [0.0, 1.0]], [0, 0])
        assert id2(s) == pytest.approx(np.sqrt(0.5), abs=1e-12)

    def test_normalizes_input_rows(self):
        s = fset([[10.0, 0.0], [0.0, 0.2]], [0, 0])
        assert id2(s) == pytest.approx(np.sqrt(0.5), abs=1e-12)

    def test_junk_excluded(self):
        s = fset([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]], [0, -1, 0])
        assert id2(s) == pytest.approx(0.0, abs=1e-12)

    def test_empty_after_exclusion(self):
        with pytest.raises(EmptySet):
            id2(fset([[1.0, 0.0]], [-1]))

    def test_nonnegative(self):
        rng = np.random.default_rng(33)
        s = fset(rng.standard_normal((40, 6)), rng.integers(0, 5, 40))
        assert id2(s) >= 0.0


class TestRerank:
    def test_lambda_one_is_euclidean(self):
        rng = np.random.default_rng(34)
        q = l2_normalize(fset(rng.standard_normal((4, 5)), np.zeros(4, dtype=int)))
        g = l2_normalize(fset(rng.standard_normal((12, 5)), np.zeros(12, dtype=int)))
        out = k_reciprocal_rerank(q, g, k1=5, k2=2, lam=1.0).values
        ref = np.linalg.norm(q.features[:, None, :] - g.features[None, :, :], axis=2)
        np.testing.assert_allclose(out, ref, atol=1e-9)

    def test_matches_reference_implementation(self):
        rng = np.random.default_rng(35)
        for trial in range(8):
            n_q = int(rng.integers(2, 6))
            n_g = int(rng.integers(6, 15))
            q = l2_normalize(fset(rng.standard_normal((n_q, 4)), np.zeros(n_q, dtype=int)))
            g = l2_normalize(fset(rng.standard_normal((n_g, 4)), np.zeros(n_g, dtype=int)))
            k1 = int(rng.integers(3, min(8, n_q + n_g - 1) + 1))
            k2 = int(rng.integers(1, min(3, k1) + 1))
            lam = float(rng.uniform(0, 1))
            got = k_reciprocal_rerank(q, g, k1, k2, lam).values
            ref = reference_rerank(q.features, g.features, k1, k2, lam)
            np.testing.assert_allclose(got, ref, atol=1e-6)

    def test_lambda_one_metrics_identical(self):
        rng = np.random.default_rng(36)
        q = l2_normalize(fset(rng.standard_normal((6, 5)), rng.integers(0, 3, 6), rng.integers(0, 2, 6)))
        g = l2_normalize(fset(rng.standard_normal((20, 5)), rng.integers(0, 3, 20), rng.integers(0, 2, 20)))
        plain = evaluate(q, g)
        rr = evaluate(q, g, distances=k_reciprocal_rerank(q, g, 5, 2, 1.0))
        assert rr.map == pytest.approx(plain.map, abs=1e-12)
        np.testing.assert_allclose(rr.cmc, plain.cmc, atol=1e-12)

    def test_too_few_samples(self):
        q = l2_normalize(fset(np.eye(3)[:1], [0]))
        g = l2_normalize(fset(np.eye(3)[1:], [0, 0]))
        with pytest.raises(TooFewSamples):
            k_reciprocal_rerank(q, g, k1=3, k2=1, lam=0.3)

    def test_parameter_validation(self):
        q = l2_normalize(fset(np.eye(4), np.zeros(4, dtype=int)))
        with pytest.raises(ValueError):
            k_reciprocal_rerank(q, q, k1=2, k2=3, lam=0.3)
        with pytest.raises(ValueError):
            k_reciprocal_rerank(q, q, k1=3, k2=2, lam=1.5)
