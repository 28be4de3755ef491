import numpy as np
import pytest

from featcent import (
    AggregateParams,
    AuxFeatureSet,
    FeatureSet,
    NfcParams,
    aggregate,
    l2_normalize,
    identity_center,
    nfc,
    pipeline,
    select_representative,
)
from featcent.centralize import mutual_neighbor_sets
from featcent.errors import Misalignment, TooFewSamples, UnknownId

from oracles import brute_force_nfc


def norm_set(rows, ids=None, **kw):
    rows = np.asarray(rows, dtype=float)
    if ids is None:
        ids = np.zeros(len(rows), dtype=int)
    return l2_normalize(FeatureSet(rows, ids, **kw))


def random_norm_set(rng, n, d, n_ids=1):
    return norm_set(rng.standard_normal((n, d)), ids=rng.integers(0, n_ids, n))


class TestNfc:
    def test_identical_pair_unchanged(self):
        s = norm_set([[1.0, 0.0], [1.0, 0.0]])
        out = nfc(s, NfcParams(1, 1))
        np.testing.assert_allclose(out.features, s.features, atol=1e-7)

    def test_line_points_mutuality(self):
        # three directions at angles 0, 0.1, 1.0 rad: the outlier's nearest
        # neighbor is the middle point, but not reciprocally, so it stays put
        angles = [0.0, 0.1, 1.0]
        s = norm_set([[np.cos(a), np.sin(a)] for a in angles])
        mutual = mutual_neighbor_sets(s, NfcParams(1, 1))
        assert list(mutual[0]) == [1]
        assert list(mutual[1]) == [0]
        assert list(mutual[2]) == []
        out = nfc(s, NfcParams(1, 1))
        np.testing.assert_allclose(out.features[2], s.features[2], atol=1e-7)

    def test_too_few_samples(self):
        s = norm_set([[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(TooFewSamples):
            nfc(s, NfcParams(2, 1))

    def test_matches_brute_force(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(4, 24))
            d = int(rng.integers(2, 9))
            k1 = int(rng.integers(1, min(4, n - 1) + 1))
            k2 = int(rng.integers(1, min(4, n - 1) + 1))
            s = random_norm_set(rng, n, d)
            mutual_ref, agg_ref = brute_force_nfc(s.features, k1, k2)
            mutual = mutual_neighbor_sets(s, NfcParams(k1, k2))
            assert [list(m) for m in mutual] == mutual_ref
            out = nfc(s, NfcParams(k1, k2))
            ref = agg_ref / np.linalg.norm(agg_ref, axis=1, keepdims=True)
            np.testing.assert_allclose(out.features, ref, atol=1e-6)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(12)
        s = random_norm_set(rng, 20, 6)
        perm = rng.permutation(20)
        out = nfc(s, NfcParams(2, 2))
        out_perm = nfc(s.take(perm), NfcParams(2, 2))
        np.testing.assert_allclose(out_perm.features, out.features[perm], atol=1e-12)

    def test_mutual_symmetry_when_k_equal(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            s = random_norm_set(rng, int(rng.integers(5, 30)), 4)
            mutual = mutual_neighbor_sets(s, NfcParams(3, 3))
            for i, mset in enumerate(mutual):
                for j in mset:
                    assert i in mutual[j]

    def test_outputs_unit_norm(self):
        rng = np.random.default_rng(14)
        out = nfc(random_norm_set(rng, 30, 8), NfcParams(3, 2))
        np.testing.assert_allclose(np.linalg.norm(out.features, axis=1), 1.0, atol=1e-5)


class TestAggregate:
    def test_collinear_aux_keeps_direction(self):
        s = norm_set([[0.6, 0.8]])
        aux = AuxFeatureSet(np.array([[[0.6, 0.8]] * 3]))
        out = aggregate(s, aux, AggregateParams(7.5))
        np.testing.assert_allclose(out.features[0], [0.6, 0.8], atol=1e-7)

    def test_eta_zero_is_identity(self):
        rng = np.random.default_rng(15)
        s = random_norm_set(rng, 10, 5)
        aux = AuxFeatureSet(rng.standard_normal((10, 4, 5)))
        out = aggregate(s, aux, AggregateParams(0.0))
        np.testing.assert_allclose(out.features, s.features, atol=1e-7)

    def test_m_zero_is_normalize(self):
        rng = np.random.default_rng(16)
        s = random_norm_set(rng, 6, 4)
        out = aggregate(s, AuxFeatureSet(np.zeros((6, 0, 4))), AggregateParams(2.0))
        np.testing.assert_allclose(out.features, s.features, atol=1e-7)

    def test_misalignment(self):
        s = norm_set([[1.0, 0.0]])
        with pytest.raises(Misalignment):
            aggregate(s, AuxFeatureSet(np.zeros((2, 1, 2))), AggregateParams())

    def test_center_aux_pulls_toward_center_monotonically(self):
        rng = np.random.default_rng(17)
        ids = np.repeat(np.arange(4), 6)
        s = norm_set(rng.standard_normal((24, 8)) + 3 * rng.standard_normal((4, 8))[ids], ids=ids)
        centers = np.stack([identity_center(s, i) for i in range(4)])
        unit_centers = centers / np.linalg.norm(centers, axis=1, keepdims=True)
        aux = AuxFeatureSet(np.repeat(unit_centers[ids][:, None, :], 2, axis=1))
        prev = None
        for eta in (0.0, 0.5, 1.0, 2.0, 4.0):
            out = aggregate(s, aux, AggregateParams(eta))
            dist = np.linalg.norm(out.features - centers[ids], axis=1)
            if prev is not None:
                assert np.all(dist < prev - 1e-12)
            prev = dist

    def test_global_scale_invariance(self):
        rng = np.random.default_rng(18)
        raw = rng.standard_normal((12, 5))
        aux_raw = rng.standard_normal((12, 3, 5))
        ids = np.zeros(12, dtype=int)

        def run(scale):
            s = l2_normalize(FeatureSet(scale * raw, ids))
            aux_set = AuxFeatureSet(scale * aux_raw)
            aux_n = aux_set.aux / np.linalg.norm(aux_set.aux, axis=2, keepdims=True)
            return aggregate(s, AuxFeatureSet(aux_n), AggregateParams(1.5)).features

        np.testing.assert_allclose(run(1.0), run(37.0), atol=1e-9)


class TestSelectRepresentative:
    def test_exact_mean_sample(self):
        s = norm_set([[1.0, 0.0], [np.cos(0.5), np.sin(0.5)], [np.cos(1.0), np.sin(1.0)]])
        # middle sample is closest to the arithmetic mean of the three
        assert select_representative(s, 0) == 1

    def test_tie_breaks_low_index(self):
        s = norm_set([[np.cos(0.3), np.sin(0.3)], [np.cos(-0.3), np.sin(-0.3)]])
        assert select_representative(s, 0) == 0

    def test_matches_linear_scan(self):
        rng = np.random.default_rng(19)
        s = random_norm_set(rng, 30, 6)
        center = identity_center(s, 0)
        ref = min(range(30), key=lambda i: (np.linalg.norm(s.features[i] - center), i))
        assert select_representative(s, 0) == ref

    def test_unknown_id(self):
        with pytest.raises(UnknownId):
            select_representative(norm_set([[1.0, 0.0]]), 4)


class TestPipeline:
    def test_no_stages_is_normalize(self):
        raw = FeatureSet(np.array([[3.0, 4.0]]), np.array([0]))
        result = pipeline(raw)
        np.testing.assert_allclose(result.features.features[0], [0.6, 0.8])
        assert result.stages == ()

    def test_empty_aux_same_as_normalize(self):
        raw = FeatureSet(np.array([[3.0, 4.0]]), np.array([0]))
        result = pipeline(raw, aux=AuxFeatureSet(np.zeros((1, 0, 2))), agg=AggregateParams(2.0))
        np.testing.assert_allclose(result.features.features[0], [0.6, 0.8])
        assert [s["stage"] for s in result.stages] == ["aggregate"]

    def test_stage_order(self):
        rng = np.random.default_rng(20)
        s = random_norm_set(rng, 12, 4)
        aux = AuxFeatureSet(rng.standard_normal((12, 2, 4)))
        result = pipeline(s, aux=aux, agg=AggregateParams(1.0), nfc_params=NfcParams(2, 2))
        assert [st["stage"] for st in result.stages] == ["aggregate", "nfc"]
        manual = nfc(aggregate(s, aux, AggregateParams(1.0)), NfcParams(2, 2))
        np.testing.assert_allclose(result.features.features, manual.features, atol=1e-12)
