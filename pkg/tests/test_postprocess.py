import numpy as np
import pytest

from eeht import datagen, postprocess
from eeht.evalkit import match_mrsa
from eeht.linalg import as_array
from eeht.postprocess import (EmptyClusterFamilyError, SelectionMethod,
                              eeht_extract, min_diam_cluster, select)
from eeht.rce import RceConfig


def _brute_force_min_diam(A, p, r):
    """Enumerate every prefix cluster of every anchor, keep qualifiers."""
    arr = as_array(A)
    n = arr.shape[1]
    threshold = r / (r + 1.0)
    best = None
    for i in range(n):
        dist = np.sum(np.abs(arr - arr[:, [i]]), axis=0)
        order = sorted(range(n), key=lambda u: (dist[u], u))
        for k in range(1, n + 1):
            members = order[:k]
            if sum(p[u] for u in members) > threshold:
                diam = max(dist[u] for u in members)
                if best is None or diam < best[0]:
                    best = (diam, i, members)
                break      # longer prefixes only grow the diameter
    return best


class TestMinDiamCluster:
    def test_threshold_value(self):
        # r = 4 gives threshold 0.8: a cluster scoring exactly 0.8 fails
        arr = np.eye(2) * np.arange(1, 3)
        p = np.array([0.8, 0.1])
        with pytest.raises(EmptyClusterFamilyError):
            min_diam_cluster(np.vstack([arr, arr]), np.array([0.4, 0.4]), 4)

    def test_singleton_self_cluster(self):
        rng = np.random.default_rng(0)
        A = rng.random((3, 5))
        p = np.zeros(5)
        p[2] = 1.0
        anchor, members = min_diam_cluster(A, p, 1)   # threshold 0.5
        assert members == [2]
        assert anchor == 2

    def test_matches_brute_force_toy(self):
        rng = np.random.default_rng(1)
        A = rng.random((4, 6))
        p = rng.dirichlet(np.ones(6)) * 2.0
        anchor, members = min_diam_cluster(A, p, 1)
        diam, oanchor, omembers = _brute_force_min_diam(A, p, 1)
        assert anchor == oanchor
        assert members == omembers

    def test_matches_brute_force_random(self):
        rng = np.random.default_rng(2)
        for trial in range(20):
            n = int(rng.integers(3, 13))
            r = int(rng.integers(1, 4))
            A = rng.random((3, n))
            p = rng.random(n)
            p *= (r + 0.5) / np.sum(p)       # total clears the threshold
            anchor, members = min_diam_cluster(A, p, r)
            diam, oanchor, omembers = _brute_force_min_diam(A, p, r)
            assert anchor == oanchor and members == omembers

    def test_infeasible_point_list(self):
        A = np.eye(3)
        with pytest.raises(EmptyClusterFamilyError):
            min_diam_cluster(A, np.zeros(3), 2)


class TestSelect:
    def test_concentrated_mass_all_methods(self):
        inst = datagen.gen_synthetic(5, 12, 3, 0.0, 3)
        A = as_array(inst.A)
        pure = sorted(inst.pure_indices)
        diag = np.zeros(12)
        diag[pure] = 1.0
        for method in SelectionMethod:
            sel = select(A, diag, 3, method)
            assert sorted(sel.chosen) == pure

    def test_diag_top_r_ties_by_index(self):
        A = np.eye(4)
        diag = np.array([0.5, 0.9, 0.5, 0.9])
        sel = select(A, diag, 2, SelectionMethod.DIAG_TOP_R)
        assert sel.chosen == [1, 3]

    def test_hand_simulated_trace(self):
        # two tight pairs far apart plus a stray; r = 2, threshold 2/3.
        # p splits 0.45+0.45 inside each pair, so a pair only qualifies
        # once merged with a neighbour of the other pair or the pairs'
        # own two members (0.9 > 2/3): each pair is its own cluster.
        A = np.array([[0.0, 0.05, 10.0, 10.05, 5.0]])
        A = np.vstack([A, A])
        p = np.array([0.45, 0.45, 0.45, 0.45, 0.2])
        sel = select(A, p, 2, SelectionMethod.MAX_POINT)
        assert len(sel.chosen) == 2
        assert [sorted(c) for c in sel.clusters] == [[0, 1], [2, 3]]
        # max-point tie inside {0,1} goes to the lower index
        assert sel.chosen[0] == 0 and sel.chosen[1] in (2, 3)

    def test_zeroing_between_iterations(self):
        inst = datagen.gen_synthetic(4, 10, 2, 0.1, 4)
        A = as_array(inst.A)
        diag = np.full(10, 0.2)
        sel = select(A, diag, 2, SelectionMethod.MAX_POINT)
        assert len(set(sel.chosen)) == 2
        assert sel.chosen[0] in sel.clusters[0]
        assert sel.chosen[1] in sel.clusters[1]

    def test_chosen_in_clusters_invariant(self):
        rng = np.random.default_rng(5)
        A = rng.random((4, 15))
        p = rng.dirichlet(np.ones(15)) * 3.0
        for method in (SelectionMethod.MAX_POINT,
                       SelectionMethod.CENTROID_MRSA):
            sel = select(A, p, 3, method)
            assert len(set(sel.chosen)) == 3
            for u, members in zip(sel.chosen, sel.clusters):
                assert u in members

    def test_too_few_columns(self):
        with pytest.raises(ValueError):
            select(np.eye(2), np.ones(2), 3, SelectionMethod.DIAG_TOP_R)


class TestEehtExtract:
    def test_noiseless_exact_recovery_all_methods(self):
        inst = datagen.gen_synthetic(8, 40, 4, 0.0, 6)
        A = as_array(inst.A)
        pure = sorted(inst.pure_indices)
        cfg = RceConfig(r=4, lam=2, mu=4, seed=0)
        for method in SelectionMethod:
            result = eeht_extract(A, cfg, method)
            assert sorted(result.indices) == pure
            assert result.objective == pytest.approx(0.0, abs=1e-6)

    def test_reduction_matches_identity_when_d_equals_r(self):
        inst = datagen.gen_synthetic(3, 20, 3, 0.1, 7)
        A = as_array(inst.A)
        cfg = RceConfig(r=3, lam=2, mu=2, seed=0)
        with_red = eeht_extract(A, cfg, SelectionMethod.MAX_POINT,
                                reduce=True)
        without = eeht_extract(A, cfg, SelectionMethod.MAX_POINT,
                               reduce=False)
        # the reduction is a rotation of the rows: the L1 objective is not
        # preserved, but the extracted columns are
        assert sorted(with_red.indices) == sorted(without.indices)

    def test_duplicate_pure_columns_centroid_beats_diag(self):
        # duplicate every pure column; diag mass can split across twins
        inst = datagen.gen_synthetic(6, 24, 3, 0.0, 8)
        A = as_array(inst.A)
        pure = sorted(inst.pure_indices)
        A_dup = np.hstack([A, A[:, pure]])
        W = as_array(inst.W)
        cfg = RceConfig(r=3, lam=2, mu=4, seed=0)
        mrsa_by_method = {}
        for method in (SelectionMethod.DIAG_TOP_R,
                       SelectionMethod.CENTROID_MRSA):
            result = eeht_extract(A_dup, cfg, method)
            est = A_dup[:, result.indices]
            mrsa_by_method[method] = match_mrsa(est, W).average_mrsa
        assert mrsa_by_method[SelectionMethod.CENTROID_MRSA] <= (
            mrsa_by_method[SelectionMethod.DIAG_TOP_R] + 1e-12)
        assert mrsa_by_method[SelectionMethod.CENTROID_MRSA] == (
            pytest.approx(0.0, abs=1e-6))

    def test_invalid_r(self):
        with pytest.raises(ValueError):
            eeht_extract(np.eye(3), RceConfig(r=4), SelectionMethod.MAX_POINT)
