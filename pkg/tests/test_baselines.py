import numpy as np
import pytest

from eeht import datagen
from eeht.baselines import RankDeficiencyError, spa
from eeht.linalg import as_array


class TestSpa:
    def test_identity_tie_break(self):
        assert spa(np.eye(3), 2) == [0, 1]

    def test_two_step_manual_oracle(self):
        # norms: col0 = 1, col1 = 1, col2 = sqrt(0.5); tie at 1 -> pick 0;
        # after deflating e1, col1 survives untouched -> pick 1
        A = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.5]])
        assert spa(A, 2) == [0, 1]

    def test_noiseless_separable_recovery(self):
        for seed in range(5):
            inst = datagen.gen_synthetic(8, 40, 4, 0.0, seed)
            picks = spa(as_array(inst.A), 4)
            assert sorted(picks) == sorted(inst.pure_indices)

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(0)
        # distinct column norms keep the greedy argmax tie-free
        A = rng.standard_normal((6, 10)) * np.linspace(1, 4, 10)
        base = spa(A, 3)
        perm = rng.permutation(10)
        permuted = spa(A[:, perm], 3)
        inverse = np.empty(10, dtype=int)
        inverse[perm] = np.arange(10)
        assert [int(inverse[i]) for i in base] == permuted

    def test_residual_norms_nonincreasing(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((7, 12))
        R = A.copy()
        Q = np.zeros((7, 0))
        picked_norms = []
        for i in spa(A, 4):
            picked_norms.append(np.linalg.norm(R[:, i]))
            q = R[:, i] - Q @ (Q.T @ R[:, i])
            q /= np.linalg.norm(q)
            R = R - np.outer(q, q @ R)
            Q = np.column_stack([Q, q])
        assert all(b <= a + 1e-9 for a, b in zip(picked_norms,
                                                 picked_norms[1:]))

    def test_rank_deficiency(self):
        u = np.array([[1.0], [2.0]])
        A = np.hstack([u, 2 * u, 3 * u])    # rank one
        with pytest.raises(RankDeficiencyError):
            spa(np.vstack([A, A]), 2)
        with pytest.raises(RankDeficiencyError):
            spa(np.zeros((3, 3)), 1)

    def test_invalid_r(self):
        with pytest.raises(ValueError):
            spa(np.eye(3), 4)
