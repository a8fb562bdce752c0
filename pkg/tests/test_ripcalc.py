"""
Tests for core.ripcalc module
"""
import itertools

import numpy as np
import pytest


def _brute_delta(phi, K):
    best = 0.0
    for support in itertools.combinations(range(phi.shape[1]), K):
        sub = phi[:, support]
        w = np.linalg.eigvalsh(sub.T @ sub)
        best = max(best, w[-1] - 1.0, 1.0 - w[0])
    return best


class TestRicExact:
    """Tests for ric_exact"""

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_eigvalsh_oracle(self, seed):
        """Exact δ_3 agrees with a numpy brute force"""
        from core.ensembles import gen_gaussian_matrix
        from core.ripcalc import ric_exact

        phi = gen_gaussian_matrix(8, 12, seed)
        result = ric_exact(phi, 3)
        assert result.delta == pytest.approx(_brute_delta(phi.entries, 3), abs=1e-10)
        assert result.supports_examined == 220
        assert not result.is_lower_bound

    def test_identity_has_zero_delta(self):
        """Orthonormal columns: δ = 0, lexicographically first witness"""
        from core.ripcalc import ric_exact

        result = ric_exact(np.eye(4), 2)
        assert result.delta == 0.0
        assert result.witness_support == (0, 1)

    def test_witness_attains_delta(self):
        """The witness support reproduces δ"""
        from core.ensembles import gen_gaussian_matrix
        from core.ripcalc import ric_exact, ric_support

        phi = gen_gaussian_matrix(6, 10, 4)
        result = ric_exact(phi, 2)
        assert ric_support(phi, result.witness_support)[0] == pytest.approx(result.delta, abs=1e-12)

    def test_thread_count_does_not_change_result(self):
        """threads=1 and threads=4 agree bit for bit"""
        from core.ensembles import gen_gaussian_matrix
        from core.ripcalc import ric_exact

        phi = gen_gaussian_matrix(8, 16, 3)
        assert ric_exact(phi, 3, threads=1) == ric_exact(phi, 3, threads=4)

    def test_monotone_in_k(self):
        """δ_1 <= δ_2 <= δ_3 <= δ_4"""
        from core.ensembles import gen_gaussian_matrix
        from core.ripcalc import ric_exact

        phi = gen_gaussian_matrix(6, 10, 2)
        deltas = [ric_exact(phi, k).delta for k in range(1, 5)]
        assert all(a <= b + 1e-12 for a, b in zip(deltas, deltas[1:]))

    def test_capacity(self):
        """Too many supports raises CapacityError"""
        from core.errors import CapacityError
        from core.ripcalc import ric_exact

        with pytest.raises(CapacityError):
            ric_exact(np.eye(10), 5, cap=100)

    def test_sparsity_range(self):
        """K outside [1, N] is invalid"""
        from core.errors import InvalidArgumentError
        from core.ripcalc import ric_exact

        with pytest.raises(InvalidArgumentError):
            ric_exact(np.eye(3), 4)

    def test_to_dict(self):
        """Serialized result lists the witness"""
        from core.ripcalc import ric_exact

        data = ric_exact(np.eye(3), 1).to_dict()
        assert data["witness"] == [0]
        assert data["mode"] == "exact"
        assert data["lower_bound"] is False


class TestRicMonteCarlo:
    """Tests for ric_monte_carlo and sample_supports"""

    def test_lower_bound_of_exact(self):
        """Sampled δ never exceeds the exact δ"""
        from core.ensembles import gen_gaussian_matrix
        from core.ripcalc import ric_exact, ric_monte_carlo

        phi = gen_gaussian_matrix(8, 14, 6)
        sampled = ric_monte_carlo(phi, 3, 50, seed=1)
        assert sampled.delta <= ric_exact(phi, 3).delta + 1e-15
        assert sampled.is_lower_bound

    def test_many_trials_reach_exact(self):
        """Sampling every support without replacement gives the exact value"""
        from core.ensembles import gen_gaussian_matrix
        from core.ripcalc import ric_exact, ric_monte_carlo

        phi = gen_gaussian_matrix(6, 8, 2)
        sampled = ric_monte_carlo(phi, 2, 1000, seed=0)
        assert sampled.supports_examined == 28
        assert sampled.delta == ric_exact(phi, 2).delta

    def test_deterministic(self):
        """Same seed, same result"""
        from core.ensembles import gen_gaussian_matrix
        from core.ripcalc import ric_monte_carlo

        phi = gen_gaussian_matrix(6, 20, 2)
        assert ric_monte_carlo(phi, 3, 30, seed=5) == ric_monte_carlo(phi, 3, 30, seed=5)

    def test_large_space_samples_with_replacement(self):
        """Above the threshold every trial is an independent draw"""
        from core.ripcalc import sample_supports
        from core.utils import make_rng

        supports = sample_supports(60, 10, 25, make_rng(0))
        assert len(supports) == 25
        assert all(len(set(s)) == 10 and list(s) == sorted(s) for s in supports)

    def test_trials_must_be_positive(self):
        """trials < 1 is invalid"""
        from core.errors import InvalidArgumentError
        from core.ripcalc import ric_monte_carlo

        with pytest.raises(InvalidArgumentError):
            ric_monte_carlo(np.eye(3), 1, 0, seed=0)


class TestBoundsCheck:
    """Tests for ric_bounds_check"""

    def test_sandwich_holds(self):
        """λ_min‖x‖² <= ‖Φx‖² <= λ_max‖x‖² inside the δ envelope"""
        from core.ensembles import gen_gaussian_matrix, gen_sparse_signal
        from core.ripcalc import ric_bounds_check

        phi = gen_gaussian_matrix(10, 20, 1)
        x = gen_sparse_signal(20, 4, 2)
        check = ric_bounds_check(phi, x.support, x.values)
        assert check["holds"]
        assert check["lower"] <= check["lambda_lower"] + 1e-12
        assert check["lambda_upper"] <= check["upper"] + 1e-12

    def test_rejects_off_support_vector(self):
        """x must vanish off the support"""
        from core.errors import InvalidArgumentError
        from core.ripcalc import ric_bounds_check

        with pytest.raises(InvalidArgumentError):
            ric_bounds_check(np.eye(3), [0], np.array([1.0, 1.0, 0.0]))


class TestRoc:
    """Tests for roc and roc_exact"""

    def test_orthonormal_columns(self):
        """Orthogonal columns give θ = 0"""
        from core.ripcalc import roc_exact

        assert roc_exact(np.eye(4), 1, 2).theta == pytest.approx(0.0, abs=1e-15)

    def test_repeated_column(self):
        """Two copies of a unit column give θ_{1,1} = 1"""
        from core.ripcalc import roc

        phi = np.array([[1.0, 1.0], [0.0, 0.0]])
        assert roc(phi, [0], [1]) == pytest.approx(1.0)

    def test_matches_spectral_norm(self):
        """roc equals the 2-norm of the cross Gram block"""
        from core.ensembles import gen_gaussian_matrix
        from core.ripcalc import roc

        phi = gen_gaussian_matrix(8, 10, 3).entries
        expected = np.linalg.norm(phi[:, [0, 4]].T @ phi[:, [1, 2, 7]], 2)
        assert roc(phi, [0, 4], [1, 2, 7]) == pytest.approx(expected, rel=1e-10)

    def test_bounds_disjoint_inner_products(self):
        """|⟨Φx, Φx'⟩| <= θ_{2,2}‖x‖‖x'‖ for random disjoint pairs"""
        from core.ensembles import gen_gaussian_matrix, gen_signal_pair
        from core.ripcalc import roc_exact

        phi = gen_gaussian_matrix(8, 12, 6).entries
        theta = roc_exact(phi, 2, 2).theta
        for seed in range(200):
            x, x_prime = gen_signal_pair(12, 2, seed, mode="disjoint")
            inner = abs(float((phi @ x.values) @ (phi @ x_prime.values)))
            assert inner <= theta * np.linalg.norm(x.values) * np.linalg.norm(x_prime.values) + 1e-12

    def test_overlap_rejected(self):
        """Overlapping supports are invalid"""
        from core.errors import InvalidArgumentError
        from core.ripcalc import roc

        with pytest.raises(InvalidArgumentError):
            roc(np.eye(3), [0, 1], [1])

    def test_k_sum_exceeds_n(self):
        """K + K' > N is invalid"""
        from core.errors import InvalidArgumentError
        from core.ripcalc import roc_exact

        with pytest.raises(InvalidArgumentError):
            roc_exact(np.eye(3), 2, 2)
