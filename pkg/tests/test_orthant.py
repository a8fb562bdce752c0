"""
Tests for core.orthant module
"""
import numpy as np
import pytest


def _random_instance(seed, noise=0.5, M=16, N=32, K=4):
    from core.ensembles import gen_gaussian_matrix, gen_signal_pair
    from core.orthant import rotate_pair
    from core.spectra import support_spectrum

    phi = gen_gaussian_matrix(M, N, seed)
    x_u, x_v = gen_signal_pair(N, K, seed + 1, mode="correlated", noise=noise)
    support = x_u.support
    spectrum = support_spectrum(phi, support)
    return phi, x_u, x_v, spectrum, rotate_pair(spectrum, x_u, x_v, support)


class TestRotatePair:
    """Tests for rotate_pair"""

    def test_identity_gram_keeps_coordinates(self):
        """A diagonal Gram rotates by V = I"""
        from core.orthant import rotate_pair
        from core.spectra import eig_sym

        spectrum = eig_sym(np.diag([4.0, 1.0]))
        pair = rotate_pair(spectrum, np.array([1.0, -2.0, 0.0]), np.array([3.0, 1.0, 0.0]), [0, 1])
        assert np.allclose(pair.z_u, [1.0, -2.0])
        assert pair.k1 == 1 and pair.k2 == 1
        assert pair.zero_idx.size == 0

    @pytest.mark.parametrize("seed", range(5))
    def test_preserves_inner_product_and_norms(self, seed):
        """V is orthogonal, so ⟨z_u, z_v⟩ = ⟨x_u, x_v⟩"""
        _, x_u, x_v, _, pair = _random_instance(seed)
        assert pair.inner == pytest.approx(float(x_u.values @ x_v.values), rel=1e-10)
        assert np.linalg.norm(pair.z_u) == pytest.approx(np.linalg.norm(x_u.values), rel=1e-10)

    def test_mass_outside_support(self):
        """Signals must live inside the support"""
        from core.errors import InvalidArgumentError
        from core.orthant import rotate_pair
        from core.spectra import eig_sym

        with pytest.raises(InvalidArgumentError):
            rotate_pair(eig_sym(np.eye(2)), np.array([1.0, 1.0, 1.0]), np.array([1.0, 0.0, 0.0]), [0, 1])

    def test_size_mismatch(self):
        """Support size must match the spectrum"""
        from core.errors import InvalidArgumentError
        from core.orthant import rotate_pair
        from core.spectra import eig_sym

        with pytest.raises(InvalidArgumentError):
            rotate_pair(eig_sym(np.eye(3)), np.array([1.0, 1.0]), np.array([1.0, 0.0]), [0, 1])


class TestExpandInner:
    """Tests for expand_inner"""

    def test_diagonal_example(self):
        """Gram diag(4, 1) with z_u = z_v = (1, 1) gives 4 + 1 = 5"""
        from core.orthant import expand_inner, rotate_pair
        from core.spectra import eig_sym

        spectrum = eig_sym(np.diag([4.0, 1.0]))
        pair = rotate_pair(spectrum, np.array([1.0, 1.0]), np.array([1.0, 1.0]), [0, 1])
        assert expand_inner(spectrum, pair) == pytest.approx(5.0)

    @pytest.mark.parametrize("seed", range(5))
    def test_equals_measured_inner_product(self, seed):
        """Σ λ_i z_ui z_vi = ⟨Φx_u, Φx_v⟩"""
        from core.orthant import expand_inner

        phi, x_u, x_v, spectrum, pair = _random_instance(seed)
        measured = float((phi.entries @ x_u.values) @ (phi.entries @ x_v.values))
        assert expand_inner(spectrum, pair) == pytest.approx(measured, rel=1e-9, abs=1e-12)


class TestOrthantRatio:
    """Tests for orthant_ratio and angle_chain"""

    def test_bound_at_cos_half(self):
        """cos α = 0.5 gives bound 1"""
        from core.orthant import orthant_ratio, rotate_pair
        from core.spectra import eig_sym

        z_v = np.array([0.5, np.sqrt(0.75)])
        pair = rotate_pair(eig_sym(np.eye(2)), np.array([1.0, 0.0]), z_v, [0, 1])
        result = orthant_ratio(pair)
        assert result["bound"] == pytest.approx(1.0)
        assert result["ratio"] == 0.0
        assert result["within"]

    def test_opposite_mass(self):
        """z_u = (1, 1), z_v = (2, −1): ratio 1 under bound √10 − 1"""
        from core.orthant import orthant_ratio, rotate_pair
        from core.spectra import eig_sym

        pair = rotate_pair(eig_sym(np.eye(2)), np.array([1.0, 1.0]), np.array([2.0, -1.0]), [0, 1])
        result = orthant_ratio(pair)
        assert result["ratio"] == pytest.approx(1.0)
        assert result["bound"] == pytest.approx(np.sqrt(10) - 1)
        assert result["k1"] == 1 and result["k2"] == 1

    def test_nonpositive_inner_product(self):
        """cos α <= 0 is outside the domain"""
        from core.errors import DomainError
        from core.orthant import orthant_ratio, rotate_pair
        from core.spectra import eig_sym

        pair = rotate_pair(eig_sym(np.eye(2)), np.array([1.0, 0.0]), np.array([-1.0, 1.0]), [0, 1])
        with pytest.raises(DomainError):
            orthant_ratio(pair)

    @pytest.mark.parametrize("seed", range(20))
    def test_ratio_and_chain_hold_on_random_pairs(self, seed):
        """Ratio stays under 1/cos α − 1 and cos θ >= cos α >= cos γ"""
        from core.orthant import angle_chain, orthant_ratio

        *_, pair = _random_instance(seed, noise=1.0)
        if pair.inner > 0:
            assert orthant_ratio(pair)["within"]
        assert angle_chain(pair)["ordered"]

    def test_chain_empty_parts(self):
        """An empty opposite-sign set gives cos γ = None"""
        from core.orthant import angle_chain, rotate_pair
        from core.spectra import eig_sym

        pair = rotate_pair(eig_sym(np.eye(2)), np.array([1.0, 1.0]), np.array([1.0, 2.0]), [0, 1])
        chain = angle_chain(pair)
        assert chain["cos_gamma"] is None
        assert chain["cos_theta"] == pytest.approx(chain["cos_alpha"])


class TestMinusTerm:
    """Tests for minus_term_diag"""

    @pytest.mark.parametrize("seed", range(20))
    def test_conditions_imply_conclusions(self, seed):
        """A satisfied condition always comes with its half of the sandwich"""
        from core.orthant import minus_term_diag

        *_, spectrum, pair = _random_instance(seed, noise=0.7)
        if pair.inner <= 0 or pair.k1 == 0:
            pytest.skip("needs cos α > 0 and a positive set")
        report = minus_term_diag(spectrum, pair, pair.cos_alpha)
        if report.condition_A:
            assert report.full_upper_holds
        if report.condition_B:
            assert report.full_lower_holds
        assert report.conclusion_holds

    def test_identity_spectrum(self):
        """λ ≡ 1: sum_A = (cos α − 1)·Σ_S p < 0 and sum_B = 0"""
        from core.orthant import minus_term_diag, rotate_pair
        from core.spectra import eig_sym

        spectrum = eig_sym(np.eye(2))
        pair = rotate_pair(spectrum, np.array([1.0, 1.0]), np.array([2.0, -1.0]), [0, 1])
        report = minus_term_diag(spectrum, pair, pair.cos_alpha)
        assert report.sum_A == pytest.approx((pair.cos_alpha - 1.0) * 2.0)
        assert report.sum_B == pytest.approx(0.0)
        assert report.condition_B and not report.condition_A
        assert report.full_holds

    def test_nonpositive_cos(self):
        """cos α <= 0 is a domain error"""
        from core.errors import DomainError
        from core.orthant import minus_term_diag, rotate_pair
        from core.spectra import eig_sym

        spectrum = eig_sym(np.eye(2))
        pair = rotate_pair(spectrum, np.array([1.0, 0.0]), np.array([0.0, 1.0]), [0, 1])
        with pytest.raises(DomainError):
            minus_term_diag(spectrum, pair, 0.0)
