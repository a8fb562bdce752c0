"""
Tests for core.wishstat module
"""
import math

import mpmath
import numpy as np
import pytest
from scipy import stats


class TestTransform:
    """Tests for transform and inverse_transform"""

    def test_unit_eigenvalue_maps_to_zero(self):
        """λ = 1 is the centre of the distribution"""
        from core.wishstat import transform

        assert transform([1.0], 128, 16)[0] == 0.0

    def test_scale(self):
        """λ = 4 at M = 8, |I| = 1 gives (2 − 1)·4 = 4"""
        from core.wishstat import inverse_transform, transform

        assert transform([4.0], 8, 1)[0] == pytest.approx(4.0)
        assert inverse_transform([4.0], 8, 1)[0] == pytest.approx(4.0)

    def test_negative_eigenvalue(self):
        """Negative input is outside the domain"""
        from core.errors import DomainError
        from core.wishstat import transform

        with pytest.raises(DomainError):
            transform([-0.1], 8, 1)

    def test_inverse_of_too_negative(self):
        """t below −√(2M/|I|) has no square root"""
        from core.errors import DomainError
        from core.wishstat import inverse_transform

        with pytest.raises(DomainError):
            inverse_transform([-10.0], 8, 1)


class TestKSTest:
    """Tests for ks_test"""

    def test_matches_scipy_statistic(self):
        """D agrees with scipy.stats.kstest"""
        from core.wishstat import ks_test

        x = np.sort(np.random.default_rng(3).standard_normal(200))
        outcome = ks_test(x)
        assert outcome.statistic == pytest.approx(stats.kstest(x, "norm").statistic, abs=1e-12)
        assert outcome.passed

    def test_critical_value(self):
        """Critical value is 1.6276/√n at α = 0.01"""
        from core.wishstat import ks_test

        outcome = ks_test(np.sort(np.random.default_rng(0).standard_normal(100)))
        assert outcome.critical_value == pytest.approx(1.6276 / 10, abs=1e-4)

    def test_uniform_sample_fails(self):
        """Uniform[0, 1] against N(0, 1) has D ≈ 0.5"""
        from core.wishstat import ks_test

        x = np.sort(np.random.default_rng(1).uniform(0, 1, 1000))
        outcome = ks_test(x)
        assert outcome.statistic == pytest.approx(0.5, abs=0.01)
        assert not outcome.passed

    def test_unsorted_rejected(self):
        """Input must be sorted"""
        from core.errors import InvalidArgumentError
        from core.wishstat import ks_test

        with pytest.raises(InvalidArgumentError):
            ks_test(np.arange(10.0)[::-1])

    def test_too_small(self):
        """Fewer than 8 samples is invalid"""
        from core.errors import InvalidArgumentError
        from core.wishstat import ks_test

        with pytest.raises(InvalidArgumentError):
            ks_test(np.arange(5.0))


class TestJBTest:
    """Tests for jb_test"""

    def test_matches_scipy_statistic(self):
        """JB agrees with scipy.stats.jarque_bera"""
        from core.wishstat import jb_test

        x = np.random.default_rng(4).standard_normal(500)
        outcome = jb_test(x)
        assert outcome.statistic == pytest.approx(stats.jarque_bera(x).statistic, rel=1e-10)
        assert outcome.critical_value == pytest.approx(9.2103, abs=1e-4)

    def test_exponential_fails(self):
        """A skewed sample is rejected"""
        from core.wishstat import jb_test

        assert not jb_test(np.random.default_rng(5).exponential(size=2000)).passed

    def test_constant_sample(self):
        """Zero variance is a degenerate sample"""
        from core.errors import DegenerateSampleError
        from core.wishstat import jb_test

        with pytest.raises(DegenerateSampleError):
            jb_test(np.ones(40))

    def test_too_small(self):
        """Fewer than 30 samples is invalid"""
        from core.errors import InvalidArgumentError
        from core.wishstat import jb_test

        with pytest.raises(InvalidArgumentError):
            jb_test(np.arange(10.0))


class TestTailProbs:
    """Tests for tail_probs"""

    def test_zero_argument(self):
        """cos α = 1, λ_max = 1 gives p_upper = 0.5"""
        from core.wishstat import tail_probs

        assert tail_probs(1.0, 1.0, 1.0, 128, 16)["p_upper"] == pytest.approx(0.5)

    def test_matches_mpmath(self):
        """Both tails agree with mpmath's normal CDF"""
        from core.wishstat import tail_probs

        M, supp, lmax, lmin, cos = 64, 8, 1.6, 0.5, 0.8
        scale = math.sqrt(2 * M / supp)
        upper = 1 - mpmath.ncdf((mpmath.sqrt(lmax * cos) - 1) * scale)
        lower = mpmath.ncdf((mpmath.sqrt(lmin + (lmax - lmin) * (1 - cos) / cos ** 2) - 1) * scale)
        probs = tail_probs(lmax, lmin, cos, M, supp)
        assert probs["p_upper"] == pytest.approx(float(upper), abs=1e-12)
        assert probs["p_lower"] == pytest.approx(float(lower), abs=1e-12)

    def test_upper_tail_decreases(self):
        """Larger λ_max cos α gives a smaller p_upper"""
        from core.wishstat import tail_probs

        values = [tail_probs(lmax, 0.5, 0.9, 128, 16)["p_upper"] for lmax in (1.0, 1.5, 2.0, 3.0)]
        assert values == sorted(values, reverse=True)

    def test_cos_domain(self):
        """cos α must lie in (0, 1]"""
        from core.errors import DomainError
        from core.wishstat import tail_probs

        with pytest.raises(DomainError):
            tail_probs(1.5, 0.5, 0.0, 128, 16)


class TestMoments:
    """Tests for diagonal_samples and chi_sq_moment_check"""

    def test_chi_square_moments(self):
        """M·G_ii has mean M and variance 2M"""
        from core.wishstat import chi_sq_moment_check, diagonal_samples

        check = chi_sq_moment_check(128, diagonal_samples(128, 5000, 7))
        assert check["mean_ok"] and check["var_ok"]

    def test_constant_samples_fail_variance(self):
        """Zero spread cannot match the χ² variance 2M"""
        from core.wishstat import chi_sq_moment_check

        check = chi_sq_moment_check(128, np.full(1000, 128.0))
        assert check["variance"] == 0.0
        assert check["mean_ok"]
        assert not check["var_ok"]

    def test_needs_enough_samples(self):
        """The moment check refuses tiny samples"""
        from core.errors import InvalidArgumentError
        from core.wishstat import chi_sq_moment_check

        with pytest.raises(InvalidArgumentError):
            chi_sq_moment_check(128, np.ones(10))


class TestCampaigns:
    """Tests for run_campaign, batching and pass rates"""

    def test_shape_and_trace(self):
        """trials × |I| eigenvalues, Σλ = tr G"""
        from core.wishstat import run_campaign

        campaign = run_campaign(32, 64, 4, 10, seed=1)
        assert campaign.eigenvalues.shape == (10, 4)
        assert campaign.samples.size == 40
        assert campaign.trace_gaps.max() < 1e-10

    def test_deterministic_across_threads(self):
        """Same seed gives identical eigenvalues for any worker count"""
        from core.wishstat import run_campaign

        one = run_campaign(16, 32, 2, 300, seed=9, threads=1)
        four = run_campaign(16, 32, 2, 300, seed=9, threads=4)
        assert np.array_equal(one.eigenvalues, four.eigenvalues)

    def test_support_too_large(self):
        """|I| > min(M, N) is invalid"""
        from core.errors import InvalidArgumentError
        from core.wishstat import run_campaign

        with pytest.raises(InvalidArgumentError):
            run_campaign(8, 16, 9, 1, seed=0)

    @pytest.mark.parametrize("supp,minimum,expected", [(16, 8, 1), (4, 8, 2), (4, 30, 8), (1, 30, 30)])
    def test_batch_size(self, supp, minimum, expected):
        """⌈min / |I|⌉ trials per batch"""
        from core.wishstat import batch_size

        assert batch_size(supp, minimum) == expected

    def test_tail_batch_dropped(self):
        """Trials short of a full batch are not tested"""
        from core.wishstat import batches, run_campaign

        campaign = run_campaign(16, 32, 4, 5, seed=2)
        groups = batches(campaign, 8)
        assert len(groups) == 2
        assert all(g.size == 8 for g in groups)

    def test_pass_rate_empty(self):
        """No outcomes gives NaN"""
        from core.wishstat import pass_rate

        assert math.isnan(pass_rate([]))

    @pytest.mark.slow
    def test_batch_ks_pass_rate(self):
        """M=128, N=256, |I|=16: at least 90% of KS batches pass"""
        from core.wishstat import campaign_report, run_campaign

        report = campaign_report(run_campaign(128, 256, 16, 300, seed=42, solver="lapack"), pooled=True)
        assert report["ks_batches"] == 300
        assert report["ks_pass_rate"] >= 0.9
        assert "pooled_ks" in report

    def test_scan_marks_impossible_cells(self):
        """Cells with |I| > min(M, N) report NaN"""
        from core.wishstat import pass_rate_scan

        rows = pass_rate_scan([32], [16], [2, 32], 3, seed=0, solver="lapack")
        assert [r["supp_size"] for r in rows] == [2, 32]
        assert 0.0 <= rows[0]["pass_rate"] <= 1.0
        assert math.isnan(rows[1]["pass_rate"])

    def test_pass_rate_falls_when_support_reaches_m(self):
        """|I| = 4 passes far more often than |I| = M = 400"""
        from core.wishstat import pass_rate_scan

        rows = pass_rate_scan([400], [400], [4, 400], 10, seed=5, solver="lapack")
        small, large = rows[0]["pass_rate"], rows[1]["pass_rate"]
        assert small >= 0.8
        assert small > large

    def test_gershgorin_campaign(self):
        """Normalised Gram spectra always sit inside their discs"""
        from core.wishstat import gershgorin_campaign

        assert gershgorin_campaign(16, 32, 6, 20, seed=3) == 1.0
