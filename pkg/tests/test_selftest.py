"""
Tests for core.selftest module
"""
import pytest


class TestChecks:
    """Small-scale runs of individual checks"""

    def test_jl_containment(self):
        """Every pair lands in the guaranteed JL interval"""
        from core.selftest import check_jl_containment

        result = check_jl_containment(40, seed=1)
        assert result.passed == result.total == 40
        assert result.ok

    def test_orthogonal_containment(self):
        """Every applicable disjoint pair lands in the guaranteed interval"""
        from core.selftest import check_orthogonal_containment

        result = check_orthogonal_containment(40, seed=2)
        assert result.passed == result.total

    def test_identities(self):
        """Rotation and expansion identities hold on every instance"""
        from core.selftest import check_expansion_identity, check_rotation_preservation

        assert check_rotation_preservation(30, seed=3).ok
        assert check_expansion_identity(30, seed=3).ok

    def test_orthant_and_minus_term(self):
        """Orthant ratio, angle chain and minus-term implications hold"""
        from core.selftest import check_minus_term, check_orthant_ratio

        assert check_orthant_ratio(50, seed=4).ok
        assert check_minus_term(50, seed=4).ok

    def test_ric_oracle(self):
        """Exact δ_3 matches the eigvalsh brute force"""
        from core.selftest import check_ric_oracle

        assert check_ric_oracle(1, seed=5).ok

    def test_dct_preservation(self):
        """DCT keeps energies, inner products and μ"""
        from core.selftest import check_dct_preservation

        assert check_dct_preservation(5, seed=6).ok

    def test_determinism(self):
        """Identical runs hash identically"""
        from core.selftest import check_determinism

        result = check_determinism(seed=7)
        assert result.ok
        assert len(result.details["sha256"]) == 64


class TestCheckResult:
    """Tests for CheckResult"""

    def test_rate_and_ok(self):
        """ok compares the pass rate with the requirement"""
        from core.selftest import CheckResult

        assert CheckResult("x", 9, 10, required=0.9).ok
        assert not CheckResult("x", 8, 10, required=0.9).ok
        assert not CheckResult("x", 0, 0).ok

    def test_to_dict(self):
        """Serialized form carries the counts"""
        from core.selftest import CheckResult

        data = CheckResult("x", 3, 4).to_dict()
        assert data["passed"] == 3 and data["total"] == 4 and data["ok"] is False


class TestRunSelftest:
    """Tests for run_selftest"""

    def test_only_subset(self):
        """`only` restricts the suite, in suite order"""
        from core.selftest import run_selftest

        results = run_selftest(seed=0, scale=0.002, only=["determinism", "ric_oracle"])
        assert [r.name for r in results] == ["ric_oracle", "determinism"]
        assert all(r.ok for r in results)

    def test_unknown_check(self):
        """Unknown check names are rejected"""
        from core.errors import InvalidArgumentError
        from core.selftest import run_selftest

        with pytest.raises(InvalidArgumentError):
            run_selftest(only=["no_such_check"])

    @pytest.mark.slow
    def test_full_suite_small_scale(self):
        """Every check passes at a reduced scale"""
        from core.selftest import run_selftest

        results = run_selftest(seed=0, scale=0.02)
        failed = [r.to_dict() for r in results if not r.ok]
        assert failed == []
