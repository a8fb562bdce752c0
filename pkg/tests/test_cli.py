"""
Tests for the main.py command-line interface
"""
import json

import pandas as pd
import pytest


@pytest.fixture(autouse=True)
def mock_database(mocker):
    """Keep run history out of the real database"""
    mocker.patch('database.models.init_database')
    mocker.patch('database.models.start_run', return_value=1)
    mocker.patch('database.models.finish_run')


def _run(*argv):
    from main import main

    return main([str(a) for a in argv])


class TestDispatch:
    """Argument handling and exit codes"""

    def test_no_command(self):
        """No subcommand prints help and exits 1"""
        assert _run() == 1

    def test_unknown_command(self):
        """Unknown subcommands are invalid"""
        assert _run("frobnicate") == 1

    def test_bad_choice(self, tmp_path):
        """Choices outside the list are invalid"""
        assert _run("gen", "--kind", "cauchy", "--out-dir", tmp_path) == 1

    def test_threads_must_be_positive(self, tmp_path):
        """--threads 0 is rejected before any work"""
        assert _run("gen", "--threads", 0, "--out-dir", tmp_path) == 1

    def test_numeric_failure_exit_code(self, tmp_path, mocker):
        """NumericFailureError maps to exit 2"""
        from core.errors import NumericFailureError

        mocker.patch('core.rcpcalc.batch_evaluate', side_effect=NumericFailureError("no convergence"))
        assert _run("rcp", "--pairs", 2, "--out-dir", tmp_path / "rcp") == 2
        assert not (tmp_path / "rcp").exists()

    def test_unexpected_error_exit_code(self, tmp_path, mocker):
        """Any other exception maps to exit 1"""
        mocker.patch('core.rcpcalc.batch_evaluate', side_effect=RuntimeError("boom"))
        assert _run("rcp", "--pairs", 2, "--out-dir", tmp_path) == 1

    def test_history_failure_does_not_fail_run(self, tmp_path, mocker):
        """A broken run-history database is only logged"""
        mocker.patch('database.models.start_run', side_effect=RuntimeError("locked"))
        assert _run("gen", "--M", 4, "--N", 8, "--out-dir", tmp_path) == 0
        assert (tmp_path / "matrix.csv").exists()

    def test_outcome_recorded(self, tmp_path):
        """finish_run gets the status, exit code and combined digest"""
        from core.manifest import RunManifest
        import database.models as models

        assert _run("gen", "--M", 4, "--N", 8, "--out-dir", tmp_path) == 0
        args, kwargs = models.finish_run.call_args
        assert args[:3] == (1, "ok", 0)
        outputs = json.loads((tmp_path / "manifest.json").read_text())["outputs"]
        assert kwargs["manifest_digest"] == RunManifest("gen", {}, outputs=outputs).combined_digest


class TestGen:
    """Tests for the gen command"""

    def test_gaussian(self, tmp_path):
        """Matrix, run info and manifest are written"""
        assert _run("gen", "--kind", "gaussian", "--M", 4, "--N", 8, "--seed", 1, "--out-dir", tmp_path) == 0
        matrix = pd.read_csv(tmp_path / "matrix.csv", header=None)
        assert matrix.shape == (4, 8)
        info = json.loads((tmp_path / "run.json").read_text())
        assert info["kind"] == "gaussian" and info["seed"] == 1
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert set(manifest["outputs"]) == {"matrix.csv", "run.json"}

    def test_same_seed_same_bytes(self, tmp_path):
        """Two runs with one seed publish identical manifests"""
        for name in ("a", "b"):
            assert _run("gen", "--M", 6, "--N", 12, "--seed", 5, "--out-dir", tmp_path / name) == 0
        assert (tmp_path / "a" / "manifest.json").read_bytes() == (tmp_path / "b" / "manifest.json").read_bytes()

    def test_threads_not_recorded(self, tmp_path):
        """Worker count does not change the manifest"""
        assert _run("gen", "--seed", 2, "--threads", 1, "--out-dir", tmp_path / "a") == 0
        assert _run("gen", "--seed", 2, "--threads", 3, "--out-dir", tmp_path / "b") == 0
        assert (tmp_path / "a" / "manifest.json").read_bytes() == (tmp_path / "b" / "manifest.json").read_bytes()

    def test_image(self, tmp_path):
        """Synthetic images come as CSV and PGM"""
        assert _run("gen", "--kind", "image", "--N", 16, "--L", 5, "--out-dir", tmp_path) == 0
        assert pd.read_csv(tmp_path / "image.csv", header=None).shape == (16, 5)
        assert (tmp_path / "image.pgm").read_bytes().startswith(b"P5")

    def test_disjoint_pair_too_dense(self, tmp_path):
        """2K > N cannot give disjoint supports"""
        assert _run("gen", "--kind", "pair", "--pair-mode", "disjoint", "--N", 8, "--K", 5, "--out-dir", tmp_path) == 1


class TestAnalysisCommands:
    """Tests for rip, rcp, orthant and wishart"""

    def test_rip(self, tmp_path):
        """Small matrices are enumerated exactly"""
        assert _run("rip", "--M", 6, "--N", 10, "--K", 2, "--K-prime", 1, "--out-dir", tmp_path) == 0
        report = json.loads((tmp_path / "rip.json").read_text())
        assert report["ric"]["mode"] == "exact"
        assert 0.0 <= report["ric"]["delta"]
        assert "theta" in report["roc"]

    def test_rip_over_cap(self, tmp_path):
        """Exact mode beyond the enumeration cap is refused"""
        assert _run("rip", "--mode", "exact", "--cap", 5, "--N", 10, "--K", 3, "--out-dir", tmp_path) == 1

    def test_rip_from_matrix_file(self, tmp_path):
        """A CSV matrix replaces the generated one"""
        import numpy as np
        from core.image_io import write_matrix

        path = write_matrix(np.eye(4), tmp_path / "eye.csv")
        assert _run("rip", "--matrix-file", path, "--K", 2, "--out-dir", tmp_path / "out") == 0
        report = json.loads((tmp_path / "out" / "rip.json").read_text())
        assert report["ric"]["delta"] == pytest.approx(0.0, abs=1e-12)

    def test_rcp(self, tmp_path):
        """Per-pair table and summary"""
        code = _run("rcp", "--M", 8, "--N", 16, "--K", 2, "--pairs", 5, "--solver", "lapack", "--out-dir", tmp_path)
        assert code == 0
        table = pd.read_csv(tmp_path / "rcp_pairs.csv")
        assert len(table) == 5
        for column in ("index", "xi", "cos_alpha", "cos_beta", "jl_lower", "jl_upper", "ip_lower", "ip_upper", "sandwich_holds"):
            assert column in table.columns
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["jl_guaranteed_contained"] == summary["jl_guaranteed_evaluated"] == 5

    def test_rcp_disjoint_too_dense(self, tmp_path):
        """Disjoint pairs need 2K <= N"""
        assert _run("rcp", "--N", 8, "--K", 5, "--pair-mode", "disjoint", "--pairs", 2, "--out-dir", tmp_path) == 1

    def test_orthant(self, tmp_path):
        """Instance diagnostics and summary"""
        code = _run("orthant", "--M", 8, "--N", 16, "--K", 3, "--instances", 6, "--solver", "lapack", "--out-dir", tmp_path)
        assert code == 0
        data = json.loads((tmp_path / "orthant.json").read_text())
        assert data["summary"]["instances"] == 6
        assert data["summary"]["ratio_within"] == data["summary"]["valid"]

    def test_wishart_campaign(self, tmp_path):
        """One campaign gives a JSON report"""
        code = _run("wishart", "--M", 16, "--N", 32, "--supp", 2, "--trials", 20, "--solver", "lapack", "--out-dir", tmp_path)
        assert code == 0
        report = json.loads((tmp_path / "wishart.json").read_text())
        assert report["trials"] == 20 and report["supp_size"] == 2

    def test_wishart_scan(self, tmp_path):
        """--scan writes one row per grid cell"""
        code = _run("wishart", "--scan", "--N-values", 32, "--M-grid", 16, "--supp-grid", 2, 4,
                    "--campaigns", 2, "--solver", "lapack", "--out-dir", tmp_path)
        assert code == 0
        scan = pd.read_csv(tmp_path / "wishart_scan.csv")
        assert list(scan.columns) == ["N", "M", "supp_size", "pass_rate"]
        assert len(scan) == 2


class TestPushbroomCommand:
    """Tests for the pushbroom command"""

    def test_synthetic(self, tmp_path):
        """Curves, RCP table and run info"""
        assert _run("pushbroom", "--N", 32, "--L", 6, "--M", 16, "--seed", 1, "--out-dir", tmp_path) == 0
        assert len(pd.read_csv(tmp_path / "curves.csv")) == 6
        assert len(pd.read_csv(tmp_path / "rcp_table.csv")) == 5
        info = json.loads((tmp_path / "run.json").read_text())
        assert "mu_correlation_XY" in info

    def test_missing_image(self, tmp_path):
        """A path that does not exist is invalid"""
        assert _run("pushbroom", "--image", tmp_path / "missing.pgm", "--out-dir", tmp_path / "out") == 1
        assert not (tmp_path / "out").exists()

    @pytest.mark.parametrize("flag", ["--N", "--L", "--M"])
    def test_zero_dimension_rejected(self, tmp_path, flag):
        """An explicit 0 is refused, not replaced by the default"""
        assert _run("pushbroom", flag, 0, "--out-dir", tmp_path / "out") == 1
        assert not (tmp_path / "out").exists()


class TestSelftestCommand:
    """Tests for the selftest and history commands"""

    def test_single_check(self, tmp_path):
        """A passing subset exits 0"""
        assert _run("selftest", "--only", "determinism", "--out-dir", tmp_path) == 0
        results = json.loads((tmp_path / "selftest.json").read_text())
        assert [r["name"] for r in results] == ["determinism"]

    def test_failing_check_exit_code(self, tmp_path, mocker):
        """Any failing check gives exit 3"""
        from core.selftest import CheckResult

        mocker.patch('core.selftest.run_selftest', return_value=[CheckResult("jl_containment", 9, 10)])
        assert _run("selftest", "--out-dir", tmp_path) == 3
        assert (tmp_path / "selftest.json").exists()

    def test_history(self, mocker):
        """history lists recent runs"""
        mocker.patch('database.models.recent_runs', return_value=[])
        assert _run("history", "--limit", 5) == 0
