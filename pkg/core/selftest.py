"""
Selftest - Monte-Carlo campaigns over every bound, identity and statistic

Each check draws its own seeded instances, counts how many satisfy the
property, and passes when the count meets the check's requirement: all
instances for exact identities and bounds, a rate for statistical checks.
`scale` shrinks every campaign proportionally for quick runs.
"""
import hashlib
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from loguru import logger

from config.settings import KS_MIN_SAMPLES, THREADS
from core.ensembles import dct_basis, gen_gaussian_matrix, gen_signal_pair, gen_synthetic_image
from core.errors import InvalidArgumentError, RCPError
from core.orthant import angle_chain, expand_inner, minus_term_diag, orthant_ratio, rotate_pair
from core.pushbroom import adjacent_mu, ensemble_experiment, run_pushbroom
from core.rcpcalc import evaluate_pair
from core.ripcalc import ric_exact
from core.spectra import support_spectrum
from core.utils import child_seed, parallel_map, relative_close
from core.wishstat import (
    batch_outcomes,
    chi_sq_moment_check,
    diagonal_samples,
    pass_rate,
    run_campaign,
)

# Small instances keep the per-pair spectra cheap
INSTANCE_M = 16
INSTANCE_N = 32
INSTANCE_K = 3


@dataclass
class CheckResult:
    """Outcome of one selftest campaign."""
    name: str
    passed: int
    total: int
    required: float = 1.0            # fraction of instances that must pass
    details: Dict[str, object] = field(default_factory=dict)

    @property
    def rate(self) -> float:
        return self.passed / self.total if self.total else float("nan")

    @property
    def ok(self) -> bool:
        return self.total > 0 and self.rate >= self.required

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "total": self.total,
            "rate": self.rate,
            "required": self.required,
            "ok": self.ok,
            "details": self.details,
        }


def _count(n: int, scale: float, floor: int = 1) -> int:
    return max(floor, int(round(n * scale)))


def _instance(seed: int, index: int, mode: str = "independent", noise: float = 0.1):
    s = child_seed(seed, index)
    phi = gen_gaussian_matrix(INSTANCE_M, INSTANCE_N, child_seed(s, 0))
    x_u, x_v = gen_signal_pair(INSTANCE_N, INSTANCE_K, child_seed(s, 1), mode=mode, noise=noise)
    return phi, x_u, x_v


# ══════════════════════════════════════════════════════════════════════
# Bound containment
# ══════════════════════════════════════════════════════════════════════

def check_jl_containment(trials: int, seed: int, threads: int = THREADS) -> CheckResult:
    """cos β inside the guaranteed JL interval; closed-form hit rate reported."""
    def one(i):
        phi, x_u, x_v = _instance(seed, i)
        report = evaluate_pair(phi, x_u, x_v)
        return report.containment["jl_guaranteed"], report.containment["jl"]

    results = parallel_map(one, range(trials), threads=threads)
    closed = [r[1] for r in results if r[1] is not None]
    return CheckResult("jl_containment", sum(r[0] for r in results), trials, details={
        "closed_form_evaluated": len(closed),
        "closed_form_contained": sum(closed),
    })


def check_ip_support_containment(trials: int, seed: int, threads: int = THREADS) -> CheckResult:
    """cos β inside the per-support eigenvalue interval whenever the sandwich holds and cos α > 0."""
    def one(i):
        phi, x_u, x_v = _instance(seed, i, mode="correlated", noise=0.5)
        report = evaluate_pair(phi, x_u, x_v)
        applicable = report.sandwich.holds and report.geometry.cos_alpha > 0 and report.ip_support is not None
        return applicable, applicable and report.containment["ip_support"], report.sandwich.holds

    results = parallel_map(one, range(trials), threads=threads)
    applicable = [r for r in results if r[0]]
    return CheckResult("ip_support_containment", sum(r[1] for r in applicable), len(applicable), details={
        "instances": trials,
        "sandwich_rate": sum(r[2] for r in results) / trials,
    })


def check_orthogonal_containment(trials: int, seed: int, threads: int = THREADS) -> CheckResult:
    """Disjoint pairs: cos β inside the guaranteed orthogonal interval; closed-form lower end reported."""
    def one(i):
        phi, x_u, x_v = _instance(seed, i, mode="disjoint")
        report = evaluate_pair(phi, x_u, x_v)
        if report.orthogonal_guaranteed is None:
            return None
        closed = report.orthogonal
        return report.containment["orthogonal_guaranteed"], closed is not None and report.containment["orthogonal"]

    results = [r for r in parallel_map(one, range(trials), threads=threads) if r is not None]
    return CheckResult("orthogonal_containment", sum(r[0] for r in results), len(results), details={
        "instances": trials,
        "closed_form_contained": sum(bool(r[1]) for r in results),
    })


# ══════════════════════════════════════════════════════════════════════
# Eigenbasis identities
# ══════════════════════════════════════════════════════════════════════

def _rotated(seed: int, i: int, mode: str = "independent", noise: float = 0.1):
    phi, x_u, x_v = _instance(seed, i, mode=mode, noise=noise)
    joint = np.union1d(x_u.support, x_v.support)
    spectrum = support_spectrum(phi, joint)
    return phi, x_u, x_v, spectrum, rotate_pair(spectrum, x_u, x_v, joint)


def check_rotation_preservation(trials: int, seed: int) -> CheckResult:
    """‖z‖ = ‖x‖ and ⟨z_u, z_v⟩ = ⟨x_u, x_v⟩ within 1e-10 relative."""
    passed = 0
    for i in range(trials):
        _, x_u, x_v, _, pair = _rotated(seed, i)
        norms_ok = relative_close(np.linalg.norm(pair.z_u), np.linalg.norm(x_u.values), 1e-10) and \
            relative_close(np.linalg.norm(pair.z_v), np.linalg.norm(x_v.values), 1e-10)
        scale = np.linalg.norm(x_u.values) * np.linalg.norm(x_v.values)
        inner_ok = abs(pair.inner - float(x_u.values @ x_v.values)) <= 1e-10 * max(1.0, scale)
        passed += norms_ok and inner_ok
    return CheckResult("rotation_preservation", passed, trials)


def check_expansion_identity(trials: int, seed: int) -> CheckResult:
    """Σ λ_i z_ui z_vi equals ⟨Φx_u, Φx_v⟩ within 1e-9·max(1, |⟨Φx_u, Φx_v⟩|)."""
    passed = 0
    for i in range(trials):
        phi, x_u, x_v, spectrum, pair = _rotated(seed, i)
        direct = float((phi.entries @ x_u.values) @ (phi.entries @ x_v.values))
        passed += abs(expand_inner(spectrum, pair) - direct) <= 1e-9 * max(1.0, abs(direct))
    return CheckResult("expansion_identity", passed, trials)


def check_orthant_ratio(trials: int, seed: int) -> CheckResult:
    """Opposite-sign mass ratio within 1/cos α − 1, and the angle chain ordered."""
    passed = valid = chain_ok = 0
    for i in range(trials):
        *_, pair = _rotated(seed, i, mode="correlated", noise=1.0)
        if pair.inner <= 0:
            continue
        valid += 1
        ordered = angle_chain(pair)["ordered"]
        chain_ok += ordered
        passed += orthant_ratio(pair)["within"] and ordered
    return CheckResult("orthant_ratio", passed, valid, details={"instances": trials, "angle_chain_ordered": chain_ok})


def check_minus_term(trials: int, seed: int) -> CheckResult:
    """Satisfied sign conditions always come with their sandwich halves."""
    implication_ok = valid = both = 0
    for i in range(trials):
        _, _, _, spectrum, pair = _rotated(seed, i, mode="correlated", noise=0.1)
        if pair.inner <= 0 or pair.k1 == 0:
            continue
        valid += 1
        try:
            report = minus_term_diag(spectrum, pair, pair.cos_alpha)
        except RCPError as e:
            logger.error(f"minus-term instance {i}: {e}")
            continue
        implication_ok += 1
        both += report.condition_A and report.condition_B
    return CheckResult("minus_term", implication_ok, valid, details={"instances": trials, "both_conditions": both})


# ══════════════════════════════════════════════════════════════════════
# RIC oracle
# ══════════════════════════════════════════════════════════════════════

def check_ric_oracle(matrices: int, seed: int) -> CheckResult:
    """ric_exact(K=3) on 8×16 Gaussian matrices against numpy eigvalsh over all supports."""
    passed = 0
    for m in range(matrices):
        phi = gen_gaussian_matrix(8, 16, child_seed(seed, m))
        exact = ric_exact(phi, 3, threads=1)
        oracle = 0.0
        for support in itertools.combinations(range(16), 3):
            cols = phi.entries[:, support]
            lam = np.linalg.eigvalsh(cols.T @ cols)
            oracle = max(oracle, lam[-1] - 1.0, 1.0 - lam[0])
        passed += abs(exact.delta - oracle) <= 1e-8
    return CheckResult("ric_oracle", passed, matrices)


# ══════════════════════════════════════════════════════════════════════
# Statistics
# ══════════════════════════════════════════════════════════════════════

def check_wishart_moments(samples: int, seed: int, M: int = 128) -> CheckResult:
    """|mean(G_ii) − 1| <= 0.01 and |var(M·G_ii)/(2M) − 1| <= 0.1."""
    x = diagonal_samples(M, samples, seed)
    check = chi_sq_moment_check(M, x)
    mean_ok = abs(check["mean"] / M - 1.0) <= 0.01
    var_ok = abs(check["variance"] / (2.0 * M) - 1.0) <= 0.1
    return CheckResult("wishart_moments", int(mean_ok) + int(var_ok), 2, details=check)


def check_wishart_normality(trials: int, seed: int, threads: int = THREADS) -> CheckResult:
    """KS batch pass rate >= 0.9 at M=128, N=256, |I|=16."""
    campaign = run_campaign(128, 256, 16, trials, seed, threads=threads)
    outcomes = batch_outcomes(campaign, "ks")
    return CheckResult("wishart_normality", sum(o.passed for o in outcomes), len(outcomes), required=0.9, details={
        "max_trace_gap": float(campaign.trace_gaps.max()),
        "jb_pass_rate": pass_rate(batch_outcomes(campaign, "jb")),
    })


def check_wishart_trend(trials: int, seed: int, threads: int = THREADS) -> CheckResult:
    """KS pass rate at |I| = 4 exceeds the rate at |I| = M (M = 400)."""
    small = run_campaign(400, 800, 4, trials * math.ceil(KS_MIN_SAMPLES / 4), child_seed(seed, 0), solver="lapack", threads=threads)
    large = run_campaign(400, 800, 400, trials, child_seed(seed, 1), solver="lapack", threads=threads)
    rate_small = pass_rate(batch_outcomes(small, "ks"))
    rate_large = pass_rate(batch_outcomes(large, "ks"))
    return CheckResult("wishart_trend", int(rate_small > rate_large), 1, details={
        "rate_supp_4": rate_small, "rate_supp_400": rate_large,
    })


# ══════════════════════════════════════════════════════════════════════
# Push-broom
# ══════════════════════════════════════════════════════════════════════

def check_dct_preservation(trials: int, seed: int, N: int = 64) -> CheckResult:
    """Orthonormal DCT keeps energies, inner products and adjacent μ within 1e-10."""
    psi = dct_basis(N).entries
    passed = 0
    for i in range(trials):
        X = gen_synthetic_image(N, 4, 0.9, child_seed(seed, i))
        A = psi @ X
        energy_ok = np.allclose(np.sum(A ** 2, axis=0), np.sum(X ** 2, axis=0), rtol=1e-10, atol=0)
        inner_ok = abs(float(A[:, 0] @ A[:, 1]) - float(X[:, 0] @ X[:, 1])) <= 1e-10 * float(np.sum(X[:, :2] ** 2))
        mu_ok = np.allclose(adjacent_mu(A), adjacent_mu(X), rtol=0, atol=1e-10)
        passed += energy_ok and inner_ok and mu_ok
    return CheckResult("dct_preservation", passed, trials)


def check_curve_contrast(seed: int, threads: int = THREADS) -> CheckResult:
    """corr(μ_X, μ_Y) >= 0.9 on the smooth image and lower on the sparse ensemble."""
    smooth = run_pushbroom(seed=seed, threads=threads)
    ensemble = ensemble_experiment(seed=seed, threads=threads)
    smooth_corr = smooth.info["mu_correlation_XY"]
    ensemble_corr = ensemble.info["mu_correlation_XY"]
    contained = [row["jl_guaranteed_contains"] for run in (smooth, ensemble) for row in run.rcp_table
                 if row["jl_guaranteed_contains"] is not None]
    passed = int(smooth_corr >= 0.9) + int(ensemble_corr < smooth_corr) + int(all(contained))
    return CheckResult("curve_contrast", passed, 3, details={
        "smooth_correlation": smooth_corr,
        "ensemble_correlation": ensemble_corr,
        "pairs_checked": len(contained),
    })


def check_determinism(seed: int) -> CheckResult:
    """Two identical push-broom runs give byte-identical tables."""
    def digest(run) -> str:
        text = run.curves_frame().to_csv(index=False, float_format="%.17g") + run.rcp_frame().to_csv(index=False, float_format="%.17g")
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    first = digest(run_pushbroom(N=32, L=8, M=16, seed=seed, threads=1))
    second = digest(run_pushbroom(N=32, L=8, M=16, seed=seed, threads=1))
    return CheckResult("determinism", int(first == second), 1, details={"sha256": first})


# ══════════════════════════════════════════════════════════════════════
# Suite
# ══════════════════════════════════════════════════════════════════════

def run_selftest(seed: int = 0, scale: float = 1.0, threads: int = THREADS, only: Optional[List[str]] = None) -> List[CheckResult]:
    """
    Run every check (or those named in `only`).

    Args:
        seed: Root seed; each check gets its own child seed.
        scale: Multiplier on campaign sizes (1.0 = full counts).
        threads: Worker cap.
        only: Subset of check names.
    """
    checks: Dict[str, Callable[[int], CheckResult]] = {
        "jl_containment": lambda s: check_jl_containment(_count(10_000, scale), s, threads),
        "ip_support_containment": lambda s: check_ip_support_containment(_count(10_000, scale), s, threads),
        "orthogonal_containment": lambda s: check_orthogonal_containment(_count(10_000, scale), s, threads),
        "rotation_preservation": lambda s: check_rotation_preservation(_count(10_000, scale), s),
        "expansion_identity": lambda s: check_expansion_identity(_count(10_000, scale), s),
        "orthant_ratio": lambda s: check_orthant_ratio(_count(100_000, scale), s),
        "minus_term": lambda s: check_minus_term(_count(100_000, scale), s),
        "ric_oracle": lambda s: check_ric_oracle(_count(20, scale), s),
        "wishart_moments": lambda s: check_wishart_moments(_count(100_000, scale, floor=1000), s),
        "wishart_normality": lambda s: check_wishart_normality(_count(1000, scale, floor=20), s, threads),
        "wishart_trend": lambda s: check_wishart_trend(_count(50, scale, floor=5), s, threads),
        "dct_preservation": lambda s: check_dct_preservation(_count(1000, scale), s),
        "curve_contrast": lambda s: check_curve_contrast(s, threads),
        "determinism": lambda s: check_determinism(s),
    }
    names = list(checks) if not only else only
    unknown = [n for n in names if n not in checks]
    if unknown:
        raise InvalidArgumentError(f"Unknown selftest check(s): {', '.join(unknown)}")

    results = []
    for index, name in enumerate(checks):
        if name not in names:
            continue
        result = checks[name](child_seed(seed, index))
        status = "ok" if result.ok else "FAILED"
        logger.info(f"{name:<24} {result.passed}/{result.total} {status}")
        results.append(result)
    return results
