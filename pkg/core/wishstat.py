"""
Wishart Statistics - Eigenvalue campaigns over Gaussian Gram matrices and
the goodness-of-fit tests run on them

A campaign draws `trials` Gaussian matrices Φ (entries N(0, 1/M)), picks
a uniform random support of size |I| for each, and keeps every
eigenvalue of Φ_Iᵀ Φ_I. The statistic under test is
    t = (√λ − 1)·√(2M/|I|)
against N(0, 1).

Tests run on batches of consecutive trials, each batch just large enough
for the test's minimum sample size (KS_MIN_SAMPLES, JB_MIN_SAMPLES).
A campaign's pass rate is the fraction of passing batches. The pooled
sample can be tested as well; across trials its spread grows with |I|
and pooled tests reject for large campaigns.
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from loguru import logger
from scipy import stats

from config.settings import (
    KS_SIGNIFICANCE,
    JB_SIGNIFICANCE,
    KS_MIN_SAMPLES,
    JB_MIN_SAMPLES,
    MOMENT_MIN_SAMPLES,
    MOMENT_MEAN_SIGMAS,
    MOMENT_VARIANCE_RELATIVE,
    THREADS,
)
from core.ensembles import gen_gaussian_matrix
from core.errors import DegenerateSampleError, DomainError, InvalidArgumentError
from core.spectra import eig_sym, gershgorin_contains, gram
from core.utils import child_seed, make_rng, parallel_map


@dataclass(frozen=True)
class TestOutcome:
    """One goodness-of-fit decision."""
    __test__ = False  # not a pytest class

    name: str
    statistic: float
    critical_value: float
    significance: float
    sample_size: int

    @property
    def passed(self) -> bool:
        return self.statistic <= self.critical_value

    def to_dict(self) -> dict:
        return {
            "test": self.name,
            "statistic": self.statistic,
            "critical_value": self.critical_value,
            "significance": self.significance,
            "sample_size": self.sample_size,
            "pass": self.passed,
        }


@dataclass(frozen=True)
class EigenCampaign:
    """Eigenvalues of `trials` random Gram matrices, one row per trial."""
    M: int
    N: int
    supp_size: int
    trials: int
    seed: int
    eigenvalues: np.ndarray        # trials × |I|, each row descending
    trace_gaps: np.ndarray         # |Σλ − tr G| / max(1, tr G) per trial

    @property
    def samples(self) -> np.ndarray:
        """All eigenvalues, flattened in trial order."""
        return self.eigenvalues.ravel()

    @property
    def transformed(self) -> np.ndarray:
        return transform(self.samples, self.M, self.supp_size)


# ══════════════════════════════════════════════════════════════════════
# Transform
# ══════════════════════════════════════════════════════════════════════

def _scale(M: int, supp_size: int) -> float:
    if int(M) < 1 or int(supp_size) < 1:
        raise InvalidArgumentError(f"M and |I| must be positive, got M={M}, |I|={supp_size}")
    return math.sqrt(2.0 * M / supp_size)


def transform(eigenvalues: Sequence[float], M: int, supp_size: int) -> np.ndarray:
    """
    (√λ − 1)·√(2M/|I|), elementwise.

    Raises:
        DomainError: negative eigenvalue.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if np.any(lam < 0):
        raise DomainError("Eigenvalues must be non-negative")
    return (np.sqrt(lam) - 1.0) * _scale(M, supp_size)


def inverse_transform(values: Sequence[float], M: int, supp_size: int) -> np.ndarray:
    """λ = (t/√(2M/|I|) + 1)²."""
    t = np.asarray(values, dtype=float)
    root = t / _scale(M, supp_size) + 1.0
    if np.any(root < 0):
        raise DomainError("Value maps to a negative square root")
    return root ** 2


# ══════════════════════════════════════════════════════════════════════
# Campaigns
# ══════════════════════════════════════════════════════════════════════

def run_campaign(
    M: int,
    N: int,
    supp_size: int,
    trials: int,
    seed: int,
    solver: Optional[str] = None,
    threads: int = THREADS,
) -> EigenCampaign:
    """
    Draw `trials` Gram spectra.

    Trial t uses the seed child_seed(seed, t): a fresh Gaussian M×N
    matrix, then a uniform support of size |I|.

    Raises:
        InvalidArgumentError: trials < 1 or |I| outside [1, min(M, N)].
    """
    if int(trials) < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    if not 1 <= int(supp_size) <= min(int(M), int(N)):
        raise InvalidArgumentError(f"|I| must lie in [1, min(M, N)] = [1, {min(M, N)}], got {supp_size}")

    def one(t: int):
        trial_seed = child_seed(seed, t)
        phi = gen_gaussian_matrix(M, N, trial_seed)
        support = np.sort(make_rng(child_seed(trial_seed, 1)).choice(N, size=supp_size, replace=False))
        g = gram(phi.entries[:, support])
        spectrum = eig_sym(g, solver=solver)
        trace = float(np.trace(g))
        gap = abs(float(spectrum.raw_eigenvalues.sum()) - trace) / max(1.0, abs(trace))
        return spectrum.eigenvalues, gap

    logger.info(f"Wishart campaign M={M} N={N} |I|={supp_size} trials={trials} seed={seed}")
    results = parallel_map(one, range(trials), threads=threads)
    return EigenCampaign(
        M=M,
        N=N,
        supp_size=supp_size,
        trials=trials,
        seed=seed,
        eigenvalues=np.vstack([r[0] for r in results]),
        trace_gaps=np.array([r[1] for r in results]),
    )


def batch_size(supp_size: int, min_samples: int) -> int:
    """Trials per batch: ⌈min_samples / |I|⌉."""
    return -(-int(min_samples) // int(supp_size))


def batches(campaign: EigenCampaign, min_samples: int) -> List[np.ndarray]:
    """Transformed samples grouped by consecutive trials; a short tail batch is dropped."""
    size = batch_size(campaign.supp_size, min_samples)
    rows = transform(campaign.eigenvalues, campaign.M, campaign.supp_size)
    full = campaign.trials // size
    if campaign.trials % size:
        logger.debug(f"Dropping {campaign.trials % size} trailing trial(s) short of a batch")
    return [rows[i * size:(i + 1) * size].ravel() for i in range(full)]


def batch_outcomes(campaign: EigenCampaign, test: str = "ks", significance: Optional[float] = None) -> List[TestOutcome]:
    """Run KS or JB on every batch of the campaign."""
    if test == "ks":
        return [ks_test(np.sort(b), significance or KS_SIGNIFICANCE) for b in batches(campaign, KS_MIN_SAMPLES)]
    if test == "jb":
        return [jb_test(b, significance or JB_SIGNIFICANCE) for b in batches(campaign, JB_MIN_SAMPLES)]
    raise InvalidArgumentError(f"Unknown test: {test}")


def pass_rate(outcomes: Sequence[TestOutcome]) -> float:
    """Fraction of passing outcomes (NaN when empty)."""
    if not outcomes:
        return float("nan")
    return sum(o.passed for o in outcomes) / len(outcomes)


def campaign_report(campaign: EigenCampaign, pooled: bool = False, significance: Optional[float] = None) -> dict:
    """
    Summary of a campaign: moments of √λ, batch KS/JB pass rates and,
    with `pooled`, the single pooled-sample outcomes.
    """
    roots = np.sqrt(campaign.samples)
    ks = batch_outcomes(campaign, "ks", significance)
    jb = batch_outcomes(campaign, "jb", significance) if campaign.trials * campaign.supp_size >= JB_MIN_SAMPLES else []
    report = {
        "M": campaign.M,
        "N": campaign.N,
        "supp_size": campaign.supp_size,
        "trials": campaign.trials,
        "seed": campaign.seed,
        "sqrt_lambda_mean": float(roots.mean()),
        "sqrt_lambda_var": float(roots.var(ddof=1)) if roots.size > 1 else float("nan"),
        "nominal_var": campaign.supp_size / (2.0 * campaign.M),
        "max_trace_gap": float(campaign.trace_gaps.max()),
        "ks_batches": len(ks),
        "ks_pass_rate": pass_rate(ks),
        "jb_batches": len(jb),
        "jb_pass_rate": pass_rate(jb),
    }
    if pooled:
        t = np.sort(campaign.transformed)
        report["pooled_ks"] = ks_test(t, significance or KS_SIGNIFICANCE).to_dict()
        if t.size >= JB_MIN_SAMPLES:
            report["pooled_jb"] = jb_test(t, significance or JB_SIGNIFICANCE).to_dict()
    return report


# ══════════════════════════════════════════════════════════════════════
# Tests
# ══════════════════════════════════════════════════════════════════════

def ks_test(sorted_samples: Sequence[float], significance: float = KS_SIGNIFICANCE) -> TestOutcome:
    """
    Two-sided Kolmogorov-Smirnov test against N(0, 1).

    D = max_i max(i/n − F(x_i), F(x_i) − (i−1)/n), compared with the
    asymptotic critical value kstwobign.isf(α)/√n.

    Raises:
        InvalidArgumentError: fewer than KS_MIN_SAMPLES samples or unsorted input.
    """
    x = np.asarray(sorted_samples, dtype=float)
    n = x.size
    if n < KS_MIN_SAMPLES:
        raise InvalidArgumentError(f"KS test needs at least {KS_MIN_SAMPLES} samples, got {n}")
    if np.any(np.diff(x) < 0):
        raise InvalidArgumentError("KS test expects samples sorted ascending")

    cdf = stats.norm.cdf(x)
    i = np.arange(1, n + 1)
    statistic = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    critical = float(stats.kstwobign.isf(significance) / math.sqrt(n))
    return TestOutcome("ks", statistic, critical, significance, n)


def jb_test(samples: Sequence[float], significance: float = JB_SIGNIFICANCE) -> TestOutcome:
    """
    Jarque-Bera normality test: JB = n/6·(S² + (K − 3)²/4).

    Raises:
        InvalidArgumentError: fewer than JB_MIN_SAMPLES samples.
        DegenerateSampleError: zero sample variance.
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < JB_MIN_SAMPLES:
        raise InvalidArgumentError(f"JB test needs at least {JB_MIN_SAMPLES} samples, got {n}")
    centred = x - x.mean()
    m2 = float(np.mean(centred ** 2))
    if m2 == 0.0:
        raise DegenerateSampleError("JB test on a zero-variance sample")
    skew = float(np.mean(centred ** 3)) / m2 ** 1.5
    kurt = float(np.mean(centred ** 4)) / m2 ** 2
    statistic = n / 6.0 * (skew ** 2 + (kurt - 3.0) ** 2 / 4.0)
    critical = float(stats.chi2.ppf(1.0 - significance, 2))
    return TestOutcome("jb", statistic, critical, significance, n)


def diagonal_samples(M: int, count: int, seed: int) -> np.ndarray:
    """M·G_ii for `count` Gaussian columns; each is χ²(M)."""
    phi = gen_gaussian_matrix(M, count, seed)
    return M * np.sum(phi.entries ** 2, axis=0)


def chi_sq_moment_check(M: int, samples: Sequence[float]) -> dict:
    """
    Compare the sample mean and variance of M·G_ii with χ²(M): mean M,
    variance 2M.

    mean_ok: |mean − M| <= MOMENT_MEAN_SIGMAS·√(2M/n)
    var_ok: |var/(2M) − 1| <= MOMENT_VARIANCE_RELATIVE
    """
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < MOMENT_MIN_SAMPLES:
        raise InvalidArgumentError(f"Moment check needs at least {MOMENT_MIN_SAMPLES} samples, got {n}")
    mean = float(x.mean())
    variance = float(x.var(ddof=1))
    return {
        "n": n,
        "mean": mean,
        "variance": variance,
        "mean_ok": abs(mean - M) <= MOMENT_MEAN_SIGMAS * math.sqrt(2.0 * M / n),
        "var_ok": abs(variance / (2.0 * M) - 1.0) <= MOMENT_VARIANCE_RELATIVE,
    }


def tail_probs(lambda_max: float, lambda_min: float, cos_alpha: float, M: int, supp_size: int) -> Dict[str, float]:
    """
    Normal-approximation probabilities that an eigenvalue crosses the
    thresholds of the minus-term conditions.

        p_upper = 1 − Φ((√(λ_max cos α) − 1)·√(2M/|I|))
        p_lower = Φ((√(λ_min + (λ_max − λ_min)(1 − cos α)/cos² α) − 1)·√(2M/|I|))

    Raises:
        DomainError: cos α outside (0, 1] or negative eigenvalues.
    """
    if not 0.0 < cos_alpha <= 1.0:
        raise DomainError(f"cos α must lie in (0, 1], got {cos_alpha}")
    if lambda_min < 0 or lambda_max < 0:
        raise DomainError("Eigenvalues must be non-negative")
    scale = _scale(M, supp_size)
    upper_arg = (math.sqrt(lambda_max * cos_alpha) - 1.0) * scale
    lower_operand = lambda_min + (lambda_max - lambda_min) * (1.0 - cos_alpha) / cos_alpha ** 2
    if lower_operand < 0:
        raise DomainError(f"Negative operand under square root: {lower_operand}")
    lower_arg = (math.sqrt(lower_operand) - 1.0) * scale
    return {
        "p_upper": float(stats.norm.sf(upper_arg)),
        "p_lower": float(stats.norm.cdf(lower_arg)),
    }


def pass_rate_scan(
    N_values: Sequence[int],
    M_grid: Sequence[int],
    supp_grid: Sequence[int],
    campaigns_per_cell: int,
    seed: int,
    solver: Optional[str] = None,
    threads: int = THREADS,
) -> List[dict]:
    """
    KS batch pass rate for every (N, M, |I|) cell.

    Each cell runs enough trials for `campaigns_per_cell` KS batches.
    Cells with |I| > min(M, N) are reported with pass_rate NaN.
    """
    if not N_values or not M_grid or not supp_grid:
        raise InvalidArgumentError("Scan grids must be nonempty")
    if int(campaigns_per_cell) < 1:
        raise InvalidArgumentError(f"campaigns_per_cell must be >= 1, got {campaigns_per_cell}")

    rows = []
    cell = 0
    for N in N_values:
        for M in M_grid:
            for supp in supp_grid:
                cell += 1
                if supp > min(M, N):
                    rows.append({"N": N, "M": M, "supp_size": supp, "pass_rate": float("nan")})
                    continue
                trials = campaigns_per_cell * batch_size(supp, KS_MIN_SAMPLES)
                campaign = run_campaign(M, N, supp, trials, child_seed(seed, cell), solver=solver, threads=threads)
                rate = pass_rate(batch_outcomes(campaign, "ks"))
                logger.debug(f"cell N={N} M={M} |I|={supp}: KS pass rate {rate:.3f}")
                rows.append({"N": N, "M": M, "supp_size": supp, "pass_rate": rate})
    return rows


def gershgorin_campaign(M: int, N: int, supp_size: int, trials: int, seed: int, solver: Optional[str] = None) -> float:
    """
    Fraction of column-normalised Gram matrices whose spectrum lies in
    the union of their Gershgorin discs (always 1.0).
    """
    if int(trials) < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    inside = 0
    for t in range(trials):
        trial_seed = child_seed(seed, t)
        phi = gen_gaussian_matrix(M, N, trial_seed).entries
        support = np.sort(make_rng(child_seed(trial_seed, 1)).choice(N, size=supp_size, replace=False))
        cols = phi[:, support]
        g = gram(cols / np.linalg.norm(cols, axis=0))
        inside += gershgorin_contains(g, eig_sym(g, solver=solver))
    return inside / trials
