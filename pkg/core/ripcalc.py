"""
RIP Calculator - Restricted isometry and restricted orthogonality constants

Exact values enumerate every support (up to ENUMERATION_CAP); Monte-Carlo
values maximise over sampled supports and are lower bounds of the exact
constant. Supports are zero-based, sorted index tuples. The maximum is
reduced deterministically: largest δ, ties broken by the
lexicographically smallest witness.
"""
import itertools
import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from config.settings import (
    ENUMERATION_CAP,
    SAMPLING_REPLACEMENT_THRESHOLD,
    THREADS,
    SANDWICH_RELATIVE_TOLERANCE,
)
from core.errors import CapacityError, InvalidArgumentError
from core.spectra import GramSpectrum, MatrixLike, SpectrumCache, _entries, eig_sym, gram, spectrum_of
from core.utils import as_index_set, make_rng, parallel_map

Support = Tuple[int, ...]


@dataclass(frozen=True)
class RicResult:
    """δ_K over the examined supports."""
    K: int
    delta: float
    mode: str                      # exact | monte_carlo
    witness_support: Support
    lambda_min: float
    lambda_max: float
    supports_examined: int
    trials: Optional[int] = None

    @property
    def is_lower_bound(self) -> bool:
        return self.mode == "monte_carlo"

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "delta": self.delta,
            "mode": self.mode,
            "witness": list(self.witness_support),
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "supports_examined": self.supports_examined,
            "trials": self.trials,
            "lower_bound": self.is_lower_bound,
        }


@dataclass(frozen=True)
class RocResult:
    """θ_{K,K'} over the examined disjoint support pairs."""
    K: int
    K_prime: int
    theta: float
    supports: Tuple[Support, Support]
    pairs_examined: int

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "K_prime": self.K_prime,
            "theta": self.theta,
            "witness": [list(self.supports[0]), list(self.supports[1])],
            "pairs_examined": self.pairs_examined,
        }


def delta_from_spectrum(spectrum: GramSpectrum) -> float:
    """max(λ_max − 1, 1 − λ_min)."""
    return max(spectrum.lambda_max - 1.0, 1.0 - spectrum.lambda_min)


def ric_support(phi: MatrixLike, support: Sequence[int], cache: Optional[SpectrumCache] = None) -> Tuple[float, GramSpectrum]:
    """
    Isometry constant of a single support.

    Returns:
        (δ_I, spectrum of Φ_Iᵀ Φ_I)
    """
    spectrum = spectrum_of(phi, support, cache)
    return delta_from_spectrum(spectrum), spectrum


def _best(results: Iterable[Tuple[float, Support, float, float]]) -> Tuple[float, Support, float, float]:
    best = None
    for item in results:
        if best is None or item[0] > best[0] or (item[0] == best[0] and item[1] < best[1]):
            best = item
    return best


def _evaluate(phi_entries: np.ndarray, supports: List[Support], threads: int) -> Tuple[float, Support, float, float]:
    def one(support: Support):
        delta, spectrum = ric_support(phi_entries, support)
        return delta, support, spectrum.lambda_min, spectrum.lambda_max

    return _best(parallel_map(one, supports, threads=threads))


def _check_k(K: int, N: int):
    if not 1 <= int(K) <= int(N):
        raise InvalidArgumentError(f"Sparsity must satisfy 1 <= K <= N, got K={K}, N={N}")


def _report(result: RicResult):
    if result.delta >= 1.0:
        logger.warning(f"δ_{result.K} = {result.delta:.4f} >= 1 ({result.mode}); RIP constant outside [0, 1)")


# ══════════════════════════════════════════════════════════════════════
# RIC
# ══════════════════════════════════════════════════════════════════════

def ric_exact(phi: MatrixLike, K: int, cap: int = ENUMERATION_CAP, threads: int = THREADS) -> RicResult:
    """
    Exact δ_K by enumerating all C(N, K) supports.

    Raises:
        CapacityError: C(N, K) exceeds `cap`; use ric_monte_carlo instead.
    """
    entries = _entries(phi)
    N = entries.shape[1]
    _check_k(K, N)
    count = math.comb(N, K)
    if count > cap:
        raise CapacityError(
            f"C({N}, {K}) = {count} supports exceeds the enumeration cap {cap}; use monte_carlo mode"
        )

    logger.debug(f"ric_exact: enumerating {count} supports of size {K}")
    delta, witness, lmin, lmax = _evaluate(entries, list(itertools.combinations(range(N), K)), threads)
    result = RicResult(K, delta, "exact", witness, lmin, lmax, count)
    _report(result)
    return result


def sample_supports(N: int, K: int, trials: int, rng: np.random.Generator) -> List[Support]:
    """
    Uniformly sampled K-supports.

    Below SAMPLING_REPLACEMENT_THRESHOLD candidates, supports are distinct
    (without replacement, at most C(N, K) of them); above, each trial is
    an independent uniform draw.
    """
    count = math.comb(N, K)
    if count <= SAMPLING_REPLACEMENT_THRESHOLD:
        candidates = list(itertools.combinations(range(N), K))
        picks = rng.choice(count, size=min(trials, count), replace=False)
        return [candidates[i] for i in sorted(picks)]
    return [tuple(sorted(rng.choice(N, size=K, replace=False).tolist())) for _ in range(trials)]


def ric_monte_carlo(phi: MatrixLike, K: int, trials: int, seed: int, threads: int = THREADS) -> RicResult:
    """
    Lower bound on δ_K from `trials` sampled supports.
    """
    if int(trials) < 1:
        raise InvalidArgumentError(f"trials must be >= 1, got {trials}")
    entries = _entries(phi)
    N = entries.shape[1]
    _check_k(K, N)

    supports = sample_supports(N, K, trials, make_rng(seed))
    delta, witness, lmin, lmax = _evaluate(entries, supports, threads)
    result = RicResult(K, delta, "monte_carlo", witness, lmin, lmax, len(supports), trials)
    _report(result)
    return result


def ric_bounds_check(phi: MatrixLike, support: Sequence[int], x: np.ndarray, cache: Optional[SpectrumCache] = None) -> dict:
    """
    Isometry sandwich for one vector supported on `support`:
    (1−δ_I)‖x‖² <= λ_min‖x‖² <= ‖Φx‖² <= λ_max‖x‖² <= (1+δ_I)‖x‖².
    """
    entries = _entries(phi)
    idx = as_index_set(support, entries.shape[1])
    x = np.asarray(x, dtype=float)
    outside = np.delete(x, idx)
    if np.any(outside != 0):
        raise InvalidArgumentError("Vector has nonzeros outside the given support")

    delta, spectrum = ric_support(entries, idx, cache)
    energy = float(x @ x)
    measured = float(np.sum((entries @ x) ** 2))
    tol = SANDWICH_RELATIVE_TOLERANCE * 1e3 * max(1.0, energy)
    lower = spectrum.lambda_min * energy
    upper = spectrum.lambda_max * energy
    return {
        "delta": delta,
        "lower": (1.0 - delta) * energy,
        "lambda_lower": lower,
        "measured": measured,
        "lambda_upper": upper,
        "upper": (1.0 + delta) * energy,
        "holds": lower - tol <= measured <= upper + tol,
    }


# ══════════════════════════════════════════════════════════════════════
# ROC
# ══════════════════════════════════════════════════════════════════════

def roc(phi: MatrixLike, support: Sequence[int], other: Sequence[int]) -> float:
    """
    Tight orthogonality constant of one disjoint pair: ‖Φ_Iᵀ Φ_I'‖₂.

    Raises:
        InvalidArgumentError: overlapping supports.
    """
    entries = _entries(phi)
    a = as_index_set(support, entries.shape[1])
    b = as_index_set(other, entries.shape[1])
    if np.intersect1d(a, b).size:
        raise InvalidArgumentError(f"Supports overlap: {np.intersect1d(a, b).tolist()}")
    cross = entries[:, a].T @ entries[:, b]
    # ‖C‖₂² = λ_max(CᵀC)
    return float(np.sqrt(eig_sym(gram(cross)).lambda_max))


def roc_exact(phi: MatrixLike, K: int, K_prime: int, cap: int = ENUMERATION_CAP, threads: int = THREADS) -> RocResult:
    """
    θ_{K,K'} by enumerating every disjoint pair of supports.

    Raises:
        InvalidArgumentError: K + K' > N.
        CapacityError: pair count exceeds `cap`.
    """
    entries = _entries(phi)
    N = entries.shape[1]
    _check_k(K, N)
    _check_k(K_prime, N)
    if K + K_prime > N:
        raise InvalidArgumentError(f"K + K' must not exceed N, got {K} + {K_prime} > {N}")
    count = math.comb(N, K) * math.comb(N - K, K_prime)
    if count > cap:
        raise CapacityError(f"{count} disjoint support pairs exceeds the enumeration cap {cap}")

    pairs = [
        (first, second)
        for first in itertools.combinations(range(N), K)
        for second in itertools.combinations([j for j in range(N) if j not in first], K_prime)
    ]

    def one(pair):
        return roc(entries, pair[0], pair[1]), pair

    best = None
    for theta, pair in parallel_map(one, pairs, threads=threads):
        if best is None or theta > best[0] or (theta == best[0] and pair < best[1]):
            best = (theta, pair)
    return RocResult(K, K_prime, best[0], best[1], count)
