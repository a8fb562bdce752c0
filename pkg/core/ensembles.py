"""
Ensembles - Seeded generation of measurement matrices, sparsity bases,
sparse signals and synthetic push-broom images

Every generator is a pure function of its arguments: the same
(kind, shape, seed) always yields bit-identical arrays. Randomness comes
from numpy's PCG64 generator; normal variates use numpy's ziggurat
sampler.
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from loguru import logger
from scipy.fft import dct

from config.settings import (
    BASIS_ORTHONORMAL_TOLERANCE,
    COLUMN_NORM_TOLERANCE,
    GREY_MAX,
    NORMAL_METHOD,
    PRNG_NAME,
    SYNTHETIC_NOISE_SIGMA,
    SYNTHETIC_AMPLITUDE_LOG10,
)
from core.errors import InvalidArgumentError
from core.utils import make_rng


KINDS_MATRIX = ("gaussian", "bernoulli01", "custom")
KINDS_BASIS = ("dct", "identity", "custom-orthonormal")


# ══════════════════════════════════════════════════════════════════════
# Types
# ══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class MeasurementMatrix:
    """An M×N sensing matrix Φ and how it was generated."""
    entries: np.ndarray
    kind: str = "custom"
    seed: Optional[int] = None
    column_normalized: bool = False

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or 0 in entries.shape:
            raise InvalidArgumentError(f"Measurement matrix must be a nonempty 2-D array, got shape {entries.shape}")
        if self.kind not in KINDS_MATRIX:
            raise InvalidArgumentError(f"Unknown matrix kind: {self.kind}")
        if self.column_normalized:
            drift = float(np.max(np.abs(np.linalg.norm(entries, axis=0) - 1.0)))
            if drift > COLUMN_NORM_TOLERANCE:
                raise InvalidArgumentError(f"Columns marked normalized are off unit norm by {drift:.3e}")
        object.__setattr__(self, "entries", entries)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def describe(self) -> dict:
        """Generation metadata without the entries."""
        return {
            "kind": self.kind,
            "rows": self.rows,
            "cols": self.cols,
            "seed": self.seed,
            "column_normalized": self.column_normalized,
            "prng": PRNG_NAME if self.seed is not None else None,
            "normal_method": NORMAL_METHOD if self.kind == "gaussian" else None,
        }


@dataclass(frozen=True)
class SparseSignal:
    """A length-N vector with an explicit sorted support."""
    values: np.ndarray
    support: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise InvalidArgumentError("Signal must be a nonempty 1-D array")
        actual = np.flatnonzero(values)
        if self.support is None:
            support = actual
        else:
            support = np.sort(np.asarray(self.support, dtype=np.int64))
            if not np.array_equal(support, actual):
                raise InvalidArgumentError(
                    f"Support {support.tolist()} does not match nonzero entries {actual.tolist()}"
                )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "support", support)

    @property
    def length(self) -> int:
        return self.values.size

    @property
    def sparsity(self) -> int:
        return int(self.support.size)


@dataclass(frozen=True)
class SparsityBasis:
    """An orthonormal N×N transform Ψ (coefficients α = Ψ x)."""
    entries: np.ndarray
    kind: str = "custom-orthonormal"

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise InvalidArgumentError(f"Sparsity basis must be square, got shape {entries.shape}")
        if self.kind not in KINDS_BASIS:
            raise InvalidArgumentError(f"Unknown basis kind: {self.kind}")
        error = orthonormality_error(entries)
        if error > BASIS_ORTHONORMAL_TOLERANCE:
            raise InvalidArgumentError(f"Sparsity basis is not orthonormal (max |ΨΨᵀ - I| = {error:.3e})")
        object.__setattr__(self, "entries", entries)

    @property
    def size(self) -> int:
        return self.entries.shape[0]


def orthonormality_error(entries: np.ndarray) -> float:
    """Largest entry of |ΨΨᵀ − I|."""
    entries = np.asarray(entries, dtype=float)
    return float(np.max(np.abs(entries @ entries.T - np.eye(entries.shape[0]))))


def _check_dims(M: int, N: int):
    if int(M) < 1 or int(N) < 1:
        raise InvalidArgumentError(f"Matrix dimensions must be positive, got M={M}, N={N}")


# ══════════════════════════════════════════════════════════════════════
# Measurement matrices
# ══════════════════════════════════════════════════════════════════════

def gen_gaussian_matrix(M: int, N: int, seed: int) -> MeasurementMatrix:
    """
    Gaussian ensemble with entries i.i.d. N(0, 1/M).

    Args:
        M: Number of measurements (rows).
        N: Signal length (columns).
        seed: Generator seed.

    Returns:
        MeasurementMatrix of kind "gaussian".
    """
    _check_dims(M, N)
    rng = make_rng(seed)
    entries = rng.standard_normal((M, N)) / np.sqrt(M)
    return MeasurementMatrix(entries, kind="gaussian", seed=seed)


def gen_bernoulli01_matrix(M: int, N: int, seed: int, normalize: bool = False) -> MeasurementMatrix:
    """
    0-1 random ensemble, each entry 1 with probability 1/2.

    With `normalize`, all-zero columns are redrawn until nonzero and
    every column is scaled to unit Euclidean norm.
    """
    _check_dims(M, N)
    rng = make_rng(seed)
    entries = rng.integers(0, 2, size=(M, N)).astype(float)

    if normalize:
        for j in np.flatnonzero(~entries.any(axis=0)):
            redraws = 0
            while not entries[:, j].any():
                entries[:, j] = rng.integers(0, 2, size=M)
                redraws += 1
            logger.debug(f"Column {j} was all-zero; redrawn {redraws} time(s)")
        entries = entries / np.linalg.norm(entries, axis=0)

    return MeasurementMatrix(entries, kind="bernoulli01", seed=seed, column_normalized=normalize)


def normalize_columns(phi: MeasurementMatrix) -> MeasurementMatrix:
    """Scale every column of Φ to unit norm."""
    norms = np.linalg.norm(phi.entries, axis=0)
    if np.any(norms == 0):
        raise InvalidArgumentError("Cannot normalize a matrix with an all-zero column")
    return MeasurementMatrix(
        phi.entries / norms,
        kind=phi.kind,
        seed=phi.seed,
        column_normalized=True,
    )


# ══════════════════════════════════════════════════════════════════════
# Signals and bases
# ══════════════════════════════════════════════════════════════════════

def gen_sparse_signal(N: int, K: int, seed: int) -> SparseSignal:
    """
    K-sparse signal: uniform random support, standard normal nonzeros.

    Raises:
        InvalidArgumentError: unless 1 <= K <= N.
    """
    if not 1 <= int(K) <= int(N):
        raise InvalidArgumentError(f"Sparsity must satisfy 1 <= K <= N, got K={K}, N={N}")
    rng = make_rng(seed)
    support = np.sort(rng.choice(N, size=K, replace=False))
    nonzeros = rng.standard_normal(K)
    while np.any(nonzeros == 0.0):
        zero = nonzeros == 0.0
        nonzeros[zero] = rng.standard_normal(int(zero.sum()))

    values = np.zeros(N)
    values[support] = nonzeros
    return SparseSignal(values, support)


PAIR_MODES = ("independent", "disjoint", "correlated")


def gen_signal_pair(N: int, K: int, seed: int, mode: str = "independent", noise: float = 0.1) -> Tuple[SparseSignal, SparseSignal]:
    """
    Two K-sparse signals for pair experiments.

    Modes:
        independent: two unrelated K-sparse signals (supports may overlap).
        disjoint: supports drawn from 2K distinct indices, so ⟨x_u, x_v⟩ = 0.
        correlated: x_v = x_u + noise * N(0, 1) on the support of x_u.

    Raises:
        InvalidArgumentError: unknown mode, or 2K > N for disjoint pairs.
    """
    if mode not in PAIR_MODES:
        raise InvalidArgumentError(f"Unknown pair mode: {mode}")
    if not 1 <= int(K) <= int(N):
        raise InvalidArgumentError(f"Sparsity must satisfy 1 <= K <= N, got K={K}, N={N}")
    rng = make_rng(seed)

    def nonzero_normals(count: int) -> np.ndarray:
        draws = rng.standard_normal(count)
        while np.any(draws == 0.0):
            draws[draws == 0.0] = rng.standard_normal(int(np.sum(draws == 0.0)))
        return draws

    if mode == "disjoint":
        if 2 * K > N:
            raise InvalidArgumentError(f"Disjoint pair needs 2K <= N, got K={K}, N={N}")
        chosen = rng.choice(N, size=2 * K, replace=False)
        supports = (np.sort(chosen[:K]), np.sort(chosen[K:]))
    elif mode == "independent":
        supports = (np.sort(rng.choice(N, size=K, replace=False)), np.sort(rng.choice(N, size=K, replace=False)))
    else:
        support = np.sort(rng.choice(N, size=K, replace=False))
        supports = (support, support)

    x_u = np.zeros(N)
    x_u[supports[0]] = nonzero_normals(K)
    x_v = np.zeros(N)
    if mode == "correlated":
        x_v[supports[1]] = x_u[supports[1]] + noise * rng.standard_normal(K)
        x_v[supports[1][x_v[supports[1]] == 0.0]] = noise
    else:
        x_v[supports[1]] = nonzero_normals(K)
    return SparseSignal(x_u, supports[0]), SparseSignal(x_v, supports[1])


def dct_basis(N: int) -> SparsityBasis:
    """Orthonormal type-II DCT matrix; row k holds frequency k."""
    if int(N) < 1:
        raise InvalidArgumentError(f"Basis size must be positive, got {N}")
    entries = dct(np.eye(N), type=2, norm="ortho", axis=0)
    return SparsityBasis(entries, kind="dct")


def identity_basis(N: int) -> SparsityBasis:
    """Ψ = I."""
    if int(N) < 1:
        raise InvalidArgumentError(f"Basis size must be positive, got {N}")
    return SparsityBasis(np.eye(N), kind="identity")


# ══════════════════════════════════════════════════════════════════════
# Synthetic push-broom image
# ══════════════════════════════════════════════════════════════════════

def gen_synthetic_image(
    N: int,
    L: int,
    smoothness: float,
    seed: int,
    zero_band: Optional[Tuple[int, int]] = None,
) -> np.ndarray:
    """
    Grey-value image whose columns drift slowly, like push-broom scan lines.

    The first column is uniform on [0, 255]. Each next column adds
    (1 - smoothness) * a_j * N(0, sigma^2) per pixel and clips to
    [0, 255]; a_j is a per-column texture amplitude, log-uniform over
    SYNTHETIC_AMPLITUDE_LOG10, so flat and busy zones alternate.

    Args:
        N: Rows (pixels per scan line), >= 2.
        L: Columns (scan lines), >= 2.
        smoothness: In [0, 1]; 1 gives identical columns.
        seed: Generator seed.
        zero_band: Optional (start, stop) row range forced to 0 in every
            column, modelling zero-grey regions.

    Returns:
        N×L float array.
    """
    if int(N) < 2 or int(L) < 2:
        raise InvalidArgumentError(f"Image must be at least 2×2, got {N}×{L}")
    if not 0.0 <= smoothness <= 1.0:
        raise InvalidArgumentError(f"Smoothness must lie in [0, 1], got {smoothness}")

    rng = make_rng(seed)
    image = np.empty((N, L))
    image[:, 0] = rng.uniform(0.0, GREY_MAX, size=N)
    lo, hi = SYNTHETIC_AMPLITUDE_LOG10
    amplitudes = 10.0 ** rng.uniform(lo, hi, size=L - 1)
    step = (1.0 - smoothness) * SYNTHETIC_NOISE_SIGMA

    for j in range(L - 1):
        noise = rng.standard_normal(N)
        image[:, j + 1] = np.clip(image[:, j] + step * amplitudes[j] * noise, 0.0, GREY_MAX)

    if zero_band is not None:
        start, stop = zero_band
        if not 0 <= start < stop <= N:
            raise InvalidArgumentError(f"Zero band {zero_band} outside rows [0, {N}]")
        image[start:stop, :] = 0.0

    return image
