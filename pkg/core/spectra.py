"""
Spectra - Support restriction, Gram matrices, symmetric eigendecomposition
and Gershgorin discs

Every bound in the toolkit is driven by the spectrum of a Gram matrix
G = Φ_Iᵀ Φ_I. The reference eigensolver is cyclic Jacobi; numpy's LAPACK
`eigh` can be selected for large campaigns via RCP_EIGEN_SOLVER.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from config.settings import (
    EIGEN_SOLVER,
    JACOBI_MAX_SWEEPS,
    JACOBI_OFF_TOLERANCE,
    SYMMETRY_TOLERANCE,
    EIGEN_CLAMP_TOLERANCE,
)
from core.ensembles import MeasurementMatrix
from core.errors import InvalidArgumentError, NumericFailureError
from core.utils import as_index_set

MatrixLike = Union[MeasurementMatrix, np.ndarray]


@dataclass(frozen=True)
class GramSpectrum:
    """Eigenvalues (descending, clamped) and orthogonal eigenvectors of a Gram matrix."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    raw_eigenvalues: np.ndarray = field(default=None)
    sweeps: int = 0

    @property
    def size(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[-1])

    def reconstruct(self) -> np.ndarray:
        """V Λ Vᵀ."""
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.T


def _entries(phi: MatrixLike) -> np.ndarray:
    if isinstance(phi, MeasurementMatrix):
        return phi.entries
    arr = np.asarray(phi, dtype=float)
    if arr.ndim != 2:
        raise InvalidArgumentError(f"Expected a 2-D matrix, got shape {arr.shape}")
    return arr


# ══════════════════════════════════════════════════════════════════════
# Restriction and Gram
# ══════════════════════════════════════════════════════════════════════

def restrict(phi: MatrixLike, support: Sequence[int]) -> np.ndarray:
    """
    Columns of Φ indexed by `support`, in ascending index order.

    Args:
        phi: M×N matrix.
        support: Zero-based column indices, nonempty, no duplicates.

    Returns:
        M×|I| submatrix Φ_I.
    """
    entries = _entries(phi)
    idx = as_index_set(support, entries.shape[1])
    return entries[:, idx]


def gram(phi_i: np.ndarray) -> np.ndarray:
    """G = Φ_Iᵀ Φ_I, symmetrised exactly."""
    phi_i = np.asarray(phi_i, dtype=float)
    if phi_i.ndim == 1:
        phi_i = phi_i[:, None]
    g = phi_i.T @ phi_i
    return 0.5 * (g + g.T)


# ══════════════════════════════════════════════════════════════════════
# Eigendecomposition
# ══════════════════════════════════════════════════════════════════════

def _check_symmetric(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] == 0:
        raise InvalidArgumentError(f"Expected a nonempty square matrix, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise InvalidArgumentError("Matrix has non-finite entries")
    asym = float(np.max(np.abs(g - g.T)))
    if asym > SYMMETRY_TOLERANCE * max(1.0, float(np.max(np.abs(g)))):
        raise InvalidArgumentError(f"Matrix is not symmetric (max |G - Gᵀ| = {asym:.3e})")
    return 0.5 * (g + g.T)


def _off_norm(a: np.ndarray) -> float:
    # summed directly; ‖A‖² − Σ diag² cancels near convergence
    return float(np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2)))


def jacobi_eigh(
    g: np.ndarray,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
    tol: float = JACOBI_OFF_TOLERANCE,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """
    Cyclic Jacobi rotations on a symmetric matrix.

    Args:
        g: Symmetric matrix.
        max_sweeps: Sweep cap before giving up.
        tol: Stop once off(A) <= tol * ‖G‖_F.

    Returns:
        (diagonal of the converged matrix, rotation matrix V, sweeps used)
        with G = V diag(w) Vᵀ.

    Raises:
        NumericFailureError: no convergence within `max_sweeps`.
    """
    a = np.array(g, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = float(np.linalg.norm(a))
    if scale == 0.0:
        return np.zeros(n), v, 0

    sweeps = 0
    while _off_norm(a) > tol * scale:
        if sweeps >= max_sweeps:
            raise NumericFailureError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off = {_off_norm(a):.3e}, ‖G‖_F = {scale:.3e})"
            )
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vec_p = v[:, p].copy()
                vec_q = v[:, q]
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
        sweeps += 1

    return np.diag(a).copy(), v, sweeps


def eig_sym(g: np.ndarray, solver: Optional[str] = None) -> GramSpectrum:
    """
    Orthogonal diagonalisation G = V Λ Vᵀ with eigenvalues descending.

    Eigenvalues in [-tol, 0) (tol = EIGEN_CLAMP_TOLERANCE * max(1, ‖G‖_F))
    are clamped to 0; the unclamped values stay in `raw_eigenvalues`.
    Equal eigenvalues keep the solver's order (stable sort).

    Args:
        g: Symmetric matrix (within SYMMETRY_TOLERANCE).
        solver: "jacobi" or "lapack"; defaults to RCP_EIGEN_SOLVER.

    Raises:
        InvalidArgumentError: non-square or non-symmetric input.
        NumericFailureError: Jacobi iteration cap reached.
    """
    g = _check_symmetric(g)
    solver = solver or EIGEN_SOLVER

    if solver == "jacobi":
        w, v, sweeps = jacobi_eigh(g)
    elif solver == "lapack":
        w, v = np.linalg.eigh(g)
        sweeps = 0
    else:
        raise InvalidArgumentError(f"Unknown eigensolver: {solver}")

    order = np.argsort(-w, kind="stable")
    raw = w[order]
    v = v[:, order]

    clamp_tol = EIGEN_CLAMP_TOLERANCE * max(1.0, float(np.linalg.norm(g)))
    clamped = raw.copy()
    clamped[(clamped < 0.0) & (clamped >= -clamp_tol)] = 0.0
    return GramSpectrum(clamped, v, raw, sweeps)


def support_spectrum(phi: MatrixLike, support: Sequence[int], solver: Optional[str] = None) -> GramSpectrum:
    """Spectrum of Φ_Iᵀ Φ_I."""
    return eig_sym(gram(restrict(phi, support)), solver=solver)


class SpectrumCache:
    """
    Support spectra of one matrix, keyed by the sorted support.

    Dense push-broom columns and repeated pairs hit the same supports
    many times; the cache also pins the eigensolver for every lookup.
    """

    def __init__(self, phi: MatrixLike, solver: Optional[str] = None):
        self.entries = _entries(phi)
        self.solver = solver
        self._cache: Dict[Tuple[int, ...], GramSpectrum] = {}
        self.hits = 0

    def spectrum(self, support: Sequence[int]) -> GramSpectrum:
        key = tuple(as_index_set(support, self.entries.shape[1]).tolist())
        cached = self._cache.get(key)
        if cached is not None:
            self.hits += 1
            return cached
        spectrum = support_spectrum(self.entries, key, solver=self.solver)
        self._cache[key] = spectrum
        if len(key) > 64:
            logger.debug(f"Cached spectrum of a {len(key)}-column support")
        return spectrum

    def __len__(self) -> int:
        return len(self._cache)


def spectrum_of(phi: MatrixLike, support: Sequence[int], cache: Optional[SpectrumCache] = None) -> GramSpectrum:
    """support_spectrum, served from `cache` when one is given."""
    if cache is not None:
        return cache.spectrum(support)
    return support_spectrum(phi, support)


def gram_spectrum_json(spectrum: GramSpectrum) -> dict:
    """Serializable form of a spectrum for CLI diagnostics."""
    return {
        "size": spectrum.size,
        "eigenvalues": spectrum.eigenvalues.tolist(),
        "raw_eigenvalues": spectrum.raw_eigenvalues.tolist(),
        "eigenvectors_row_major": spectrum.eigenvectors.ravel().tolist(),
        "lambda_max": spectrum.lambda_max,
        "lambda_min": spectrum.lambda_min,
        "sweeps": spectrum.sweeps,
    }


# ══════════════════════════════════════════════════════════════════════
# Gershgorin
# ══════════════════════════════════════════════════════════════════════

def gershgorin_discs(g: np.ndarray) -> List[Tuple[float, float]]:
    """Per-row (centre G_ii, radius Σ_{j≠i} |G_ij|)."""
    g = np.asarray(g, dtype=float)
    absg = np.abs(g)
    radii = absg.sum(axis=1) - np.diag(absg)
    return [(float(c), float(r)) for c, r in zip(np.diag(g), radii)]


def gershgorin_radius(g: np.ndarray) -> float:
    """max_i Σ_{j≠i} |G_ij|."""
    return max(r for _, r in gershgorin_discs(g))


def gershgorin_contains(g: np.ndarray, spectrum: GramSpectrum, tol: float = 1e-10) -> bool:
    """
    Check that every eigenvalue lies in the union of the Gershgorin discs.

    For a unit-diagonal G this is |λ - 1| <= r for every eigenvalue.
    """
    discs = gershgorin_discs(g)
    scale = max(1.0, float(np.max(np.abs(np.asarray(g)))))
    for lam in spectrum.raw_eigenvalues:
        if not any(abs(lam - c) <= r + tol * scale for c, r in discs):
            logger.warning(f"Eigenvalue {lam:.6g} outside all Gershgorin discs")
            return False
    return True
