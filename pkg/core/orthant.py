"""
Orthant - Eigenbasis rotation of a signal pair and sign diagnostics

Rotating x_I into the eigenbasis of G = Φ_Iᵀ Φ_I turns the measured
inner product into Σ λ_i z_ui z_vi. The sign pattern of the products
z_ui z_vi (same-sign set S, opposite-sign set O) decides how far
⟨Φx_u, Φx_v⟩ can leave the band [λ_min, λ_max]·⟨x_u, x_v⟩.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from config.settings import SANDWICH_RELATIVE_TOLERANCE
from core.errors import DomainError, InvalidArgumentError, NumericFailureError
from core.rcpcalc import SignalLike, _values
from core.spectra import GramSpectrum
from core.utils import as_index_set


@dataclass(frozen=True)
class RotatedPair:
    """z = Vᵀ x_I for both signals, with the sign partition of z_ui z_vi."""
    z_u: np.ndarray
    z_v: np.ndarray
    same_sign_idx: np.ndarray
    opposite_sign_idx: np.ndarray
    zero_idx: np.ndarray

    @property
    def products(self) -> np.ndarray:
        return self.z_u * self.z_v

    @property
    def k1(self) -> int:
        return int(self.same_sign_idx.size)

    @property
    def k2(self) -> int:
        return int(self.opposite_sign_idx.size)

    @property
    def inner(self) -> float:
        return float(self.z_u @ self.z_v)

    @property
    def cos_alpha(self) -> float:
        return self.inner / float(np.linalg.norm(self.z_u) * np.linalg.norm(self.z_v))


@dataclass(frozen=True)
class MinusTermReport:
    """Eigenvalue-weighted sums over S and the sandwich conclusions they imply."""
    sum_A: float
    sum_B: float
    neg_count_A: int
    neg_count_B: int
    condition_A: bool
    condition_B: bool
    conclusion_holds: bool          # λ-sandwich over S
    full_upper_holds: bool          # Σ λ_i p_i <= λ_max ⟨z_u, z_v⟩
    full_lower_holds: bool          # Σ λ_i p_i >= λ_min ⟨z_u, z_v⟩

    @property
    def full_holds(self) -> bool:
        return self.full_upper_holds and self.full_lower_holds

    def to_dict(self) -> dict:
        return {
            "sum_A": self.sum_A,
            "sum_B": self.sum_B,
            "neg_count_A": self.neg_count_A,
            "neg_count_B": self.neg_count_B,
            "condition_A": self.condition_A,
            "condition_B": self.condition_B,
            "conclusion_holds": self.conclusion_holds,
            "full_upper_holds": self.full_upper_holds,
            "full_lower_holds": self.full_lower_holds,
        }


def rotate_pair(spectrum: GramSpectrum, x_u: SignalLike, x_v: SignalLike, support: Sequence[int]) -> RotatedPair:
    """
    Rotate both signals, restricted to `support`, into the eigenbasis.

    Args:
        spectrum: Spectrum of Φ_Iᵀ Φ_I.
        x_u: Length-N signal supported inside I.
        x_v: Length-N signal supported inside I.
        support: The index set I.

    Raises:
        InvalidArgumentError: size mismatch, or a signal has mass outside I.
    """
    u, v = _values(x_u), _values(x_v)
    if u.size != v.size:
        raise InvalidArgumentError(f"Signals differ in length: {u.size} vs {v.size}")
    idx = as_index_set(support, u.size)
    if idx.size != spectrum.size:
        raise InvalidArgumentError(f"Support size {idx.size} does not match spectrum size {spectrum.size}")
    outside = np.ones(u.size, dtype=bool)
    outside[idx] = False
    if np.any(u[outside] != 0) or np.any(v[outside] != 0):
        raise InvalidArgumentError("Signals must be supported inside the given index set")

    V = spectrum.eigenvectors
    z_u = V.T @ u[idx]
    z_v = V.T @ v[idx]
    products = z_u * z_v
    return RotatedPair(
        z_u=z_u,
        z_v=z_v,
        same_sign_idx=np.flatnonzero(products > 0),
        opposite_sign_idx=np.flatnonzero(products < 0),
        zero_idx=np.flatnonzero(products == 0),
    )


def expand_inner(spectrum: GramSpectrum, pair: RotatedPair) -> float:
    """Σ λ_i z_ui z_vi, which equals ⟨Φx_u, Φx_v⟩."""
    if spectrum.size != pair.z_u.size:
        raise InvalidArgumentError("Spectrum and rotated pair differ in size")
    return float(np.sum(spectrum.raw_eigenvalues * pair.products))


def orthant_ratio(pair: RotatedPair) -> dict:
    """
    Opposite-sign mass relative to the inner product.

    ratio = |Σ_O z_ui z_vi| / ⟨z_u, z_v⟩ never exceeds 1/cos α − 1.

    Raises:
        DomainError: ⟨z_u, z_v⟩ <= 0.
    """
    inner = pair.inner
    if inner <= 0.0:
        raise DomainError(f"Orthant ratio needs cos α > 0, got inner product {inner:.4g}")
    cos_alpha = pair.cos_alpha
    opposite = float(np.sum(pair.products[pair.opposite_sign_idx]))
    ratio = abs(opposite) / inner
    bound = 1.0 / cos_alpha - 1.0
    tol = SANDWICH_RELATIVE_TOLERANCE * max(1.0, 1.0 / cos_alpha) ** 2
    return {
        "ratio": ratio,
        "bound": bound,
        "within": ratio <= bound + tol,
        "k1": pair.k1,
        "k2": pair.k2,
        "cos_alpha": cos_alpha,
    }


def minus_term_diag(spectrum: GramSpectrum, pair: RotatedPair, cos_alpha: float) -> MinusTermReport:
    """
    Evaluate the two sign conditions over the same-sign set S.

        sum_A = Σ_S (λ_max cos α − λ_i) z_ui z_vi           (condition_A: >= 0)
        sum_B = Σ_S (c − (λ_i − λ_min)) z_ui z_vi           (condition_B: <= 0)
        c = (λ_max − λ_min)(1 − cos α) / cos² α

    condition_A bounds ⟨Φx_u, Φx_v⟩ by λ_max⟨x_u, x_v⟩ from above and
    condition_B by λ_min⟨x_u, x_v⟩ from below. Both implications are
    checked on every call.

    Raises:
        DomainError: cos α <= 0 or S empty.
        NumericFailureError: a satisfied condition without its conclusion.
    """
    if cos_alpha <= 0.0:
        raise DomainError(f"Minus-term conditions need cos α > 0, got {cos_alpha}")
    if pair.k1 == 0:
        raise DomainError("Same-sign set is empty")

    lam = spectrum.eigenvalues
    lam_max, lam_min = spectrum.lambda_max, spectrum.lambda_min
    products = pair.products
    S = pair.same_sign_idx

    terms_A = (lam_max * cos_alpha - lam[S]) * products[S]
    majorant = (lam_max - lam_min) * (1.0 - cos_alpha) / cos_alpha ** 2
    terms_B = (majorant - (lam[S] - lam_min)) * products[S]
    sum_A, sum_B = float(terms_A.sum()), float(terms_B.sum())

    measured = float(np.sum(lam * products))
    inner = float(products.sum())
    same = float(products[S].sum())
    weighted_same = float(np.sum(lam[S] * products[S]))
    scale = max(1.0, lam_max) * float(np.sum(np.abs(products)))
    tol = SANDWICH_RELATIVE_TOLERANCE * 1e3 * max(scale, 1e-300)

    report = MinusTermReport(
        sum_A=sum_A,
        sum_B=sum_B,
        neg_count_A=int(np.sum(terms_A < 0)),
        neg_count_B=int(np.sum(terms_B < 0)),
        condition_A=sum_A >= 0.0,
        condition_B=sum_B <= 0.0,
        conclusion_holds=lam_min * same - tol <= weighted_same <= lam_max * same + tol,
        full_upper_holds=measured <= lam_max * inner + tol,
        full_lower_holds=measured >= lam_min * inner - tol,
    )

    if (report.condition_A and not report.full_upper_holds) or (report.condition_B and not report.full_lower_holds):
        raise NumericFailureError(f"Sign condition satisfied without its conclusion: {report.to_dict()}")
    if not report.conclusion_holds:
        logger.warning(f"Same-sign sandwich failed numerically: {report.to_dict()}")
    return report


def angle_chain(pair: RotatedPair) -> dict:
    """
    Cosines of the same-sign (θ), full (α) and opposite-sign (γ)
    subvector angles; cos θ >= cos α >= cos γ.

    A part with no indices yields None.
    """
    def cos_on(idx: np.ndarray) -> Optional[float]:
        if idx.size == 0:
            return None
        a, b = pair.z_u[idx], pair.z_v[idx]
        return float((a @ b) / (np.linalg.norm(a) * np.linalg.norm(b)))

    cos_theta = cos_on(pair.same_sign_idx)
    cos_gamma = cos_on(pair.opposite_sign_idx)
    cos_alpha = pair.cos_alpha
    tol = SANDWICH_RELATIVE_TOLERANCE * 1e3
    ordered = (cos_theta is None or cos_theta >= cos_alpha - tol) and (cos_gamma is None or cos_alpha >= cos_gamma - tol)
    return {"cos_theta": cos_theta, "cos_alpha": cos_alpha, "cos_gamma": cos_gamma, "ordered": ordered}
