"""
RCP Calculator - Angle geometry of a measured signal pair and the
restricted conformal bound intervals on cos β

Interval families:
  - rcp_jl: from a Johnson-Lindenstrauss constant ε and per-support
    isometry constants (closed form plus a guaranteed variant).
  - rcp_ip: from the isometry constant of the joint support.
  - rcp_ip_support: eigenvalue form with per-support constants, valid
    whenever the λ-sandwich on ⟨Φx_u, Φx_v⟩ holds.
  - rcp_orthogonal: for orthogonal pairs (closed form plus a guaranteed
    variant).

The closed forms are evaluated as stated. Containment is asserted
against their guaranteed counterparts, because valid pairs can leave
the closed forms:
  - rcp_jl: Φ = diag(√1.2, √0.8), x_u = (1, 1)/√2, x_v = (1, −1)/√2
    gives cos β = 0.2 above an upper end of 0.
  - rcp_orthogonal: two columns of squared norm 0.8 with inner product
    −0.5 give δ_K = 0.7, δ_max = 0.2 and cos β = −0.625, below the
    lower end −0.7/1.2.
"""
import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from config.settings import (
    COS_CLAMP_TOLERANCE,
    CONTAINMENT_TOLERANCE,
    SANDWICH_RELATIVE_TOLERANCE,
    THREADS,
)
from core.ensembles import SparseSignal
from core.errors import (
    DegenerateMeasurementError,
    InvalidArgumentError,
    NumericFailureError,
    UndefinedAngleError,
)
from core.ripcalc import ric_support
from core.spectra import MatrixLike, SpectrumCache, _entries, spectrum_of
from core.utils import parallel_map, support_of

SignalLike = Union[SparseSignal, np.ndarray]

KINDS = ("rcp_jl", "rcp_jl_guaranteed", "rcp_ip", "rcp_ip_support", "rcp_orthogonal", "rcp_orthogonal_guaranteed")


# ══════════════════════════════════════════════════════════════════════
# Types
# ══════════════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class PairGeometry:
    """Angles, energy balance and per-support isometry constants of (x_u, x_v)."""
    xi: float
    cos_alpha: float
    cos_beta: float
    delta_u: float
    delta_v: float
    delta_max: float
    inner_x: float
    inner_y: float
    norm_x_u: float
    norm_x_v: float
    norm_y_u: float
    norm_y_v: float
    support_u: Tuple[int, ...]
    support_v: Tuple[int, ...]

    @property
    def joint_support(self) -> Tuple[int, ...]:
        return tuple(sorted(set(self.support_u) | set(self.support_v)))

    @property
    def disjoint(self) -> bool:
        return not set(self.support_u) & set(self.support_v)


@dataclass(frozen=True)
class BoundInterval:
    """
    An interval for cos β.

    `lower`/`upper` are the raw formula values; `reported_lower` and
    `reported_upper` are clamped to [-1, 1].
    """
    lower: float
    upper: float
    kind: str
    constants_used: Dict[str, float] = field(default_factory=dict)

    @property
    def reported_lower(self) -> float:
        return max(self.lower, -1.0)

    @property
    def reported_upper(self) -> float:
        return min(self.upper, 1.0)

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, value: float, tol: float = CONTAINMENT_TOLERANCE) -> bool:
        return self.lower - tol <= value <= self.upper + tol

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lower": self.lower,
            "upper": self.upper,
            "reported_lower": self.reported_lower,
            "reported_upper": self.reported_upper,
            "constants": dict(self.constants_used),
        }


@dataclass(frozen=True)
class SandwichCheck:
    """λ_min⟨x_u,x_v⟩ <= ⟨Φx_u,Φx_v⟩ <= λ_max⟨x_u,x_v⟩ on the joint support."""
    holds: bool
    lhs: float
    mid: float
    rhs: float
    lambda_min: float
    lambda_max: float
    delta_joint: float


@dataclass(frozen=True)
class PairReport:
    """Everything evaluate_pair knows about one pair."""
    geometry: PairGeometry
    epsilon: float
    delta_K: float
    delta_source: str              # joint_support | global
    sandwich: SandwichCheck
    jl: Optional[BoundInterval]
    jl_guaranteed: BoundInterval
    ip: Optional[BoundInterval]
    ip_support: Optional[BoundInterval]
    orthogonal: Optional[BoundInterval] = None
    orthogonal_guaranteed: Optional[BoundInterval] = None

    @property
    def containment(self) -> Dict[str, Optional[bool]]:
        """Whether cos β falls inside each computed interval (None if not computed)."""
        cos_beta = self.geometry.cos_beta
        intervals = {
            "jl": self.jl,
            "jl_guaranteed": self.jl_guaranteed,
            "ip": self.ip,
            "ip_support": self.ip_support,
            "orthogonal": self.orthogonal,
            "orthogonal_guaranteed": self.orthogonal_guaranteed,
        }
        return {name: None if iv is None else iv.contains(cos_beta) for name, iv in intervals.items()}

    def to_row(self, index: int) -> dict:
        """Flat record for the per-pair CSV table."""
        def ends(iv: Optional[BoundInterval]) -> Tuple[float, float]:
            return (np.nan, np.nan) if iv is None else (iv.lower, iv.upper)

        g = self.geometry
        jl_lo, jl_hi = ends(self.jl)
        jg_lo, jg_hi = ends(self.jl_guaranteed)
        ip_lo, ip_hi = ends(self.ip)
        is_lo, is_hi = ends(self.ip_support)
        or_lo, or_hi = ends(self.orthogonal)
        og_lo, og_hi = ends(self.orthogonal_guaranteed)
        return {
            "index": index,
            "xi": g.xi,
            "cos_alpha": g.cos_alpha,
            "cos_beta": g.cos_beta,
            "jl_lower": jl_lo,
            "jl_upper": jl_hi,
            "jl_guaranteed_lower": jg_lo,
            "jl_guaranteed_upper": jg_hi,
            "ip_lower": ip_lo,
            "ip_upper": ip_hi,
            "ip_support_lower": is_lo,
            "ip_support_upper": is_hi,
            "orthogonal_lower": or_lo,
            "orthogonal_upper": or_hi,
            "orthogonal_guaranteed_lower": og_lo,
            "orthogonal_guaranteed_upper": og_hi,
            "sandwich_holds": bool(self.sandwich.holds),
            "epsilon": self.epsilon,
            "delta_max": g.delta_max,
            "delta_K": self.delta_K,
        }


# ══════════════════════════════════════════════════════════════════════
# Helpers
# ══════════════════════════════════════════════════════════════════════

def _values(x: SignalLike) -> np.ndarray:
    if isinstance(x, SparseSignal):
        return x.values
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise InvalidArgumentError(f"Signal must be 1-D, got shape {arr.shape}")
    return arr


def clamp_cos(value: float, name: str = "cos") -> float:
    """
    Clamp a computed cosine to [-1, 1].

    Raises:
        NumericFailureError: excursion beyond COS_CLAMP_TOLERANCE.
    """
    if not np.isfinite(value) or abs(value) > 1.0 + COS_CLAMP_TOLERANCE:
        raise NumericFailureError(f"{name} = {value!r} outside [-1, 1]")
    return float(min(1.0, max(-1.0, value)))


def _check_unit(name: str, value: float):
    if not 0.0 <= value < 1.0:
        raise InvalidArgumentError(f"{name} must lie in [0, 1), got {value}")


def _check_cos(cos_alpha: float):
    if not -1.0 <= cos_alpha <= 1.0:
        raise InvalidArgumentError(f"cos α must lie in [-1, 1], got {cos_alpha}")


def _divide(numerator: float, denominator: float) -> float:
    if denominator > 0.0:
        return numerator / denominator
    if numerator == 0.0:
        return 0.0
    return np.inf if numerator > 0 else -np.inf


# ══════════════════════════════════════════════════════════════════════
# Geometry
# ══════════════════════════════════════════════════════════════════════

def pair_geometry(phi: MatrixLike, x_u: SignalLike, x_v: SignalLike, cache: Optional[SpectrumCache] = None) -> PairGeometry:
    """
    Compute ξ, cos α, cos β and the per-support isometry constants.

    Args:
        phi: M×N measurement matrix.
        x_u: First length-N signal.
        x_v: Second length-N signal.

    Returns:
        PairGeometry with δ_u, δ_v from the supports of x_u, x_v.

    Raises:
        UndefinedAngleError: either signal is zero.
        DegenerateMeasurementError: Φ maps a signal to the zero vector.
    """
    entries = _entries(phi)
    u, v = _values(x_u), _values(x_v)
    if u.size != entries.shape[1] or v.size != entries.shape[1]:
        raise InvalidArgumentError(f"Signals must have length {entries.shape[1]}, got {u.size} and {v.size}")

    a, b = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if a == 0.0 or b == 0.0:
        raise UndefinedAngleError("Angle is undefined for a zero signal")

    y_u, y_v = entries @ u, entries @ v
    ya, yb = float(np.linalg.norm(y_u)), float(np.linalg.norm(y_v))
    if ya == 0.0 or yb == 0.0:
        raise DegenerateMeasurementError("Measurement of a nonzero signal is the zero vector")

    inner_x = float(u @ v)
    inner_y = float(y_u @ y_v)
    support_u, support_v = support_of(u), support_of(v)
    delta_u, _ = ric_support(entries, support_u, cache)
    delta_v, _ = ric_support(entries, support_v, cache)

    return PairGeometry(
        xi=(a * a + b * b) / (2.0 * a * b),
        cos_alpha=clamp_cos(inner_x / (a * b), "cos α"),
        cos_beta=clamp_cos(inner_y / (ya * yb), "cos β"),
        delta_u=delta_u,
        delta_v=delta_v,
        delta_max=max(delta_u, delta_v),
        inner_x=inner_x,
        inner_y=inner_y,
        norm_x_u=a,
        norm_x_v=b,
        norm_y_u=ya,
        norm_y_v=yb,
        support_u=tuple(support_u.tolist()),
        support_v=tuple(support_v.tolist()),
    )


# ══════════════════════════════════════════════════════════════════════
# Interval formulas
# ══════════════════════════════════════════════════════════════════════

def rcp_jl_bounds(xi: float, cos_alpha: float, delta_max: float, epsilon: float) -> BoundInterval:
    """
    Closed-form JL interval.

    upper = (δ−ε)/(1−δ)·ξ + (1−ε)/(1−δ)·cos α
    lower = (ε−δ)/(1+δ)·ξ + (1+ε)/(1+δ)·cos α

    Raises:
        InvalidArgumentError: δ_max or ε outside [0, 1), ξ < 1 or |cos α| > 1.
    """
    _check_unit("δ_max", delta_max)
    _check_unit("ε", epsilon)
    _check_cos(cos_alpha)
    if xi < 1.0 - COS_CLAMP_TOLERANCE:
        raise InvalidArgumentError(f"ξ must be >= 1, got {xi}")

    upper = (delta_max - epsilon) / (1.0 - delta_max) * xi + (1.0 - epsilon) / (1.0 - delta_max) * cos_alpha
    lower = (epsilon - delta_max) / (1.0 + delta_max) * xi + (1.0 + epsilon) / (1.0 + delta_max) * cos_alpha
    return BoundInterval(lower, upper, "rcp_jl", {
        "epsilon": epsilon, "delta_max": delta_max, "xi": xi, "cos_alpha": cos_alpha,
    })


def rcp_jl_guaranteed_bounds(xi: float, cos_alpha: float, delta_max: float, epsilon: float) -> BoundInterval:
    """
    JL interval that always contains cos β.

    With a = ‖x_u‖, b = ‖x_v‖, the law of cosines on x_u − x_v and the
    isometry bounds on ‖Φx_u‖, ‖Φx_v‖ give
        ⟨Φx_u, Φx_v⟩ / ab <= (δ+ε)ξ + (1−ε)cos α = U
        ⟨Φx_u, Φx_v⟩ / ab >= −(δ+ε)ξ + (1+ε)cos α = W
    and dividing by ‖Φx_u‖‖Φx_v‖ / ab ∈ [1−δ, 1+δ] picks the denominator
    by sign. ε >= 1 and δ >= 1 are allowed; a vanishing 1−δ makes that
    side unbounded.
    """
    if delta_max < 0.0 or epsilon < 0.0:
        raise InvalidArgumentError(f"δ_max and ε must be >= 0, got {delta_max}, {epsilon}")
    _check_cos(cos_alpha)

    spread = (delta_max + epsilon) * xi
    U = spread + (1.0 - epsilon) * cos_alpha
    W = -spread + (1.0 + epsilon) * cos_alpha
    upper = _divide(U, 1.0 - delta_max) if U >= 0 else U / (1.0 + delta_max)
    lower = W / (1.0 + delta_max) if W >= 0 else _divide(W, 1.0 - delta_max)
    return BoundInterval(lower, upper, "rcp_jl_guaranteed", {
        "epsilon": epsilon, "delta_max": delta_max, "xi": xi, "cos_alpha": cos_alpha,
    })


def rcp_ip_bounds(cos_alpha: float, delta_K: float) -> BoundInterval:
    """
    [(1−δ_K)/(1+δ_K)·cos α, (1+δ_K)/(1−δ_K)·cos α].

    For cos α <= 0 both products change sign and the ends swap, so the
    interval is returned as [min, max] of the two products.

    Raises:
        InvalidArgumentError: δ_K outside [0, 1).
    """
    _check_unit("δ_K", delta_K)
    _check_cos(cos_alpha)
    shrink = (1.0 - delta_K) / (1.0 + delta_K) * cos_alpha
    stretch = (1.0 + delta_K) / (1.0 - delta_K) * cos_alpha
    if cos_alpha <= 0:
        logger.debug(f"rcp_ip_bounds: cos α = {cos_alpha:.4g} <= 0, interval ends swapped")
    return BoundInterval(min(shrink, stretch), max(shrink, stretch), "rcp_ip", {
        "delta_K": delta_K, "cos_alpha": cos_alpha,
    })


def ip_support_bounds(
    cos_alpha: float,
    lambda_min: float,
    lambda_max: float,
    delta_u: float,
    delta_v: float,
) -> BoundInterval:
    """
    Eigenvalue form with per-support constants:
    [λ_min/√((1+δ_u)(1+δ_v))·cos α, λ_max/√((1−δ_u)(1−δ_v))·cos α].

    λ_min, λ_max come from the joint support Gram matrix. Valid whenever
    the λ-sandwich holds and cos α > 0; for cos α <= 0 the ends are ordered.
    """
    _check_unit("δ_u", delta_u)
    _check_unit("δ_v", delta_v)
    _check_cos(cos_alpha)
    low = lambda_min / np.sqrt((1.0 + delta_u) * (1.0 + delta_v)) * cos_alpha
    high = lambda_max / np.sqrt((1.0 - delta_u) * (1.0 - delta_v)) * cos_alpha
    return BoundInterval(float(min(low, high)), float(max(low, high)), "rcp_ip_support", {
        "lambda_min": lambda_min, "lambda_max": lambda_max,
        "delta_u": delta_u, "delta_v": delta_v, "cos_alpha": cos_alpha,
    })


def rcp_orthogonal_bounds(delta_K: float, delta_max: float) -> BoundInterval:
    """
    Closed-form interval for orthogonal pairs: [−δ_K/(1+δ_max), δ_K/(1−δ_max)].

    The variant with δ_K in both denominators is recorded in
    constants_used as `shared_lower`/`shared_upper`.

    Raises:
        InvalidArgumentError: constants outside [0, 1) or δ_max > δ_K.
    """
    _check_unit("δ_K", delta_K)
    _check_unit("δ_max", delta_max)
    if delta_max > delta_K + COS_CLAMP_TOLERANCE:
        raise InvalidArgumentError(f"δ_max must not exceed δ_K, got {delta_max} > {delta_K}")
    return BoundInterval(-delta_K / (1.0 + delta_max), delta_K / (1.0 - delta_max), "rcp_orthogonal", {
        "delta_K": delta_K,
        "delta_max": delta_max,
        "shared_lower": -delta_K / (1.0 + delta_K),
        "shared_upper": delta_K / (1.0 - delta_K),
    })


def rcp_orthogonal_guaranteed_bounds(delta_K: float, delta_max: float) -> BoundInterval:
    """
    [−δ_K/(1−δ_max), δ_K/(1−δ_max)] for orthogonal pairs.

    Polarisation on the normalised pair gives |⟨Φu, Φv⟩| <= δ_K, and
    ‖Φu‖‖Φv‖ >= 1−δ_max.
    """
    _check_unit("δ_K", delta_K)
    _check_unit("δ_max", delta_max)
    bound = delta_K / (1.0 - delta_max)
    return BoundInterval(-bound, bound, "rcp_orthogonal_guaranteed", {
        "delta_K": delta_K, "delta_max": delta_max,
    })


# ══════════════════════════════════════════════════════════════════════
# Checks and measured constants
# ══════════════════════════════════════════════════════════════════════

def sandwich_check(phi: MatrixLike, x_u: SignalLike, x_v: SignalLike, cache: Optional[SpectrumCache] = None) -> SandwichCheck:
    """
    Test λ_min⟨x_u,x_v⟩ <= ⟨Φx_u,Φx_v⟩ <= λ_max⟨x_u,x_v⟩ with λ's of
    the joint support Gram matrix.

    Tolerance is SANDWICH_RELATIVE_TOLERANCE · max(1, λ_max) · ‖x_u‖‖x_v‖.
    """
    entries = _entries(phi)
    u, v = _values(x_u), _values(x_v)
    joint = np.union1d(support_of(u), support_of(v))
    if joint.size == 0:
        raise UndefinedAngleError("Joint support is empty")

    spectrum = spectrum_of(entries, joint, cache)
    inner_x = float(u @ v)
    mid = float((entries @ u) @ (entries @ v))
    lhs = spectrum.lambda_min * inner_x
    rhs = spectrum.lambda_max * inner_x
    tol = SANDWICH_RELATIVE_TOLERANCE * max(1.0, spectrum.lambda_max) * float(np.linalg.norm(u) * np.linalg.norm(v))
    delta_joint = max(spectrum.lambda_max - 1.0, 1.0 - spectrum.lambda_min)
    return SandwichCheck(
        holds=bool(lhs - tol <= mid <= rhs + tol),
        lhs=lhs,
        mid=mid,
        rhs=rhs,
        lambda_min=spectrum.lambda_min,
        lambda_max=spectrum.lambda_max,
        delta_joint=delta_joint,
    )


def jl_epsilon(phi: MatrixLike, points: Sequence[SignalLike]) -> float:
    """
    Smallest ε with (1−ε)‖u−v‖² <= ‖Φ(u−v)‖² <= (1+ε)‖u−v‖² over all pairs.

    Raises:
        InvalidArgumentError: fewer than two points, or duplicate points.
    """
    entries = _entries(phi)
    values = [_values(p) for p in points]
    if len(values) < 2:
        raise InvalidArgumentError("jl_epsilon needs at least two points")

    epsilon = 0.0
    for (i, p), (j, q) in itertools.combinations(enumerate(values), 2):
        diff = p - q
        energy = float(diff @ diff)
        if energy == 0.0:
            raise InvalidArgumentError(f"Points {i} and {j} coincide")
        measured = float(np.sum((entries @ diff) ** 2))
        epsilon = max(epsilon, abs(measured / energy - 1.0))
    return epsilon


# ══════════════════════════════════════════════════════════════════════
# Pair reports
# ══════════════════════════════════════════════════════════════════════

def evaluate_pair(
    phi: MatrixLike,
    x_u: SignalLike,
    x_v: SignalLike,
    delta_K: Optional[float] = None,
    orthogonal_tol: float = 1e-12,
    cache: Optional[SpectrumCache] = None,
) -> PairReport:
    """
    Geometry, measured constants, every applicable interval and the
    sandwich check for one pair.

    Args:
        phi: Measurement matrix.
        x_u: First signal.
        x_v: Second signal.
        delta_K: Global isometry constant (e.g. from ric_exact); when
            omitted the joint-support constant is used.
        orthogonal_tol: |cos α| below this counts as an orthogonal pair.
        cache: Shared support spectra.
    """
    entries = _entries(phi)
    geometry = pair_geometry(entries, x_u, x_v, cache)
    if np.array_equal(_values(x_u), _values(x_v)):
        # no nonzero difference to distort
        epsilon = 0.0
    else:
        epsilon = jl_epsilon(entries, [x_u, x_v])
    sandwich = sandwich_check(entries, x_u, x_v, cache)

    if delta_K is None:
        delta_K, delta_source = sandwich.delta_joint, "joint_support"
    else:
        delta_source = "global"

    jl = None
    if geometry.delta_max < 1.0 and epsilon < 1.0:
        jl = rcp_jl_bounds(geometry.xi, geometry.cos_alpha, geometry.delta_max, epsilon)
    jl_guaranteed = rcp_jl_guaranteed_bounds(geometry.xi, geometry.cos_alpha, geometry.delta_max, epsilon)

    ip = rcp_ip_bounds(geometry.cos_alpha, delta_K) if 0.0 <= delta_K < 1.0 else None
    ip_support = None
    if geometry.delta_max < 1.0:
        ip_support = ip_support_bounds(
            geometry.cos_alpha, sandwich.lambda_min, sandwich.lambda_max, geometry.delta_u, geometry.delta_v
        )

    orthogonal = orthogonal_guaranteed = None
    if abs(geometry.cos_alpha) <= orthogonal_tol and geometry.delta_max < 1.0 and delta_K < 1.0:
        orthogonal_guaranteed = rcp_orthogonal_guaranteed_bounds(delta_K, geometry.delta_max)
        if geometry.delta_max <= delta_K:
            orthogonal = rcp_orthogonal_bounds(delta_K, geometry.delta_max)

    return PairReport(
        geometry=geometry,
        epsilon=epsilon,
        delta_K=delta_K,
        delta_source=delta_source,
        sandwich=sandwich,
        jl=jl,
        jl_guaranteed=jl_guaranteed,
        ip=ip,
        ip_support=ip_support,
        orthogonal=orthogonal,
        orthogonal_guaranteed=orthogonal_guaranteed,
    )


def batch_evaluate(
    phi: MatrixLike,
    pairs: Sequence[Tuple[SignalLike, SignalLike]],
    delta_K: Optional[float] = None,
    threads: int = THREADS,
    solver: Optional[str] = None,
    cache: Optional[SpectrumCache] = None,
) -> List[PairReport]:
    """evaluate_pair over a list of pairs, results in input order, sharing one spectrum cache."""
    entries = _entries(phi)
    if cache is None:
        cache = SpectrumCache(entries, solver)
    reports = parallel_map(
        lambda pair: evaluate_pair(entries, pair[0], pair[1], delta_K, cache=cache), pairs, threads=threads
    )
    misses = sum(1 for r in reports if r.containment["jl"] is False)
    if misses:
        logger.info(f"Closed-form JL interval missed cos β on {misses}/{len(reports)} pairs")
    return reports
