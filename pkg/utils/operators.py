"""
Strict Pseudocontractions

This module handles:
- Construction of k-strict pseudocontractions with known fixed points
- The averaged maps T_t = tT + (1-t) id
- Sampled validation (duality-map form, plus the norm form in Hilbert spaces)
- Lemma 2: nonexpansiveness of T_t for t <= (1-k)/d

Operators act on a single vector (dim,) or on a batch (..., dim).
"""

import logging
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np

from utils.settings import DEFAULT_VALIDATION_PAIRS, SAMPLE_RADIUS, TOLERANCE
from utils.spaces import (
    HILBERT,
    Space,
    as_vector,
    duality_map,
    norm,
    pairing,
    sample_pairs,
)

logger = logging.getLogger(__name__)

Map = Callable[[np.ndarray], np.ndarray]


class ConstructionRefused(ValueError):
    """Raised when an operator fails the validation its construction depends on."""

    def __init__(self, message: str, report: Optional["ValidationReport"] = None):
        super().__init__(message)
        self.report = report


# ========================================
# TYPES
# ========================================

@dataclass(frozen=True, eq=False)
class PseudocontractionInstance:
    """
    A k-strict pseudocontraction with a known fixed point.

    Attributes:
        space: the ambient space
        apply: the map, vectorized over the last axis
        k: declared strictness constant in [0, 1)
        known_fixed_point: a point p with apply(p) = p
        label: short name used in reports
    """
    space: Space
    apply: Map
    k: float
    known_fixed_point: np.ndarray
    label: str

    def __call__(self, x):
        return self.apply(np.asarray(x, dtype=float))


@dataclass
class ValidationReport:
    passed: bool
    pairs_checked: int
    max_violation: float
    witness: Optional[dict] = None
    norm_form_max_violation: Optional[float] = None
    forms_agree: Optional[bool] = None

    def to_dict(self) -> dict:
        return asdict(self)


def _make_instance(space: Space, apply: Map, k: float, fixed_point, label: str) -> PseudocontractionInstance:
    if not 0.0 <= k < 1.0:
        raise ValueError(f"k must lie in [0, 1), got {k}")
    p = as_vector(space, fixed_point)
    drift = float(norm(space, apply(p) - p))
    if drift > 1e-12:
        raise ConstructionRefused(f"{label}: declared fixed point moves by {drift:.3e}")
    return PseudocontractionInstance(space=space, apply=apply, k=float(k), known_fixed_point=p, label=label)


# ========================================
# AVERAGED MAPS
# ========================================

def averaged(T, t: float) -> Map:
    """
    The map T_t: x -> t T(x) + (1 - t) x.

    T_1 is T itself and (T_a)_b = T_{a b}; T and T_t share their fixed points.
    """
    if not 0.0 < t <= 1.0:
        raise ValueError(f"t must lie in (0, 1], got {t}")
    apply = T.apply if isinstance(T, PseudocontractionInstance) else T
    if t == 1.0:
        return apply

    def apply_t(x):
        x = np.asarray(x, dtype=float)
        return t * apply(x) + (1.0 - t) * x

    return apply_t


def averaged_instance(T: PseudocontractionInstance, t: float, d: Optional[float] = None) -> PseudocontractionInstance:
    """
    T_t packaged as a nonexpansive instance (k = 0).

    Only legal for t <= (1 - k)/d, the range where T_t is nonexpansive.
    """
    d = T.space.d if d is None else d
    bound = (1.0 - T.k) / d
    if not 0.0 < t <= bound * (1.0 + 1e-12):
        raise ValueError(f"T_t is only known to be nonexpansive for t in (0, {bound}], got {t}")
    return PseudocontractionInstance(
        space=T.space,
        apply=averaged(T, t),
        k=0.0,
        known_fixed_point=T.known_fixed_point,
        label=f"{T.label}_t={t:.6g}",
    )


# ========================================
# CONSTRUCTIONS
# ========================================

def scaled_negation(c: float, space: Space) -> PseudocontractionInstance:
    """
    T = -c id on a Hilbert space, (c-1)/(c+1)-strict, fixed point 0.

    Eq. (1) holds with equality at that k.
    """
    if c < 1:
        raise ValueError(f"scaled_negation needs c >= 1, got {c}")
    if space.kind != HILBERT:
        raise ValueError("scaled_negation is certified in Hilbert spaces only")
    c = float(c)

    def apply(x):
        return -c * np.asarray(x, dtype=float)

    return _make_instance(space, apply, (c - 1.0) / (c + 1.0), np.zeros(space.dim), f"neg(c={c:g})")


def zero_map(space: Space) -> Map:
    """The constant map onto 0."""
    def apply(x):
        return np.zeros_like(np.asarray(x, dtype=float))
    return apply


def ball_projection(space: Space, radius: float = 1.0) -> Map:
    """Metric projection onto the closed ball of the given radius (Hilbert)."""
    if space.kind != HILBERT:
        raise ValueError("ball_projection is the metric projection only in Hilbert spaces")

    def apply(x):
        x = np.asarray(x, dtype=float)
        r = norm(space, x)
        return x * np.asarray(radius / np.maximum(radius, r))[..., None]

    return apply


def from_nonexpansive(
    N: Map,
    s: float,
    space: Space,
    fixed_point,
    pairs: int = DEFAULT_VALIDATION_PAIRS,
    seed: int = 0,
    label: str = "N",
) -> PseudocontractionInstance:
    """
    The T with T_s = N, i.e. T = (1/s) N - ((1-s)/s) id, declared (1-s)-strict.

    Raises:
        ConstructionRefused: N fails the nonexpansiveness sample
    """
    if space.kind != HILBERT:
        raise ValueError("from_nonexpansive certifies k = 1 - s in Hilbert spaces only")
    if not 0.0 < s <= 1.0:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    report = validate_nonexpansive(space, N, pairs, seed)
    if not report.passed:
        logger.warning("refusing from_nonexpansive(%s): witness %s", label, report.witness)
        raise ConstructionRefused(f"{label} is not nonexpansive on the sample", report)
    s = float(s)
    if s == 1.0:
        apply = N
    else:
        def apply(x):
            x = np.asarray(x, dtype=float)
            return N(x) / s - ((1.0 - s) / s) * x

    return _make_instance(space, apply, 1.0 - s, fixed_point, f"inv_avg({label},s={s:g})")


def linear_operator(
    matrix,
    space: Space,
    k: Optional[float] = None,
    pairs: int = DEFAULT_VALIDATION_PAIRS,
    seed: int = 0,
    label: str = "linear",
) -> PseudocontractionInstance:
    """
    x -> A x with fixed point 0.

    A declared k is validated on the sample; without one the least passing
    k is found by bisection (empirical only).
    """
    A = np.array(matrix, dtype=float)
    if A.shape != (space.dim, space.dim):
        raise ValueError(f"matrix must be {space.dim}x{space.dim}, got {A.shape}")

    def apply(x):
        return np.asarray(x, dtype=float) @ A.T

    if k is None:
        k = certify_k(space, apply, pairs, seed)
        logger.info("%s: bisection-certified k = %.6g", label, k)
    else:
        report = validate_k_strict(space, apply, k, pairs, seed)
        if not report.passed:
            raise ConstructionRefused(f"{label} is not {k}-strict on the sample", report)
    return _make_instance(space, apply, k, np.zeros(space.dim), label)


# ========================================
# VALIDATION
# ========================================

def validate_k_strict(
    space: Space,
    T,
    k: float,
    pairs: int,
    seed: int,
    radius: float = SAMPLE_RADIUS,
    tol: float = TOLERANCE,
) -> ValidationReport:
    """
    Sampled check of j(x-y)(r) >= ((1-k)/2) ||r||^2 with r = (x-Tx) - (y-Ty).

    Deficits are normalized by max(1, magnitude). In Hilbert spaces the norm
    form ||Tx-Ty||^2 <= ||x-y||^2 + k ||r||^2 is checked as well, together
    with its agreement with the inner-product form on every pair.
    """
    if not 0.0 <= k < 1.0:
        raise ValueError(f"k must lie in [0, 1), got {k}")
    if pairs < 1:
        raise ValueError(f"pairs must be >= 1, got {pairs}")
    apply = T.apply if isinstance(T, PseudocontractionInstance) else T
    x, y = sample_pairs(space, seed, pairs, radius)
    tx, ty = apply(x), apply(y)
    r = (x - tx) - (y - ty)
    r2 = norm(space, r) ** 2
    lhs = pairing(duality_map(space, x - y), r)
    rhs = 0.5 * (1.0 - k) * r2
    scale = np.maximum(1.0, np.maximum(np.abs(lhs), r2))
    deficit = (rhs - lhs) / scale
    worst = int(np.argmax(deficit))
    max_violation = float(deficit[worst])
    passed = max_violation <= tol

    report = ValidationReport(passed=passed, pairs_checked=pairs, max_violation=max_violation)
    if space.kind == HILBERT:
        gap = norm(space, tx - ty) ** 2 - norm(space, x - y) ** 2 - k * r2
        gap_scale = np.maximum(scale, norm(space, x - y) ** 2)
        gap_n = gap / gap_scale
        report.norm_form_max_violation = float(np.max(gap_n))
        # the norm form's excess is exactly twice the inner-product deficit
        report.forms_agree = bool(np.all(np.abs(gap - 2.0 * (rhs - lhs)) <= tol * gap_scale))
        report.passed = passed and report.norm_form_max_violation <= 2.0 * tol and report.forms_agree
        if not report.forms_agree:
            logger.error("norm and inner-product forms disagree on the sample (k=%g)", k)
    if not report.passed:
        report.witness = {"x": x[worst].tolist(), "y": y[worst].tolist(), "deficit": max_violation}
    return report


def validate_nonexpansive(
    space: Space,
    N,
    pairs: int,
    seed: int,
    radius: float = SAMPLE_RADIUS,
    tol: float = TOLERANCE,
) -> ValidationReport:
    """Sampled check of ||Nx - Ny|| <= ||x - y|| (within tol, relative above 1)."""
    apply = N.apply if isinstance(N, PseudocontractionInstance) else N
    x, y = sample_pairs(space, seed, pairs, radius)
    lhs = norm(space, apply(x) - apply(y))
    rhs = norm(space, x - y)
    excess = (lhs - rhs) / np.maximum(1.0, rhs)
    worst = int(np.argmax(excess))
    max_violation = float(excess[worst])
    passed = max_violation <= tol
    witness = None if passed else {"x": x[worst].tolist(), "y": y[worst].tolist(), "excess": max_violation}
    return ValidationReport(passed=passed, pairs_checked=pairs, max_violation=max_violation, witness=witness)


def check_lemma2(
    T: PseudocontractionInstance,
    t: float,
    d: Optional[float] = None,
    pairs: int = DEFAULT_VALIDATION_PAIRS,
    seed: int = 0,
) -> ValidationReport:
    """Nonexpansiveness of T_t on the sample, for t in (0, (1-k)/d]."""
    d = T.space.d if d is None else d
    bound = (1.0 - T.k) / d
    if not 0.0 < t <= bound * (1.0 + 1e-12):
        raise ValueError(f"Lemma 2 covers t in (0, {bound}], got {t}")
    report = validate_nonexpansive(T.space, averaged(T, t), pairs, seed)
    logger.info("lemma2 %s t=%.6g: %s (max violation %.3e)",
                T.label, t, "pass" if report.passed else "FAIL", report.max_violation)
    return report


def certify_k(
    space: Space,
    T,
    pairs: int,
    seed: int,
    resolution: float = 1e-6,
    radius: float = SAMPLE_RADIUS,
) -> float:
    """
    Least k in [0, 1) passing validate_k_strict on one fixed sample, by bisection.

    Validation is monotone in k on a fixed sample, so bisection is exact up
    to the resolution; the result is rounded up to it.

    Raises:
        ConstructionRefused: no k below 1 passes
    """
    if validate_k_strict(space, T, 0.0, pairs, seed, radius).passed:
        return 0.0
    hi = 1.0 - resolution
    if not validate_k_strict(space, T, hi, pairs, seed, radius).passed:
        raise ConstructionRefused("no k < 1 passes the strictness sample")
    lo = 0.0
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if validate_k_strict(space, T, mid, pairs, seed, radius).passed:
            hi = mid
        else:
            lo = mid
    return hi
