"""
Geometry Moduli

Sampling estimators and closed forms for the geometric moduli of a space:
- modulus of smoothness rho_E and modulus of convexity delta_E
- the beta* function and the two equivalent linear-bound conditions
- the constant chain c -> (alpha, k1, k2) -> d_c
- grid checks of the alpha maximization and of Lindenstrauss's duality formula

Estimators are one-sided: sampling can only under-approximate a supremum and
over-approximate an infimum, and every ModulusEstimate carries that direction.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from utils.settings import SAMPLE_RADIUS, TOLERANCE
from utils.spaces import (
    Space,
    as_vector,
    duality_map,
    lp_duality,
    lp_norm,
    norm,
    pairing,
    sample_pairs,
    sample_points,
    sample_unit_sphere,
)

logger = logging.getLogger(__name__)

LOWER_BOUND_OF_SUP = "lower_bound_of_sup"
UPPER_BOUND_OF_INF = "upper_bound_of_inf"

ALPHA = 2.0 - math.sqrt(2.0)


# ========================================
# RESULT TYPES
# ========================================

@dataclass(frozen=True)
class ModulusEstimate:
    value: float
    direction: str
    probes_used: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DcBreakdown:
    """Every intermediate of the c -> d_c chain."""
    c: float
    alpha: float
    k1: float
    k2: float
    dc: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class InequalityReport:
    """
    Outcome of a sampled inequality check.

    max_violation is the largest normalized excess lhs - rhs (negative when
    every sample has slack); witness holds the worst sample when it fails.
    """
    name: str
    constant: float
    passed: bool
    samples_checked: int
    max_violation: float
    witness: Optional[dict] = None

    def to_dict(self) -> dict:
        return asdict(self)


# ========================================
# CLOSED FORMS
# ========================================

def analytic_rho_hilbert(tau):
    """rho_H(tau) = sqrt(1 + tau^2) - 1."""
    return np.sqrt(1.0 + np.square(tau)) - 1.0


def analytic_delta_hilbert(eps):
    """delta_H(eps) = 1 - sqrt(1 - eps^2/4)."""
    eps = np.asarray(eps, dtype=float)
    return 1.0 - np.sqrt(np.clip(1.0 - eps * eps / 4.0, 0.0, None))


def clarkson_delta(eps, p: float):
    """Clarkson's modulus of convexity of l_p, p >= 2."""
    ratio = np.clip(np.asarray(eps, dtype=float) / 2.0, 0.0, 1.0)
    return 1.0 - (1.0 - ratio ** p) ** (1.0 / p)


def delta_dual_lower_bound(c: float, eps):
    """
    Lower bound on delta_{E*}(eps) implied by rho_E(t) <= c t^2.

    Maximizing eps*t/2 - c*t^2 over t gives eps^2 / (16c).
    """
    if c <= 0:
        raise ValueError(f"c must be positive, got {c}")
    eps = np.asarray(eps, dtype=float)
    return eps * eps / (16.0 * c)


# ========================================
# SAMPLED MODULI
# ========================================

def _check_budget(probes: int) -> None:
    if probes < 1:
        raise ValueError(f"probes must be >= 1, got {probes}")


def estimate_rho(space: Space, tau: float, probes: int, seed: int) -> ModulusEstimate:
    """
    Lower bound on rho_E(tau) from sampled pairs (u, v) of unit vectors.

    u and v are drawn from two prefix-stable sphere samples (seeds seed and
    seed + 1); their shared coordinate prefix supplies the collinear u = v
    pairs, so the estimate is never negative.
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    _check_budget(probes)
    u = sample_unit_sphere(space, seed, probes)
    v = sample_unit_sphere(space, seed + 1, probes)
    values = 0.5 * (lp_norm(u + tau * v, space.p) + lp_norm(u - tau * v, space.p)) - 1.0
    return ModulusEstimate(float(np.max(values)), LOWER_BOUND_OF_SUP, probes, seed)


def _project_to_distance(space: Space, x: np.ndarray, y: np.ndarray, eps: float, steps: int = 60) -> np.ndarray:
    """
    Move y towards x along normalized chords until ||x - y|| is just >= eps.

    Only rows with ||x - y|| >= eps are passed in; bisection keeps the
    admissible end of the bracket.
    """
    lo = np.zeros(x.shape[0])
    hi = np.ones(x.shape[0])
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        z = (1.0 - mid)[:, None] * x + mid[:, None] * y
        zn = lp_norm(z, space.p)[:, None]
        z = np.where(zn > 1e-12, z / np.where(zn > 1e-12, zn, 1.0), y)
        ok = lp_norm(x - z, space.p) >= eps
        hi = np.where(ok, mid, hi)
        lo = np.where(ok, lo, mid)
    z = (1.0 - hi)[:, None] * x + hi[:, None] * y
    zn = lp_norm(z, space.p)[:, None]
    return np.where(zn > 1e-12, z / np.where(zn > 1e-12, zn, 1.0), y)


def estimate_delta(space: Space, eps: float, probes: int, seed: int) -> ModulusEstimate:
    """
    Upper bound on delta_E(eps) from admissible pairs x, y in S(E).

    Candidates:
    - the identical pairs of the shared coordinate prefix (admissible at eps = 0)
    - random pairs with ||x - y|| >= eps, each also projected onto the
      constraint boundary ||x - y|| ~ eps
    - the antipodal pair (x, -x), always admissible
    """
    if not 0.0 <= eps <= 2.0:
        raise ValueError(f"eps must lie in [0, 2], got {eps}")
    _check_budget(probes)
    x = sample_unit_sphere(space, seed, probes)
    y = sample_unit_sphere(space, seed + 1, probes)

    antipode = -x[:1]
    candidates = [1.0 - 0.5 * lp_norm(x[:1] + antipode, space.p)]
    gaps = lp_norm(x - y, space.p)
    admissible = gaps >= eps
    if np.any(admissible):
        xa, ya = x[admissible], y[admissible]
        candidates.append(1.0 - 0.5 * lp_norm(xa + ya, space.p))
        za = _project_to_distance(space, xa, ya, eps)
        still = lp_norm(xa - za, space.p) >= eps
        if np.any(still):
            candidates.append(1.0 - 0.5 * lp_norm(xa[still] + za[still], space.p))
    else:
        logger.info("no admissible sampled pair at eps=%g; using the antipodal pair", eps)

    value = float(min(np.min(c) for c in candidates))
    return ModulusEstimate(value, UPPER_BOUND_OF_INF, probes, seed)


def beta_star_probe_values(
    space: Space, x, t: float, probes: int, seed: int, absolute: bool = False
) -> np.ndarray:
    """
    Per-direction values (||x + tv||^2 - ||x||^2)/t - 2 j(x)(v) over sampled v.

    With absolute=True each value is replaced by its absolute value (the
    older definition of the function).
    """
    if t < 0:
        raise ValueError(f"t must be nonnegative, got {t}")
    _check_budget(probes)
    x = as_vector(space, x)
    if t == 0:
        return np.zeros(probes)
    v = sample_unit_sphere(space, seed, probes)
    jx = duality_map(space, x)
    nx2 = float(norm(space, x)) ** 2
    values = (lp_norm(x + t * v, space.p) ** 2 - nx2) / t - 2.0 * pairing(jx, v)
    return np.abs(values) if absolute else values


def estimate_beta_star(
    space: Space, x, t: float, probes: int, seed: int, absolute: bool = False
) -> ModulusEstimate:
    """Lower bound on beta*_E(x, t); exactly 0 at t = 0 by convention."""
    values = beta_star_probe_values(space, x, t, probes, seed, absolute=absolute)
    value = 0.0 if t == 0 else float(np.max(values))
    return ModulusEstimate(value, LOWER_BOUND_OF_SUP, probes, seed)


# ========================================
# CONSTANT CHAIN
# ========================================

def compute_dc(c: float) -> DcBreakdown:
    """
    The explicit 2-uniform smoothness constant derived from rho_E <= c tau^2.

    k1 = min(1/(16c), alpha), k2 = min(k1, 1)/8, d_c = 1/k2.
    """
    if not c > 0:
        raise ValueError(f"c must be positive, got {c}")
    k1 = min(1.0 / (16.0 * c), ALPHA)
    k2 = min(k1, 1.0) / 8.0
    return DcBreakdown(c=float(c), alpha=ALPHA, k1=k1, k2=k2, dc=1.0 / k2)


def alpha_objective(t):
    """(sqrt(2 - (1-t)^2) - 1 - t) / t^2 on (0, 1]."""
    t = np.asarray(t, dtype=float)
    return (np.sqrt(2.0 - (1.0 - t) ** 2) - 1.0 - t) / (t * t)


def alpha_grid(grid_step: float) -> np.ndarray:
    """Uniform grid on (0, 1] that always ends exactly at t = 1."""
    n = int(math.ceil(1.0 / grid_step))
    grid = np.arange(1, n + 1, dtype=float) * grid_step
    grid = grid[grid < 1.0]
    return np.append(grid, 1.0)


def verify_alpha(grid_step: float) -> float:
    """Grid maximum of alpha_objective; equals sqrt(2) - 2, attained at t = 1."""
    if not 0 < grid_step <= 1e-3:
        raise ValueError(f"grid_step must lie in (0, 1e-3], got {grid_step}")
    return float(np.max(alpha_objective(alpha_grid(grid_step))))


def lindenstrauss_check(tau: float, delta_dual: Callable, grid_step: float) -> float:
    """
    sup over eps in [0, 2] of (eps * tau / 2 - delta_dual(eps)) on a uniform grid.

    With the true modulus of convexity of E* this is rho_E(tau).
    """
    if tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if grid_step <= 0:
        raise ValueError(f"grid_step must be positive, got {grid_step}")
    n = int(round(2.0 / grid_step))
    eps = np.linspace(0.0, 2.0, n + 1)
    values = eps * tau / 2.0 - np.asarray(delta_dual(eps), dtype=float)
    return float(np.max(values))


# ========================================
# SAMPLED INEQUALITY CHECKS
# ========================================

def _report(name: str, constant: float, excess: np.ndarray, scale: np.ndarray,
            witness_fn: Callable[[int], dict], tol: float) -> InequalityReport:
    normalized = excess / np.maximum(1.0, scale)
    worst = int(np.argmax(normalized))
    max_violation = float(normalized[worst])
    passed = max_violation <= tol
    report = InequalityReport(
        name=name,
        constant=float(constant),
        passed=passed,
        samples_checked=int(excess.shape[0]),
        max_violation=max_violation,
        witness=None if passed else witness_fn(worst),
    )
    log = logger.info if passed else logger.warning
    log("%s(constant=%g): %s on %d samples, max violation %.3e",
        name, constant, "pass" if passed else "FAIL", report.samples_checked, max_violation)
    return report


def check_lemma1_ii(space: Space, d: float, pairs: int, seed: int,
                    radius: float = SAMPLE_RADIUS, tol: float = TOLERANCE) -> InequalityReport:
    """
    Sampled check of ||x+y||^2 <= ||x||^2 + 2 j(x)(y) + d ||y||^2.

    Pass iff the largest excess is at most tol * max(1, magnitudes).
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if pairs < 1:
        raise ValueError(f"pairs must be >= 1, got {pairs}")
    x, y = sample_pairs(space, seed, pairs, radius)
    lhs = norm(space, x + y) ** 2
    nx2 = norm(space, x) ** 2
    ny2 = norm(space, y) ** 2
    cross = 2.0 * pairing(duality_map(space, x), y)
    rhs = nx2 + cross + d * ny2
    scale = np.maximum.reduce([lhs, nx2, np.abs(cross), d * ny2])

    def witness(i):
        return {"x": x[i].tolist(), "y": y[i].tolist(), "lhs": float(lhs[i]), "rhs": float(rhs[i])}

    return _report("lemma1_ii", d, lhs - rhs, scale, witness, tol)


def check_lemma1_iii(space: Space, d: float, points: int, probes: int, seed: int,
                     radius: float = SAMPLE_RADIUS, tol: float = TOLERANCE) -> InequalityReport:
    """
    Sampled check of beta*_E(x, t) <= d t over seeded points x and steps t.

    Steps t are drawn uniformly from [0, radius]; each (x, t) uses probes
    directions.
    """
    if points < 1:
        raise ValueError(f"points must be >= 1, got {points}")
    xs = sample_points(space, seed, points, radius)
    ts = np.random.default_rng(seed + 7).uniform(0.0, radius, size=points)
    estimates = np.array([
        estimate_beta_star(space, xs[i], float(ts[i]), probes, seed + 1).value
        for i in range(points)
    ])
    bounds = d * ts

    def witness(i):
        return {"x": xs[i].tolist(), "t": float(ts[i]), "beta_star": float(estimates[i]), "bound": float(bounds[i])}

    return _report("lemma1_iii", d, estimates - bounds, bounds, witness, tol)


def check_smoothness_constant(space: Space, c: float, taus: Sequence[float], probes: int,
                              seed: int, tol: float = TOLERANCE) -> InequalityReport:
    """Sampled rho_E(tau) <= c tau^2 for each tau in taus."""
    taus = np.asarray(list(taus), dtype=float)
    estimates = np.array([estimate_rho(space, float(t), probes, seed).value for t in taus])
    bounds = c * taus * taus

    def witness(i):
        return {"tau": float(taus[i]), "rho_estimate": float(estimates[i]), "bound": float(bounds[i])}

    return _report("smoothness_constant", c, estimates - bounds, bounds, witness, tol)


def check_dual_inequality(space: Space, k2: float, pairs: int, seed: int,
                          radius: float = SAMPLE_RADIUS, tol: float = TOLERANCE) -> InequalityReport:
    """
    Sampled check on E* = l_q of ||f+g||^2 >= ||f||^2 + 2 J(f)(g) + k2 ||g||^2.

    This is the lower inequality in the dual that the d_c chain passes
    through before returning to E.
    """
    q = space.q
    f, g = sample_pairs(space, seed, pairs, radius)
    lhs = lp_norm(f + g, q) ** 2
    nf2 = lp_norm(f, q) ** 2
    ng2 = lp_norm(g, q) ** 2
    cross = 2.0 * pairing(lp_duality(f, q), g)
    rhs = nf2 + cross + k2 * ng2
    scale = np.maximum.reduce([lhs, nf2, np.abs(cross), k2 * ng2])

    def witness(i):
        return {"f": f[i].tolist(), "g": g[i].tolist(), "lhs": float(lhs[i]), "rhs": float(rhs[i])}

    return _report("dual_inequality", k2, rhs - lhs, scale, witness, tol)


def rho_table(space: Space, taus: Sequence[float], probes: int, seed: int) -> List[dict]:
    """rho estimates with the declared bound c tau^2 and, for Hilbert, the closed form."""
    rows = []
    for tau in taus:
        row = {"tau": float(tau), "estimate": estimate_rho(space, float(tau), probes, seed).to_dict(),
               "declared_bound": space.c * float(tau) ** 2}
        if space.kind == "hilbert":
            row["analytic"] = float(analytic_rho_hilbert(tau))
        rows.append(row)
    return rows
