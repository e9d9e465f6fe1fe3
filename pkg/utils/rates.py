"""
Rates Engine

This module provides:
- StepSchedule: step sizes (t_n) with their divergent series
- Rates of divergence theta, computed exactly from partial sums
- The asymptotic-regularity rates h1..h4
- Empirical certification of a rate against a residual sequence

Constant schedules carry rational parameters (fractions.Fraction), so their
partial sums and theta values are exact. Other schedules are summed in
float64, strictly left to right, and theta is exact with respect to those
partial sums.
"""

import logging
import math
import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Union

import numpy as np

from utils.settings import MAX_STEPS, SCAN_CAP, TOLERANCE

logger = logging.getLogger(__name__)

Number = Union[int, float, Fraction]

CONSTANT = "constant"
HARMONIC_CAPPED = "harmonic_capped"
GENERATOR = "generator"

STRICT = "strict"
NONEXPANSIVE = "nonexpansive"
PLAIN = "plain"

VARIANTS = ("h1", "h2", "h3", "h4")

_CHUNK = 1 << 20


class StepRangeError(ValueError):
    """A step t_n falls outside the range allowed for the schedule's series kind."""

    def __init__(self, index: int, step: float, bound: Number, series_kind: str):
        self.index = index
        self.step = step
        self.bound = bound
        self.series_kind = series_kind
        what = {STRICT: "(1-k)/d", NONEXPANSIVE: "1", PLAIN: "(1-k)/(2d)"}[series_kind]
        super().__init__(
            f"step t_{index} = {step!r} is outside (0, {float(bound)!r}); "
            f"the bound {what} = {bound} is required for {series_kind} schedules"
        )


class DivergenceScanError(RuntimeError):
    """The partial sums did not reach the target within the scan cap."""


def to_exact(value) -> Number:
    """Parse "1/6"-style strings, ints and Fractions exactly; floats exactly as given."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, numbers.Integral):
        return Fraction(int(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, numbers.Real):
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value}")
        return Fraction(value)
    raise TypeError(f"cannot interpret {value!r} as a number")


# ========================================
# STEP SCHEDULES
# ========================================

@dataclass(frozen=True, eq=False)
class StepSchedule:
    """
    Step sizes t_n with metadata (k, d) and the series they must make diverge.

    Kinds:
        constant: t_n = a
        harmonic_capped: t_n = min(a/(n+1), cap)
        generator: t_n = generator(n), validated lazily

    Series kinds and their step ranges:
        strict: terms t_n((1-k)/d - t_n), t_n in (0, (1-k)/d)
        nonexpansive: terms t_n(1 - t_n), t_n in (0, 1)
        plain: terms t_n, t_n in (0, (1-k)/(2d))

    scale multiplies every step (set by reparameterize).
    """
    kind: str
    k: Number = Fraction(0)
    d: Number = Fraction(1)
    series_kind: str = STRICT
    a: Optional[Number] = None
    cap: Optional[Number] = None
    generator: Optional[Callable[[int], float]] = field(default=None, repr=False)
    scale: Number = Fraction(1)
    label: str = ""

    def __post_init__(self):
        if self.kind not in (CONSTANT, HARMONIC_CAPPED, GENERATOR):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.series_kind not in (STRICT, NONEXPANSIVE, PLAIN):
            raise ValueError(f"unknown series kind {self.series_kind!r}")
        if not 0 <= self.k < 1:
            raise ValueError(f"k must lie in [0, 1), got {self.k}")
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.kind in (CONSTANT, HARMONIC_CAPPED) and (self.a is None or self.a <= 0):
            raise ValueError(f"{self.kind} schedules need a > 0")
        if self.kind == HARMONIC_CAPPED and (self.cap is None or self.cap <= 0):
            raise ValueError("harmonic_capped schedules need cap > 0")
        if self.kind == GENERATOR and self.generator is None:
            raise ValueError("generator schedules need a generator")

    # --- bounds -------------------------------------------------------

    @property
    def upper_bound(self) -> Number:
        if self.series_kind == NONEXPANSIVE:
            return Fraction(1)
        if self.series_kind == PLAIN:
            return (1 - self.k) / (2 * self.d)
        return (1 - self.k) / self.d

    @property
    def is_closed_form(self) -> bool:
        return self.kind != GENERATOR

    def check_step(self, n: int, t: float) -> None:
        if not 0.0 < t < float(self.upper_bound):
            raise StepRangeError(n, t, self.upper_bound, self.series_kind)

    def validate(self) -> None:
        """Eager range check for closed-form schedules (largest step is t_0)."""
        if self.kind == CONSTANT:
            t0 = self.a * self.scale
        elif self.kind == HARMONIC_CAPPED:
            t0 = min(self.a, self.cap) * self.scale
        else:
            return
        if not 0 < t0 < self.upper_bound:
            raise StepRangeError(0, float(t0), self.upper_bound, self.series_kind)

    # --- steps --------------------------------------------------------

    def exact_step(self, n: int) -> Number:
        if self.kind == CONSTANT:
            return self.a * self.scale
        if self.kind == HARMONIC_CAPPED:
            return min(Fraction(self.a) / (n + 1), self.cap) * self.scale
        return self.generator(n) * float(self.scale)

    def step(self, n: int) -> float:
        return float(self.exact_step(n))

    def steps(self, start: int, stop: int) -> np.ndarray:
        """Float steps t_start .. t_{stop-1}."""
        count = max(0, stop - start)
        if self.kind == CONSTANT:
            return np.full(count, float(self.a * self.scale))
        if self.kind == HARMONIC_CAPPED:
            n = np.arange(start, stop, dtype=float)
            base = np.minimum(float(self.a) / (n + 1.0), float(self.cap))
            return base * float(self.scale)
        return np.array([self.step(n) for n in range(start, stop)], dtype=float)

    # --- series -------------------------------------------------------

    def _term_of(self, t):
        if self.series_kind == NONEXPANSIVE:
            return t * (1 - t)
        if self.series_kind == PLAIN:
            return t
        return t * (self.upper_bound - t)

    def exact_term(self, n: int) -> Number:
        return self._term_of(self.exact_step(n))

    def terms(self, start: int, stop: int) -> np.ndarray:
        t = self.steps(start, stop)
        if self.series_kind == NONEXPANSIVE:
            return t * (1.0 - t)
        if self.series_kind == PLAIN:
            return t
        return t * (float(self.upper_bound) - t)

    def describe(self) -> dict:
        return {
            "kind": self.kind,
            "a": None if self.a is None else str(self.a),
            "cap": None if self.cap is None else str(self.cap),
            "k": str(self.k),
            "d": str(self.d),
            "series_kind": self.series_kind,
            "scale": str(self.scale),
        }


def constant_schedule(a, k=0, d=1, series_kind: str = STRICT) -> StepSchedule:
    schedule = StepSchedule(kind=CONSTANT, a=to_exact(a), k=to_exact(k), d=to_exact(d),
                            series_kind=series_kind, label=f"t_n={a}")
    schedule.validate()
    return schedule


def harmonic_capped_schedule(a, cap, k=0, d=1, series_kind: str = STRICT) -> StepSchedule:
    schedule = StepSchedule(kind=HARMONIC_CAPPED, a=to_exact(a), cap=to_exact(cap), k=to_exact(k),
                            d=to_exact(d), series_kind=series_kind, label=f"t_n=min({a}/(n+1),{cap})")
    schedule.validate()
    return schedule


def generator_schedule(generator: Callable[[int], float], k=0, d=1, series_kind: str = STRICT,
                       label: str = "generator") -> StepSchedule:
    return StepSchedule(kind=GENERATOR, generator=generator, k=to_exact(k), d=to_exact(d),
                        series_kind=series_kind, label=label)


def reparameterize(schedule: StepSchedule, k=None, d=None) -> StepSchedule:
    """
    t'_n = t_n * d/(1-k): the steps of the same iteration seen as a Mann
    iteration of the nonexpansive map T_{(1-k)/d}.

    Raises:
        StepRangeError: the source schedule is out of range
        ValueError: the source schedule is not a strict-series schedule
    """
    if schedule.series_kind != STRICT:
        raise ValueError("only strict-series schedules can be reparameterized")
    k = schedule.k if k is None else to_exact(k)
    d = schedule.d if d is None else to_exact(d)
    if k != schedule.k or d != schedule.d:
        raise ValueError(f"schedule was built for (k, d) = ({schedule.k}, {schedule.d}), not ({k}, {d})")
    schedule.validate()
    factor = d / (1 - k)
    return StepSchedule(
        kind=schedule.kind, a=schedule.a, cap=schedule.cap, generator=schedule.generator,
        k=Fraction(0), d=Fraction(1), series_kind=NONEXPANSIVE,
        scale=schedule.scale * factor, label=f"({schedule.label})*d/(1-k)",
    )


# ========================================
# RATES OF DIVERGENCE
# ========================================

def _scan(schedule: StepSchedule, limit: int):
    """Yield (start, running partial sums) chunk by chunk, summed left to right."""
    total = 0.0
    for start in range(0, limit, _CHUNK):
        stop = min(start + _CHUNK, limit)
        terms = schedule.terms(start, stop)
        if np.any(terms < 0):
            raise ValueError("series terms must be nonnegative")
        sums = np.cumsum(np.concatenate(([total], terms)))[1:]
        total = float(sums[-1])
        yield start, sums


def partial_sum(schedule: StepSchedule, n: int) -> Number:
    """sum_{i=0}^{n} of the schedule's series terms (exact for constant schedules)."""
    if n < 0:
        return 0
    if schedule.kind == CONSTANT:
        return (n + 1) * schedule.exact_term(0)
    for start, sums in _scan(schedule, n + 1):
        if start + sums.shape[0] > n:
            return float(sums[n - start])
    raise AssertionError("unreachable")


def theta_exact(schedule: StepSchedule, N: int, scan_cap: int = SCAN_CAP) -> int:
    """
    Least n with partial_sum(n) >= N; theta(0) = 0.

    Raises:
        DivergenceScanError: a scanned schedule needed more than scan_cap
            terms (constant schedules use the closed form)
    """
    N = int(N)
    if N < 0:
        raise ValueError(f"N must be nonnegative, got {N}")
    if N == 0:
        return 0
    if schedule.kind == CONSTANT:
        term = schedule.exact_term(0)
        if term <= 0:
            raise DivergenceScanError("series appears not to diverge at this budget (zero terms)")
        return max(0, math.ceil(Fraction(N) / Fraction(term)) - 1)
    for start, sums in _scan(schedule, scan_cap):
        hits = np.nonzero(sums >= N)[0]
        if hits.size:
            return start + int(hits[0])
    raise DivergenceScanError(
        f"series appears not to diverge at this budget: partial sums stay below {N} for {scan_cap} terms"
    )


class RateOfDivergence:
    """
    theta: N -> index, tagged with the series it certifies.

    Calls are cached; the instance is safe to share between threads since
    each value is a pure function of N.
    """

    def __init__(self, fn: Callable[[int], int], series_kind: str, label: str = "theta"):
        self._fn = fn
        self.series_kind = series_kind
        self.label = label
        self._cache = {}

    @classmethod
    def exact(cls, schedule: StepSchedule, scan_cap: int = SCAN_CAP) -> "RateOfDivergence":
        return cls(lambda N: theta_exact(schedule, N, scan_cap), schedule.series_kind,
                   label=f"theta[{schedule.label}]")

    def __call__(self, N: int) -> int:
        N = int(N)
        if N not in self._cache:
            self._cache[N] = self._fn(N)
        return self._cache[N]


def transfer_to_nonexpansive(theta: RateOfDivergence) -> RateOfDivergence:
    """
    The same theta, now for the series sum t'_n(1 - t'_n) of the reparameterized steps.

    Valid because that series is (d/(1-k))^2 >= 1 times the strict series.
    """
    if theta.series_kind != STRICT:
        raise ValueError("only a rate for the strict series transfers")
    return RateOfDivergence(theta, NONEXPANSIVE, label=f"{theta.label}'")


def plain_to_strict(theta_plain: RateOfDivergence, k, d) -> RateOfDivergence:
    """
    A rate for the strict series from a rate for sum t_n, when t_n < (1-k)/(2d).

    Each strict term is at least (1-k)/(2d) * t_n, so
    theta_strict(N) = theta_plain(ceil(2dN/(1-k))).
    """
    if theta_plain.series_kind != PLAIN:
        raise ValueError("plain_to_strict needs a rate for the plain series sum t_n")
    k, d = to_exact(k), to_exact(d)
    factor = 2 * d / (1 - k)
    return RateOfDivergence(lambda N: theta_plain(math.ceil(factor * N)), STRICT,
                            label=f"{theta_plain.label}*2d/(1-k)")


# ========================================
# ASYMPTOTIC REGULARITY RATES
# ========================================

_REQUIRED_SERIES = {"h1": NONEXPANSIVE, "h2": NONEXPANSIVE, "h3": STRICT, "h4": STRICT}


def inner_argument(variant: str, b, k, d, eta: Optional[Callable], eps) -> int:
    """The integer N = ceil(...) that each rate feeds to theta."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown rate variant {variant!r}")
    if variant in ("h1", "h3") and eta is None:
        raise ValueError(f"{variant} needs a modulus of uniform convexity eta")
    b, k, d, eps = to_exact(b), to_exact(k), to_exact(d), to_exact(eps)
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    if b < 0:
        raise ValueError(f"b must be nonnegative, got {b}")
    if variant == "h1":
        value = 3 * (b + 1) / (2 * eps * eta(eps / (b + 1)))
    elif variant == "h2":
        value = 4 * (b + 1) / (eps * eps)
    elif variant == "h3":
        value = 3 * (b + 1) * d / (2 * eps * (1 - k) * eta(eps * (1 - k) / ((b + 1) * d)))
    else:
        value = 4 * (b + 1) / ((1 - k) ** 2 * eps * eps)
    return int(math.ceil(value))


def rate_h(variant: str, b, k, d, eta: Optional[Callable], theta: RateOfDivergence, eps) -> int:
    """
    h(eps) for one of the four variants.

    h1, h2: Mann iteration of a nonexpansive map (theta for sum t_n(1-t_n))
    h3, h4: Mann iteration of a k-strict pseudocontraction
            (theta for sum t_n((1-k)/d - t_n))
    h2 and h4 are the Hilbert-space forms with eta(eps) = eps^2/8 folded in.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown rate variant {variant!r}")
    required = _REQUIRED_SERIES[variant]
    if getattr(theta, "series_kind", None) != required:
        raise ValueError(
            f"{variant} needs a rate of divergence for the {required} series, "
            f"got one for {getattr(theta, 'series_kind', 'an untagged')} series"
        )
    return theta(inner_argument(variant, b, k, d, eta, eps))


def rate_function(variant: str, b, k, d, eta: Optional[Callable], theta: RateOfDivergence) -> Callable:
    """eps -> rate_h(variant, ..., eps)."""
    def h(eps):
        return rate_h(variant, b, k, d, eta, theta, eps)
    h.__name__ = variant
    return h


def default_b(distance: float) -> float:
    """The distance x0 -> fixed point rounded up to the next float."""
    return math.nextafter(float(distance), math.inf)


# ========================================
# CERTIFICATION
# ========================================

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"


@dataclass
class RateCertificate:
    epsilon: float
    predicted_index: int
    checked_indices: List[int]
    max_residual_beyond: Optional[float]
    passed: bool
    status: str
    witness_index: Optional[int] = None
    variant: str = ""

    def to_record(self) -> dict:
        return {
            "variant": self.variant,
            "epsilon": self.epsilon,
            "predicted_index": self.predicted_index,
            "max_residual_beyond": self.max_residual_beyond,
            "pass": self.passed,
            "status": self.status,
            "witness_index": self.witness_index,
            "checked_indices": self.checked_indices,
        }


def beyond_indices(h: int, last: int, check_budget: int, exhaustive: bool = False) -> np.ndarray:
    """h, geometrically spaced indices up to min(4h, last), and last."""
    if exhaustive:
        return np.arange(h, last + 1)
    upper = min(4 * max(h, 1), last)
    picks = [h, last]
    if upper > h and check_budget > 0:
        picks.extend(np.geomspace(max(h, 1), upper, num=check_budget).astype(np.int64).tolist())
    idx = np.unique(np.array(picks, dtype=np.int64))
    return idx[(idx >= h) & (idx <= last)]


def certify(
    trajectory,
    rate: Callable,
    eps_list: Sequence[float],
    check_budget: int = 32,
    extend: Optional[Callable] = None,
    max_steps: int = MAX_STEPS,
    tol: float = TOLERANCE,
    exhaustive: bool = False,
    variant: str = "",
) -> List[RateCertificate]:
    """
    Check the defining property of a rate of asymptotic regularity:
    residual(n) <= eps for n >= h(eps), on a budgeted set of indices.

    Args:
        trajectory: anything with a `residuals` array
        rate: eps -> predicted index h(eps)
        eps_list: tolerances to certify
        check_budget: number of geometric indices between h and 4h
        extend: n_max -> longer trajectory, used when h lies past the end;
            the run is grown to min(4h, max_steps) so the window beyond h is checked
        max_steps: no extension beyond this length
        tol: slack on the comparison with eps
        exhaustive: check every index from h to the end

    Returns:
        list: one RateCertificate per eps; an unreachable h gives an
        inconclusive certificate, never a pass
    """
    certificates = []
    for eps in eps_list:
        h = int(rate(eps))
        last = len(trajectory.residuals) - 1
        if h > last and getattr(trajectory, "stationary_from", None) is not None:
            # every residual from stationary_from on equals the last one
            max_residual = float(trajectory.residuals[last])
            passed = max_residual <= float(eps) + tol
            certificates.append(RateCertificate(
                epsilon=float(eps), predicted_index=h, checked_indices=[h],
                max_residual_beyond=max_residual, passed=passed,
                status=PASS if passed else FAIL, witness_index=None if passed else h, variant=variant,
            ))
            continue
        if h > last:
            if extend is not None and h <= max_steps:
                target = max(h, min(4 * max(h, 1), max_steps))
                logger.info("extending trajectory from %d to %d steps for eps=%g", last, target, eps)
                trajectory = extend(target)
                last = len(trajectory.residuals) - 1
            if h > last:
                logger.warning("h(%g) = %d lies beyond the trajectory (%d); inconclusive", eps, h, last)
                certificates.append(RateCertificate(
                    epsilon=float(eps), predicted_index=h, checked_indices=[],
                    max_residual_beyond=None, passed=False, status=INCONCLUSIVE, variant=variant,
                ))
                continue
        idx = beyond_indices(h, last, check_budget, exhaustive)
        values = np.asarray(trajectory.residuals)[idx]
        worst = int(np.argmax(values))
        max_residual = float(values[worst])
        passed = max_residual <= float(eps) + tol
        certificates.append(RateCertificate(
            epsilon=float(eps),
            predicted_index=h,
            checked_indices=[int(i) for i in idx],
            max_residual_beyond=max_residual,
            passed=passed,
            status=PASS if passed else FAIL,
            witness_index=None if passed else int(idx[worst]),
            variant=variant,
        ))
    return certificates
