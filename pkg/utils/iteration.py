"""
Mann Iteration Engine

Runs x_{n+1} = t_n T x_n + (1 - t_n) x_n and records, for every index n,
the residual ||x_n - T x_n|| and the distance ||x_n - p|| to the operator's
known fixed point. Points are kept up to a cap; beyond it only the scalar
sequences are stored.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from utils.operators import PseudocontractionInstance, averaged_instance
from utils.rates import CONSTANT, NONEXPANSIVE, StepSchedule, reparameterize
from utils.settings import POINT_CAP, TOLERANCE
from utils.spaces import as_vector, norm

logger = logging.getLogger(__name__)


@dataclass
class Trajectory:
    """
    Attributes:
        points: x_0 .. x_m as rows, m = min(n_max, point cap)
        residuals: ||x_n - T x_n||, n = 0 .. n_max
        fix_distances: ||x_n - p||, n = 0 .. n_max
        schedule_used: the steps used
        operator_label: label of the iterated operator
        final_point: x_{n_max}
        stationary_from: first n with x_{n+1} == x_n bitwise under a constant
            step, after which the iteration cannot move
    """
    points: np.ndarray
    residuals: np.ndarray
    fix_distances: np.ndarray
    schedule_used: StepSchedule
    operator_label: str
    final_point: np.ndarray
    stationary_from: Optional[int] = None

    @property
    def n_max(self) -> int:
        return len(self.residuals) - 1


# ========================================
# ENGINE
# ========================================

def _check_schedule(T: PseudocontractionInstance, schedule: StepSchedule) -> None:
    if schedule.series_kind == NONEXPANSIVE:
        if T.k != 0:
            raise ValueError(f"{T.label} is {T.k}-strict; nonexpansive-series schedules need k = 0")
    else:
        if float(schedule.k) < T.k - 1e-15:
            raise ValueError(f"schedule assumes k = {schedule.k} but {T.label} is only {T.k}-strict")
        if float(schedule.d) < T.space.d:
            raise ValueError(
                f"schedule assumes d = {schedule.d} below the declared d = {T.space.d} of {T.space.label}"
            )
    schedule.validate()


def _advance(T, x, schedule, start, stop, residuals, distances, points, point_cap):
    """
    Iterate from x = x_start, filling indices start .. stop in place.

    Returns (x_stop, stationary_from).
    """
    p = T.known_fixed_point
    constant = schedule.kind == CONSTANT
    lazy = not schedule.is_closed_form
    for n in range(start, stop):
        tx = T.apply(x)
        residuals[n] = norm(T.space, x - tx)
        distances[n] = norm(T.space, x - p)
        t = schedule.step(n)
        if lazy:
            schedule.check_step(n, t)
        x_next = t * tx + (1.0 - t) * x
        if constant and np.array_equal(x_next, x):
            residuals[n + 1:stop + 1] = residuals[n]
            distances[n + 1:stop + 1] = distances[n]
            if n + 1 <= point_cap:
                points[n + 1:min(stop, point_cap) + 1] = x
            logger.debug("%s is stationary from n=%d", T.label, n)
            return x, n
        x = x_next
        if n + 1 <= point_cap:
            points[n + 1] = x
    residuals[stop] = norm(T.space, x - T.apply(x))
    distances[stop] = norm(T.space, x - p)
    return x, None


def mann_iterate(
    T: PseudocontractionInstance,
    x0,
    schedule: StepSchedule,
    n_max: int,
    point_cap: int = POINT_CAP,
) -> Trajectory:
    """
    Mann iteration of T from x0 for n_max steps.

    Raises:
        StepRangeError: a step lies outside the schedule's allowed range
            (before iterating for closed-form schedules, at the step otherwise)
    """
    if n_max < 0:
        raise ValueError(f"n_max must be nonnegative, got {n_max}")
    _check_schedule(T, schedule)
    x = as_vector(T.space, x0).copy()
    residuals = np.empty(n_max + 1)
    distances = np.empty(n_max + 1)
    points = np.empty((min(n_max, point_cap) + 1, T.space.dim))
    points[0] = x
    final, stationary = _advance(T, x, schedule, 0, n_max, residuals, distances, points, point_cap)
    logger.info("%s: %d Mann steps, final residual %.3e", T.label, n_max, residuals[-1])
    return Trajectory(points, residuals, distances, schedule, T.label, final, stationary)


def extend_trajectory(
    trajectory: Trajectory,
    T: PseudocontractionInstance,
    n_max: int,
    point_cap: int = POINT_CAP,
) -> Trajectory:
    """Continue a trajectory of T to n_max steps (no-op if already that long)."""
    old = trajectory.n_max
    if n_max <= old:
        return trajectory
    residuals = np.empty(n_max + 1)
    distances = np.empty(n_max + 1)
    residuals[:old + 1] = trajectory.residuals
    distances[:old + 1] = trajectory.fix_distances
    kept = trajectory.points.shape[0]
    points = np.empty((min(n_max, point_cap) + 1, T.space.dim))
    points[:min(kept, points.shape[0])] = trajectory.points[:points.shape[0]]

    if trajectory.stationary_from is not None:
        residuals[old + 1:] = residuals[old]
        distances[old + 1:] = distances[old]
        if kept < points.shape[0]:
            points[kept:] = trajectory.final_point
        return Trajectory(points, residuals, distances, trajectory.schedule_used, trajectory.operator_label,
                          trajectory.final_point, trajectory.stationary_from)

    final, stationary = _advance(T, trajectory.final_point.copy(), trajectory.schedule_used, old, n_max,
                                 residuals, distances, points, point_cap)
    return Trajectory(points, residuals, distances, trajectory.schedule_used, trajectory.operator_label,
                      final, stationary)


def check_fejer(trajectory: Trajectory, tol: float = TOLERANCE) -> Tuple[bool, Optional[int]]:
    """
    Are the distances to the known fixed point nonincreasing (within tol)?

    Returns:
        tuple: (ok, first index n where distance(n+1) exceeds distance(n))
    """
    dist = trajectory.fix_distances
    rises = dist[1:] - dist[:-1] > tol * np.maximum(1.0, dist[:-1])
    if not np.any(rises):
        return True, None
    return False, int(np.argmax(rises))


# ========================================
# AVERAGED-OPERATOR REPARAMETERIZATION
# ========================================

def check_equivalence(
    T: PseudocontractionInstance,
    x0,
    schedule: StepSchedule,
    n_max: int,
) -> float:
    """
    Run the Mann iteration of T with (t_n) and of T_{(1-k)/d} with
    t'_n = t_n d/(1-k) side by side.

    Returns:
        float: the larger of the max pointwise deviation between the two
        sequences and the max deficit of the identity
        ||x_n - T_{(1-k)/d} x_n|| = ((1-k)/d) ||x_n - T x_n||
    """
    s = float((1 - schedule.k) / schedule.d)
    direct = mann_iterate(T, x0, schedule, n_max, point_cap=n_max)
    A = averaged_instance(T, s, float(schedule.d))
    via = mann_iterate(A, x0, reparameterize(schedule), n_max, point_cap=n_max)

    deviation = float(np.max(norm(T.space, direct.points - via.points)))
    P = direct.points
    res_T = norm(T.space, P - T.apply(P))
    res_A = norm(T.space, P - A.apply(P))
    identity_gap = float(np.max(np.abs(res_A - s * res_T)))
    logger.info("%s: recurrence deviation %.3e, residual identity gap %.3e",
                T.label, deviation, identity_gap)
    return max(deviation, identity_gap)
