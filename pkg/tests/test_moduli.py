import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from utils.moduli import (
    ALPHA,
    LOWER_BOUND_OF_SUP,
    UPPER_BOUND_OF_INF,
    alpha_objective,
    analytic_delta_hilbert,
    analytic_rho_hilbert,
    beta_star_probe_values,
    check_dual_inequality,
    check_lemma1_ii,
    check_lemma1_iii,
    check_smoothness_constant,
    clarkson_delta,
    compute_dc,
    delta_dual_lower_bound,
    estimate_beta_star,
    estimate_delta,
    estimate_rho,
    lindenstrauss_check,
    rho_table,
    verify_alpha,
)
from utils.spaces import hilbert_space, lp_space, sample_points


# ---- rho ----

def test_rho_hilbert_near_analytic(plane):
    est = estimate_rho(plane, 1.0, 10_000, 0)
    assert est.direction == LOWER_BOUND_OF_SUP
    assert est.probes_used == 10_000
    assert est.value <= math.sqrt(2.0) - 1.0 + 1e-12
    assert est.value == pytest.approx(math.sqrt(2.0) - 1.0, abs=5e-3)


def test_rho_small_tau_respects_declared_constant(plane):
    assert estimate_rho(plane, 0.1, 10_000, 0).value <= 0.5 * 0.1 ** 2


def test_rho_collinear_probe_contributes_zero(plane):
    # the shared coordinate prefix pairs u with itself
    est = estimate_rho(plane, 0.5, 1, 0)
    assert est.value == 0.0


def test_rho_monotone_in_probes(l4):
    values = [estimate_rho(l4, 0.7, n, 4).value for n in (10, 100, 1000)]
    assert values == sorted(values)


def test_rho_rejects_bad_tau(plane):
    with pytest.raises(ValueError):
        estimate_rho(plane, 0.0, 10, 0)


# ---- delta ----

def test_delta_hilbert_at_two_is_one(plane):
    est = estimate_delta(plane, 2.0, 1000, 0)
    assert est.direction == UPPER_BOUND_OF_INF
    assert est.value == pytest.approx(1.0, abs=1e-6)


def test_delta_at_zero_is_zero(plane, l4):
    assert estimate_delta(plane, 0.0, 100, 0).value == pytest.approx(0.0, abs=1e-15)
    assert estimate_delta(l4, 0.0, 100, 0).value == pytest.approx(0.0, abs=1e-15)


def test_delta_hilbert_at_one(plane):
    est = estimate_delta(plane, 1.0, 10_000, 0)
    assert est.value == pytest.approx(1.0 - math.sqrt(3.0) / 2.0, abs=5e-3)
    assert est.value >= float(analytic_delta_hilbert(1.0)) - 1e-12


@pytest.mark.parametrize("eps", [round(0.1 * i, 1) for i in range(1, 21)])
def test_hilbert_eta_is_valid(plane, eps):
    assert estimate_delta(plane, eps, 10_000, 0).value >= eps * eps / 8.0 - 1e-9


def test_delta_monotone_in_probes(l4):
    values = [estimate_delta(l4, 0.8, n, 2).value for n in (20, 200, 2000)]
    assert values == sorted(values, reverse=True)


def test_delta_lp_above_clarkson(l4):
    for eps in (0.5, 1.0, 1.5):
        assert estimate_delta(l4, eps, 2000, 1).value >= float(clarkson_delta(eps, 4.0)) - 1e-9


@pytest.mark.parametrize("eps", [-0.1, 2.1])
def test_delta_rejects_out_of_range(plane, eps):
    with pytest.raises(ValueError):
        estimate_delta(plane, eps, 10, 0)


# ---- beta* ----

def test_beta_star_hilbert_identity():
    space = hilbert_space(10)
    xs = sample_points(space, 1, 1000, 10.0)
    ts = np.random.default_rng(2).uniform(0.01, 5.0, size=1000)
    for i in range(1000):
        values = beta_star_probe_values(space, xs[i], float(ts[i]), 40, i)
        assert np.all(np.abs(values - ts[i]) <= 1e-9 * max(1.0, float(np.max(np.abs(xs[i])))))


def test_beta_star_zero_step_is_zero(plane, l4):
    assert estimate_beta_star(plane, [1.0, 2.0], 0.0, 10, 0).value == 0.0
    assert estimate_beta_star(l4, np.ones(5), 0.0, 10, 0).value == 0.0


def test_beta_star_lp_below_declared_d(l4):
    x = sample_points(l4, 9, 1, 1.0)[0]
    est = estimate_beta_star(l4, x, 0.5, 10_000, 0)
    assert est.direction == LOWER_BOUND_OF_SUP
    assert est.value <= 3 * 0.5 + 1e-9


def test_beta_star_absolute_variant_dominates(l4):
    x = np.array([1.0, -2.0, 0.5, 0.0, 3.0])
    plain = beta_star_probe_values(l4, x, 0.3, 500, 0)
    absolute = beta_star_probe_values(l4, x, 0.3, 500, 0, absolute=True)
    assert np.all(absolute >= plain)


def test_beta_star_rejects_negative_step(plane):
    with pytest.raises(ValueError):
        estimate_beta_star(plane, [1.0, 0.0], -1.0, 10, 0)


# ---- constant chain ----

def test_dc_for_hilbert_constant_is_exactly_64():
    assert compute_dc(0.5).dc == 64.0


def test_dc_breakdown():
    b = compute_dc(1.0)
    assert b.k1 == 1.0 / 16.0
    assert b.dc == 128.0
    small = compute_dc(0.01)
    assert small.k1 == ALPHA
    assert small.dc == pytest.approx(4.0 * (2.0 + math.sqrt(2.0)), rel=1e-12)
    assert small.alpha == ALPHA


@given(st.floats(1e-6, 1e6))
def test_dc_lower_bound_and_threshold(c):
    dc = compute_dc(c).dc
    floor = 8.0 / (2.0 - math.sqrt(2.0))
    assert dc >= floor * (1 - 1e-15)
    if 1.0 / (16.0 * c) >= 2.0 - math.sqrt(2.0):
        assert dc == pytest.approx(floor, rel=1e-15)


@given(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6))
def test_dc_monotone(c1, c2):
    lo, hi = sorted((c1, c2))
    assert compute_dc(lo).dc <= compute_dc(hi).dc


@pytest.mark.parametrize("c", [0.0, -1.0])
def test_dc_rejects_nonpositive(c):
    with pytest.raises(ValueError):
        compute_dc(c)


def test_alpha_grid_maximum():
    assert verify_alpha(1e-5) == pytest.approx(math.sqrt(2.0) - 2.0, abs=1e-6)
    assert float(alpha_objective(1.0)) == pytest.approx(math.sqrt(2.0) - 2.0, abs=1e-15)
    assert float(alpha_objective(0.5)) == pytest.approx(-0.7085, abs=1e-4)


@pytest.mark.parametrize("step", [0.0, 2e-3])
def test_alpha_rejects_coarse_grid(step):
    with pytest.raises(ValueError):
        verify_alpha(step)


@pytest.mark.parametrize("tau", [0.1, 0.5, 1.0])
def test_lindenstrauss_hilbert(tau):
    value = lindenstrauss_check(tau, analytic_delta_hilbert, 1e-4)
    assert value == pytest.approx(math.sqrt(1 + tau * tau) - 1, abs=1e-4)


def test_lindenstrauss_degenerate_delta():
    assert lindenstrauss_check(1.0, lambda e: np.zeros_like(e), 1e-3) == pytest.approx(1.0)


@pytest.mark.parametrize("tau", [0.1, 0.5, 1.0])
def test_lindenstrauss_agrees_with_sampling(tau):
    space = hilbert_space(2)
    sampled = estimate_rho(space, tau, 10_000, 0).value
    grid = lindenstrauss_check(tau, analytic_delta_hilbert, 1e-4)
    assert abs(sampled - grid) <= 5e-3
    assert grid == pytest.approx(float(analytic_rho_hilbert(tau)), abs=1e-4)


def test_dual_lower_bound_recovers_smoothness_constant():
    # sup of eps*tau/2 - eps^2/(16c) is c*tau^2, attained at eps = 4c*tau
    for tau in (0.1, 0.5, 1.0):
        value = lindenstrauss_check(tau, lambda e: delta_dual_lower_bound(0.5, e), 1e-4)
        assert value == pytest.approx(0.5 * tau * tau, abs=1e-8)


# ---- sampled inequalities ----

def test_lemma1_ii_hilbert_is_equality(plane):
    report = check_lemma1_ii(plane, 1.0, 10_000, 0)
    assert report.passed
    assert abs(report.max_violation) <= 1e-12


def test_lemma1_ii_l4_with_d3_passes(l4):
    report = check_lemma1_ii(l4, 3.0, 100_000, 0)
    assert report.passed
    assert report.samples_checked == 100_000
    assert report.witness is None


def test_lemma1_ii_l4_with_d1_fails_with_witness(l4):
    report = check_lemma1_ii(l4, 1.0, 100_000, 0)
    assert not report.passed
    assert set(report.witness) == {"x", "y", "lhs", "rhs"}
    assert report.witness["lhs"] > report.witness["rhs"]


def test_lemma1_iii_shares_constant(l4):
    assert check_lemma1_iii(l4, 3.0, 10, 2000, 0).passed


def test_smoothness_constants():
    assert check_smoothness_constant(hilbert_space(3), 0.5, [0.1, 0.5, 1.0, 2.0], 5000, 0).passed
    assert check_smoothness_constant(lp_space(4, 4), 1.5, [0.1, 0.5, 1.0], 5000, 0).passed


def test_dual_inequality_with_k2():
    for space in (hilbert_space(3), lp_space(4, 4)):
        assert check_dual_inequality(space, compute_dc(space.c).k2, 20_000, 0).passed


def test_rho_table_rows(plane):
    rows = rho_table(plane, [0.5, 1.0], 500, 0)
    assert [r["tau"] for r in rows] == [0.5, 1.0]
    assert all(r["estimate"]["direction"] == LOWER_BOUND_OF_SUP for r in rows)
    assert rows[1]["analytic"] == pytest.approx(math.sqrt(2.0) - 1.0)
