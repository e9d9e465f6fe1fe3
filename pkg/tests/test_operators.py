import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from utils.operators import (
    ConstructionRefused,
    averaged,
    averaged_instance,
    ball_projection,
    certify_k,
    check_lemma2,
    from_nonexpansive,
    linear_operator,
    scaled_negation,
    validate_k_strict,
    validate_nonexpansive,
    zero_map,
)
from utils.spaces import hilbert_space, lp_space, norm, sample_points


@pytest.fixture
def ball_reflection(plane):
    """T = 2 P_B - id, the inverse averaging of the unit-ball projection at s = 1/2."""
    return from_nonexpansive(ball_projection(plane, 1.0), 0.5, plane, np.zeros(2), 10_000, 0, label="ball")


# ---- averaged maps ----

def test_averaged_at_one_is_the_map(negation):
    assert averaged(negation, 1.0) is negation.apply


def test_averaged_negation_at_one_third_is_zero(negation):
    xs = np.linspace(-5.0, 5.0, 11)[:, None]
    assert np.all(np.abs(averaged(negation, 1.0 / 3.0)(xs)) <= 1e-15 * np.maximum(1.0, np.abs(xs)))


def test_averaged_composition_law(plane):
    T = scaled_negation(3.0, plane)
    twice = averaged(averaged(T, 0.5), 0.5)
    quarter = averaged(T, 0.25)
    xs = sample_points(plane, 0, 1000)
    assert np.max(norm(plane, twice(xs) - quarter(xs))) <= 1e-12 * 10


@pytest.mark.parametrize("t", [0.0, -0.5, 1.5])
def test_averaged_rejects_out_of_range(negation, t):
    with pytest.raises(ValueError):
        averaged(negation, t)


@given(st.floats(1e-3, 1.0))
def test_averaged_preserves_fixed_point(t):
    space = hilbert_space(2)
    T = from_nonexpansive(ball_projection(space), 0.5, space, [0.3, -0.4], 500, 0)
    p = T.known_fixed_point
    assert norm(space, averaged(T, t)(p) - p) <= 1e-12


def test_averaged_instance_range(negation):
    A = averaged_instance(negation, 2.0 / 3.0)
    assert A.k == 0.0
    assert A.known_fixed_point is negation.known_fixed_point
    with pytest.raises(ValueError):
        averaged_instance(negation, 0.7)


# ---- constructions ----

@pytest.mark.parametrize("c, k", [(1.0, 0.0), (2.0, 1.0 / 3.0), (3.0, 0.5)])
def test_scaled_negation_strictness(plane, c, k):
    T = scaled_negation(c, plane)
    assert T.k == pytest.approx(k)
    np.testing.assert_array_equal(T([1.0, -2.0]), [-c, 2.0 * c])
    assert validate_k_strict(plane, T, T.k, 10_000, 0).passed


def test_scaled_negation_guards(plane, l4):
    with pytest.raises(ValueError):
        scaled_negation(0.5, plane)
    with pytest.raises(ValueError):
        scaled_negation(2.0, l4)


def test_scaled_negation_equality_case(plane):
    # 4||x-y||^2 = ||x-y||^2 + (1/3) 9 ||x-y||^2
    T = scaled_negation(2.0, plane)
    report = validate_k_strict(plane, T, 1.0 / 3.0, 10_000, 0)
    assert report.passed
    assert report.max_violation <= 1e-12
    assert report.forms_agree


def test_from_nonexpansive_identity_case(plane):
    N = ball_projection(plane)
    T = from_nonexpansive(N, 1.0, plane, np.zeros(2))
    assert T.k == 0.0
    assert T.apply is N


def test_from_nonexpansive_zero_map(line):
    T = from_nonexpansive(zero_map(line), 1.0 / 3.0, line, [0.0])
    assert T.k == pytest.approx(2.0 / 3.0)
    np.testing.assert_allclose(T([1.5]), [-3.0], rtol=1e-15)
    assert validate_k_strict(line, T, T.k, 10_000, 0).passed


def test_ball_reflection_is_half_strict(plane, ball_reflection):
    assert ball_reflection.k == 0.5
    assert validate_k_strict(plane, ball_reflection, 0.5, 100_000, 1).passed
    xs = sample_points(plane, 4, 1000)
    back = averaged(ball_reflection, 0.5)(xs)
    assert np.max(norm(plane, back - ball_projection(plane)(xs))) <= 1e-12


def test_from_nonexpansive_refuses_expansive_map(plane):
    with pytest.raises(ConstructionRefused) as info:
        from_nonexpansive(lambda x: 2.0 * np.asarray(x), 0.5, plane, np.zeros(2), 1000, 0)
    assert info.value.report is not None
    assert info.value.report.witness is not None


def test_from_nonexpansive_needs_hilbert(l4):
    with pytest.raises(ValueError):
        from_nonexpansive(zero_map(l4), 0.5, l4, np.zeros(5))


def test_fixed_point_must_be_fixed(plane):
    with pytest.raises(ConstructionRefused):
        from_nonexpansive(zero_map(plane), 0.5, plane, [1.0, 0.0])


def test_linear_operator_declared_and_certified(plane):
    rotation = [[0.0, -1.0], [1.0, 0.0]]
    T = linear_operator(rotation, plane, k=0.0, pairs=2000)
    assert T.k == 0.0
    # -2 id certified by bisection lands just above 1/3
    neg = linear_operator([[-2.0, 0.0], [0.0, -2.0]], plane, pairs=2000)
    assert neg.k == pytest.approx(1.0 / 3.0, abs=2e-6)
    assert neg.k >= 1.0 / 3.0 - 1e-8


def test_linear_operator_rejects_wrong_k(plane):
    with pytest.raises(ConstructionRefused):
        linear_operator([[-2.0, 0.0], [0.0, -2.0]], plane, k=0.2, pairs=2000)
    with pytest.raises(ValueError):
        linear_operator([[1.0]], plane)


def test_linear_operator_in_lp():
    space = lp_space(3, 4)
    T = linear_operator(-np.eye(3), space, pairs=2000)
    assert 0.0 <= T.k < 1.0
    assert validate_k_strict(space, T, T.k, 2000, 0).passed


# ---- validation ----

def test_identity_is_zero_strict(plane):
    report = validate_k_strict(plane, lambda x: np.asarray(x), 0.0, 1000, 0)
    assert report.passed


def test_negation_fails_below_its_constant(plane):
    report = validate_k_strict(plane, scaled_negation(2.0, plane), 0.2, 1000, 0)
    assert not report.passed
    assert report.witness is not None
    assert report.norm_form_max_violation > 0


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 0.99))
def test_validation_monotone_in_k(k):
    space = hilbert_space(2)
    T = scaled_negation(2.0, space)
    if validate_k_strict(space, T, k, 500, 3).passed:
        assert validate_k_strict(space, T, min(0.999, k + 0.05), 500, 3).passed


def test_validate_k_rejects_bad_arguments(plane, negation):
    with pytest.raises(ValueError):
        validate_k_strict(plane, negation, 1.0, 10, 0)
    with pytest.raises(ValueError):
        validate_k_strict(plane, negation, 0.5, 0, 0)


def test_validate_nonexpansive(plane):
    assert validate_nonexpansive(plane, ball_projection(plane), 10_000, 0).passed
    assert not validate_nonexpansive(plane, lambda x: 1.5 * np.asarray(x), 100, 0).passed


def test_certify_k_for_nonexpansive_map(plane):
    assert certify_k(plane, ball_projection(plane), 1000, 0) == 0.0


# ---- Lemma 2 ----

@pytest.mark.parametrize("divisor", [1, 2, 10])
def test_lemma2_for_shipped_instances(plane, ball_reflection, divisor):
    for T in (scaled_negation(2.0, plane), ball_reflection):
        t = (1.0 - T.k) / (divisor * plane.d)
        assert check_lemma2(T, t, pairs=100_000, seed=divisor).passed


def test_lemma2_range(negation):
    with pytest.raises(ValueError):
        check_lemma2(negation, 0.9)
    with pytest.raises(ValueError):
        check_lemma2(negation, 0.0)


def test_lemma2_fails_beyond_range(plane):
    T = scaled_negation(2.0, plane)
    # T_0.9 = -1.7 id
    report = validate_nonexpansive(plane, averaged(T, 0.9), 1000, 0)
    assert not report.passed
