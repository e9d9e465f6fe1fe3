"""Shared fixtures: the canonical spaces, operators and schedules."""

from fractions import Fraction

import pytest

from utils.operators import scaled_negation
from utils.rates import constant_schedule
from utils.spaces import hilbert_space, lp_space


@pytest.fixture
def line():
    return hilbert_space(1)


@pytest.fixture
def plane():
    return hilbert_space(2)


@pytest.fixture
def l4():
    return lp_space(5, 4)


@pytest.fixture
def negation(line):
    """T = -2 id on R: 1/3-strict, fixed point 0."""
    return scaled_negation(2.0, line)


@pytest.fixture
def sixth_schedule():
    """t_n = 1/6 for k = 1/3, d = 1; strict-series terms are exactly 1/12."""
    return constant_schedule(Fraction(1, 6), k=Fraction(1, 3), d=1)
