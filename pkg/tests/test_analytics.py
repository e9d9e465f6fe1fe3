from fractions import Fraction

import numpy as np
import pytest

from utils.analytics import (
    compare_certificates,
    empirical_regularity_index,
    observed_decay_rate,
    summarize_trajectory,
    trajectory_frame,
)
from utils.iteration import mann_iterate
from utils.rates import RateOfDivergence, certify, rate_function
from utils.spaces import hilbert_eta


@pytest.fixture
def halving(negation, sixth_schedule):
    return mann_iterate(negation, [1.0], sixth_schedule, 40)


def test_trajectory_frame(halving):
    frame = trajectory_frame(halving)
    assert list(frame.columns) == ["n", "residual", "fix_distance"]
    assert len(frame) == 41
    assert frame["n"].iloc[-1] == 40
    assert frame["residual"].iloc[0] == 3.0


def test_empirical_regularity_index(halving):
    # 3 * 2^-n <= 0.1 from n = 5
    assert empirical_regularity_index(halving, 0.1) == 5
    assert empirical_regularity_index(halving, 10.0) == 0
    assert empirical_regularity_index(halving, 1e-30) is None


def test_observed_decay_rate(halving):
    assert observed_decay_rate(halving) == pytest.approx(0.5, rel=1e-9)


def test_decay_rate_undefined_at_fixed_point(negation, sixth_schedule):
    trajectory = mann_iterate(negation, [0.0], sixth_schedule, 10)
    assert observed_decay_rate(trajectory) is None


def test_compare_certificates(halving, sixth_schedule):
    theta = RateOfDivergence.exact(sixth_schedule)
    rate = rate_function("h4", 1, Fraction(1, 3), 1, hilbert_eta, theta)
    certificates = certify(halving, rate, [0.5], variant="h4")
    (row,) = compare_certificates(halving, certificates)
    assert row["variant"] == "h4"
    assert row["observed_index"] == 3
    assert row["predicted_index"] >= row["observed_index"]
    assert row["slack"] >= 1.0


def test_summary_statuses(negation, sixth_schedule, halving):
    summary = summarize_trajectory(halving)
    assert summary["status"] == "Decaying"
    assert summary["fejer_ok"]
    assert summary["n_max"] == 40
    assert summary["quartiles"]["Q1"] <= summary["quartiles"]["Q3"]
    still = summarize_trajectory(mann_iterate(negation, [0.0], sixth_schedule, 10))
    assert still["status"] == "Converged"
    assert still["stationary_from"] == 0


def test_summary_stalled():
    class Flat:
        residuals = np.ones(5)
        fix_distances = np.ones(5)
        operator_label = "flat"
        stationary_from = None
        n_max = 4

    assert summarize_trajectory(Flat())["status"] == "Stalled"
