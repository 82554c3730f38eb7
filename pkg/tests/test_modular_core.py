import math

import numpy as np
import pytest
from helpers import power_velocity
from hypothesis import given, settings
from hypothesis import strategies as st

from modmetric.extreal import INFINITY
from modmetric.modular_core import (CapExceeded, EmptySample, InvalidGauge, ModularEvaluator,
                                    canonical_modular, check_axioms, convexify, euclidean, hat,
                                    in_modular_space, lambda_ladder, metric_dw, metric_dw_star,
                                    metric_kappa, regularize, replay, same_point)

LAMBDAS = [0.25, 0.5, 1.0, 2.0, 4.0]
POINTS = [(0.0,), (1.0,), (2.5,), (-0.7,)]
coord = st.floats(min_value=-100, max_value=100, allow_nan=False)


def test_canonical_values():
    d = canonical_modular(euclidean, "constant")
    v = canonical_modular(euclidean, "velocity")
    t = canonical_modular(euclidean, "threshold")
    x, y = (0.0, 0.0), (3.0, 4.0)
    assert d(7.0, x, y) == 5.0
    assert v(2.0, x, y) == 2.5
    assert t(5.0, x, y) == INFINITY and t(5.1, x, y) == 0.0
    with pytest.raises(ValueError):
        canonical_modular(euclidean, "other")
    with pytest.raises(ValueError):
        v(0.0, x, y)


def test_same_point_handles_arrays():
    assert same_point(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    assert not same_point(np.array([1.0, 2.0]), np.array([1.0, 3.0]))


@pytest.mark.parametrize("mode", ["pseudomodular", "modular", "strict", "convex"])
def test_velocity_passes_every_mode(mode):
    report = check_axioms(canonical_modular(euclidean, "velocity"), POINTS, LAMBDAS, mode=mode)
    assert report.passed and not report.violations
    assert set(report.verdicts.values()) == {"pass"}


def test_constant_modular_is_not_convex_and_witness_replays():
    m = canonical_modular(euclidean, "constant")
    assert check_axioms(m, POINTS, LAMBDAS, mode="strict").passed
    report = check_axioms(m, POINTS, LAMBDAS, mode="convex")
    assert report.failed() == ["iv"]
    assert report.violations and all(replay(m, v) for v in report.violations)
    assert len(report.violations) <= 5


def test_threshold_modular_is_convex_but_not_strict():
    m = canonical_modular(euclidean, "threshold")
    assert check_axioms(m, POINTS, LAMBDAS, mode="convex").passed
    assert check_axioms(m, POINTS, LAMBDAS, mode="modular").passed
    report = check_axioms(m, POINTS, LAMBDAS, mode="strict")
    assert report.failed() == ["i_s"]
    assert all(replay(m, v) for v in report.violations)


def test_increasing_in_lambda_is_refuted():
    # d * lam grows with lam: brute force over the grid must find it
    m = ModularEvaluator(lambda lam, x, y: euclidean(x, y) * lam)
    report = check_axioms(m, POINTS, LAMBDAS, mode="pseudomodular")
    assert "monotone" in report.failed()


def test_zero_modular_fails_nondegeneracy():
    m = ModularEvaluator(lambda lam, x, y: 0.0)
    assert check_axioms(m, POINTS, LAMBDAS, mode="modular").failed() == ["i"]


def test_one_point_sample_is_vacuous_for_distinct_pair_axioms():
    report = check_axioms(canonical_modular(euclidean, "velocity"), [(0.0,)], LAMBDAS, "strict")
    assert report.verdicts["i_s"] == "vacuous" and report.passed


def test_axiom_input_validation():
    m = canonical_modular(euclidean, "velocity")
    with pytest.raises(EmptySample):
        check_axioms(m, [], LAMBDAS)
    with pytest.raises(ValueError):
        check_axioms(m, POINTS, [2.0, 1.0])
    with pytest.raises(ValueError):
        check_axioms(m, POINTS, LAMBDAS, mode="bogus")


def test_report_serializes():
    report = check_axioms(canonical_modular(euclidean, "constant"), POINTS, LAMBDAS, "convex")
    data = report.to_dict()
    assert data["passed"] is False and data["violations"][0]["axiom"] == "iv"


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=1e-3, max_value=50), st.floats(min_value=0.0, max_value=3.0))
def test_power_modular_metrics_match_closed_forms(D, p):
    # w = D / lam^p: w <= lam at D^(1/(p+1)), w <= 1 at D^(1/p)
    m = power_velocity(p)
    x, y = (0.0,), (D,)
    assert metric_dw(m, x, y, tol=1e-11) == pytest.approx(D ** (1 / (p + 1)), abs=1e-9)
    if p > 0.25:
        assert metric_dw_star(m, x, y, tol=1e-11, lambda_cap=1e12) == pytest.approx(
            D ** (1 / p), rel=1e-9, abs=1e-9)
    kappa_sq = metric_kappa(m, lambda lam: lam * lam, x, y, tol=1e-11)
    assert kappa_sq == pytest.approx(D ** (1 / (p + 2)), abs=1e-9)


@given(coord, coord)
def test_velocity_metrics(a, b):
    m = canonical_modular(euclidean, "velocity")
    d = abs(a - b)
    assert metric_dw(m, (a,), (b,), tol=1e-10) == pytest.approx(math.sqrt(d), abs=1e-8)
    assert metric_dw_star(m, (a,), (b,), tol=1e-10) == pytest.approx(d, abs=1e-8)


def test_equal_points_have_zero_distance():
    m = canonical_modular(euclidean, "threshold")
    assert metric_dw(m, (1.0,), (1.0,)) == 0.0
    assert metric_dw_star(m, (1.0,), (1.0,)) == 0.0


def test_threshold_metrics_equal_d():
    m = canonical_modular(euclidean, "threshold")
    assert metric_dw(m, (0.0,), (3.0,), tol=1e-10) == pytest.approx(3.0, abs=1e-9)
    assert metric_dw_star(m, (0.0,), (3.0,), tol=1e-10) == pytest.approx(3.0, abs=1e-9)


def test_cap_exceeded():
    m = canonical_modular(euclidean, "threshold")
    with pytest.raises(CapExceeded):
        metric_dw_star(m, (0.0,), (1e12,), lambda_cap=1e9)


def test_constant_modular_dw_star_is_zero():
    m = canonical_modular(euclidean, "constant")
    assert metric_dw_star(m, (0.0,), (0.5,)) <= 1e-9
    assert metric_dw(m, (0.0,), (0.5,), tol=1e-10) == pytest.approx(0.5, abs=1e-9)


def test_kappa_identity_and_invalid_gauges():
    m = canonical_modular(euclidean, "velocity")
    assert metric_kappa(m, lambda lam: lam, (0.0,), (4.0,), tol=1e-10) == pytest.approx(2.0, abs=1e-9)
    with pytest.raises(InvalidGauge):
        metric_kappa(m, math.sqrt, (0.0,), (4.0,))
    with pytest.raises(InvalidGauge):
        metric_kappa(m, lambda lam: 0.0, (0.0,), (4.0,))


def test_convexify_and_hat():
    d = canonical_modular(euclidean, "constant")
    v = convexify(d)
    assert v.claims_convex
    assert v(4.0, (0.0,), (2.0,)) == 0.5
    assert check_axioms(v, POINTS, LAMBDAS, "convex").passed
    w = canonical_modular(euclidean, "velocity")
    assert hat(w)(3.0, (0.0,), (2.0,)) == pytest.approx(2.0)
    t = canonical_modular(euclidean, "threshold")
    assert hat(t)(5.0, (0.0,), (1.0,)) == 0.0


def test_convexify_metric_identity():
    w = canonical_modular(euclidean, "constant")
    for D in (0.1, 1.0, 7.0):
        assert metric_dw_star(convexify(w), (0.0,), (D,), tol=1e-10) == pytest.approx(
            metric_dw(w, (0.0,), (D,), tol=1e-10), abs=2e-10)


def test_regularize_sandwich_and_errors():
    t = canonical_modular(euclidean, "threshold")
    plus, minus = regularize(t, "right", 1e-3), regularize(t, "left", 1e-3)
    x, y = (0.0,), (1.0,)
    # at the jump, the right limit already vanishes while the left stays infinite
    assert plus(1.0, x, y) == 0.0 and t(1.0, x, y) == INFINITY and minus(1.0, x, y) == INFINITY
    with pytest.raises(ValueError):
        regularize(t, "up", 1e-3)
    with pytest.raises(ValueError):
        regularize(t, "left", 0.0)


def test_lambda_ladder():
    ladder = lambda_ladder(8.0, start=1.0)
    assert ladder == [1.0, 2.0, 4.0, 8.0]


def test_modular_space_membership():
    v = canonical_modular(euclidean, "velocity", base_point=(0.0,))
    assert in_modular_space(v, (3.0,), "Xw")
    d = canonical_modular(euclidean, "constant", base_point=(0.0,))
    assert not in_modular_space(d, (3.0,), "Xw")
    assert in_modular_space(d, (0.0,), "Xw")
    star = in_modular_space(d, (3.0,), "Xw_star")
    assert star and star.witness_lambda == 2.0 ** -20
    t = canonical_modular(euclidean, "threshold", base_point=(0.0,))
    member = in_modular_space(t, (3.0,), "Xw_star")
    assert member.witness_lambda == 4.0
    assert not in_modular_space(t, (1e12,), "Xw_star", lambda_cap=1e6)
    with pytest.raises(ValueError):
        in_modular_space(t, (1.0,), "X")
