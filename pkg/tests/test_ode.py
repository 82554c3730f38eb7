import json
import math

import numpy as np
import pytest
from helpers import log_uniform

from modmetric.fixed_point import ContractionSpec, check_modular_contraction
from modmetric.gv_modular import ACFunction, example_x_alpha
from modmetric.ode import (PROBLEMS, CaratheodoryProblem, LipschitzViolation, NonFiniteRHS,
                           SegmentFailure, integral_operator, make_problem,
                           sample_anchored_pairs, seed_bound, segment_edges, solve_ivp,
                           verify_contraction_factor)
from modmetric.phi_functions import EXP_MINUS_ONE, jensen_gap


@pytest.fixture(scope="module")
def decay_solution():
    return solve_ivp(make_problem("decay"), eps=1e-10, N=2048, safety=0.5)


# ------------------------------------------------------------ operator

def test_zero_rhs_gives_constant():
    p = CaratheodoryProblem(lambda t, x: np.zeros_like(x), 0.0, x0=2.0)
    x = ACFunction.from_values(0.0, 1.0, 2.0 + np.linspace(0, 1, 17) ** 2)
    assert np.all(integral_operator(p, x).values == 2.0)


def test_first_picard_step_for_decay():
    p = make_problem("decay", T=0.5)
    tx = integral_operator(p, ACFunction.constant(0.0, 0.5, 1.0, 64))
    assert np.allclose(tx.values, 1.0 - tx.nodes, atol=1e-15)


def test_constant_rhs_is_exact():
    p = make_problem("constant")
    tx = integral_operator(p, ACFunction.constant(0.0, 1.0, 0.0, 100))
    assert np.allclose(tx.values, tx.nodes, atol=1e-14)


def test_operator_rejects_foreign_functions_and_nonfinite_rhs():
    p = make_problem("decay")
    with pytest.raises(ValueError):
        integral_operator(p, ACFunction.constant(0.0, 1.0, 0.0, 8))
    blowup = CaratheodoryProblem(lambda t, x: np.where(np.abs(x) < 100, 0.0, np.inf), 0.0)
    with pytest.raises(NonFiniteRHS):
        integral_operator(blowup, ACFunction.from_values(0.0, 1.0, np.linspace(0, 400, 9)))


# ------------------------------------------------------------ problem invariants

def test_understated_lipschitz_constant_is_a_hard_error():
    with pytest.raises(LipschitzViolation):
        CaratheodoryProblem(lambda t, x: -3 * x, 1.0)


def test_problem_validation():
    with pytest.raises(ValueError):
        CaratheodoryProblem(lambda t, x: x, 1.0, a=1.0, b=0.0)
    with pytest.raises(ValueError):
        CaratheodoryProblem(lambda t, x: x, -1.0)
    with pytest.raises(ValueError):
        make_problem("unknown")


def test_registry_and_interval_override():
    assert set(PROBLEMS) == {"decay", "constant", "cosine", "logistic"}
    assert make_problem("decay", T=3.0).b == 3.0


def test_rhs_bound_finite():
    lam2, c2 = make_problem("cosine").rhs_bound()
    assert c2 <= 1.0 and lam2 > 0


# ------------------------------------------------------------ contraction estimate

def test_equal_pair_passes():
    p = make_problem("decay")
    x = sample_anchored_pairs(p, 1, 256)[0][0]
    assert verify_contraction_factor(p, [(x, x)], [1.0])


def test_alpha_family_pairs_pass_and_understated_L_fails():
    p = make_problem("decay", T=0.5)
    rng = np.random.default_rng(6)
    pairs = []
    for _ in range(10):
        a1, a2 = rng.uniform(0.05, 1.0, 2)
        # x_alpha restricted to [0, 0.5]: shift to start at x0
        f1 = ACFunction(0.0, 0.5, 1.0, example_x_alpha(a1, 1024).deriv[:512])
        f2 = ACFunction(0.0, 0.5, 1.0, example_x_alpha(a2, 1024).deriv[:512])
        pairs.append((f1, f2))
    grid = [0.5, 1.0, 2.0, 4.0]
    assert verify_contraction_factor(p, pairs, grid)
    verdict = verify_contraction_factor(p, pairs, grid, L=p.L / 10)
    assert not verdict and verdict.witness is not None


def test_contraction_with_random_lambdas():
    rng = np.random.default_rng(2)
    for name in ("decay", "logistic"):
        p = make_problem(name)
        pairs = sample_anchored_pairs(p, 5, 512, seed=3, amplitude=1.5)
        grid = sorted(log_uniform(rng, 0.05, 20.0) for _ in range(12))
        assert verify_contraction_factor(p, pairs, grid)


def test_jensen_step_of_the_estimate():
    p = make_problem("decay")
    for x, y in sample_anchored_pairs(p, 5, 256, seed=9):
        for lam in (0.5, 1.0, 2.0):
            lhs, rhs = jensen_gap(EXP_MINUS_ONE, (x.deriv - y.deriv) / lam)
            assert lhs <= rhs


def test_seed_bound_majorizes_first_gap():
    for name in PROBLEMS:
        p = make_problem(name)
        for b1 in (p.a + 0.25, p.a + 0.5, p.b):
            lam0, c0 = seed_bound(p, b1, N=512)
            sub = CaratheodoryProblem(p.f, p.L, p.phi, p.a, b1, p.x0, p.y0, p.name)
            seed = ACFunction.constant(p.a, b1, p.x0, 512)
            gap = sub.modular()(lam0, seed, integral_operator(sub, seed))
            assert math.isfinite(gap) and gap <= c0 * (1 + 1e-12)


# ------------------------------------------------------------ solver

def test_segmentation():
    edges = segment_edges(make_problem("decay"), 0.3)
    assert np.allclose(np.diff(edges)[:-1], 0.3) and edges[-1] == 1.0
    assert list(segment_edges(make_problem("decay"), 0.5)) == [0.0, 0.5, 1.0]
    assert list(segment_edges(make_problem("cosine"), 0.5)) == [0.0, 2.0]
    with pytest.raises(ValueError):
        segment_edges(make_problem("decay"), 1.0)


def test_decay_solution(decay_solution):
    sol = decay_solution
    assert sol.max_error() <= 1e-4
    assert sol.residual() <= 1e-10 * 1.0
    assert len(sol.segments) == 2
    # values chain exactly across knots
    for left, right in zip(sol.segments, sol.segments[1:]):
        assert right.solution.x0 == left.solution.values[-1]
    assert sol.knots[0] == 1.0
    for seg in sol.segments:
        assert make_problem("decay").L * (seg.b - seg.a) < 1


def test_fixed_point_equation_holds_per_segment(decay_solution):
    p = make_problem("decay")
    for seg in decay_solution.segments:
        sub = CaratheodoryProblem(p.f, p.L, p.phi, seg.a, seg.b, seg.solution.x0)
        tx = integral_operator(sub, seg.solution)
        assert np.max(np.abs(tx.values - seg.solution.values)) <= 1e-10 * (seg.b - seg.a)


def test_contraction_transfers_to_iterates(decay_solution):
    p = make_problem("decay")
    for seg in decay_solution.segments:
        sub = CaratheodoryProblem(p.f, p.L, p.phi, seg.a, seg.b, seg.solution.x0)
        its = seg.trace.iterates
        pairs = [(its[i], its[j]) for i in range(len(its)) for j in range(i + 1, len(its))][:20]
        spec = ContractionSpec(p.L * (seg.b - seg.a), 1.0)
        assert check_modular_contraction(sub.modular(), lambda x: integral_operator(sub, x),
                                         pairs, spec, [0.05, 0.2, 0.5, 1.0])


def test_constant_and_cosine():
    sol = solve_ivp(make_problem("constant"), eps=1e-10, N=1024)
    assert np.allclose(sol.values(), sol.nodes(), atol=1e-14) and sol.residual() <= 1e-14
    cos = solve_ivp(make_problem("cosine"), eps=1e-10, N=4096)
    assert cos.max_error() <= 1e-6


def test_logistic_solution():
    sol = solve_ivp(make_problem("logistic"), eps=1e-10, N=2048)
    assert sol.max_error() <= 1e-6
    assert np.all((sol.values() > 0) & (sol.values() < 1))


def test_safety_changes_iterations_not_answer(decay_solution):
    loose = solve_ivp(make_problem("decay"), eps=1e-10, N=2048, safety=0.9)
    assert loose.iterations()[0] > decay_solution.iterations()[0]
    assert loose.max_error() <= 2e-4


def test_segment_failure_carries_index():
    with pytest.raises(SegmentFailure) as info:
        solve_ivp(make_problem("decay"), eps=1e-14, N=256, max_iter=2)
    assert info.value.index == 0 and info.value.trace.verdict == "max_iter"
    with pytest.raises(ValueError):
        solve_ivp(make_problem("decay"), eps=0.0)


def test_exports(decay_solution):
    lines = decay_solution.to_csv().splitlines()
    assert lines[0] == "t,x" and len(lines) == 2 * 2048 + 2
    data = json.loads(decay_solution.traces_json())
    assert data["schema"] == 1 and len(data["segments"]) == 2
    no_exact = CaratheodoryProblem(lambda t, x: -x, 1.0, x0=1.0)
    with pytest.raises(ValueError):
        solve_ivp(no_exact, N=64).max_error()
