"""Initial-value problems x' = f(t, x), x(a) = x0, solved as modular contractions.

The integral operator (Tx)(t) = x0 + int_a^t f(s, x(s)) ds is evaluated on
the piecewise-linear representation of ``ACFunction``: the derivative of Tx
on each cell is f at the cell midpoint, with x(mid) read off the
interpolant.  For that representation the contraction estimate

    w(L (b - a) lam, Tx, Ty) <= w(lam, x, y)

holds exactly (a discrete Jensen inequality), so the fixed point of the
discrete operator is the implicit midpoint solution and every bound of the
iteration is checkable without quadrature slack.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .extreal import ExtReal, le
from .fixed_point import ContractionSpec, FixedPointTrace, picard_solve
from .gv_modular import ACFunction, _riesz_sum, gv_modular
from .modular_core import ModularError, ModularEvaluator, Verdict, lambda_ladder
from .phi_functions import EXP_MINUS_ONE, PhiFunction

RHS = Callable[[np.ndarray, np.ndarray], np.ndarray]

LIPSCHITZ_SLACK = 1e-9
CONTRACTION_SLACK = 1e-6


class NonFiniteRHS(ModularError):
    pass


class LipschitzViolation(ModularError):
    pass


class SegmentFailure(ModularError):
    def __init__(self, index: int, message: str, trace: FixedPointTrace | None = None):
        super().__init__(f"segment {index}: {message}")
        self.index = index
        self.trace = trace


@dataclass(frozen=True)
class CaratheodoryProblem:
    f: RHS
    L: float
    phi: PhiFunction = EXP_MINUS_ONE
    a: float = 0.0
    b: float = 1.0
    x0: float = 0.0
    y0: float | None = None
    name: str = "custom"
    exact: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    state_box: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError("need a < b")
        if not self.L >= 0:
            raise ValueError("L must be nonnegative")
        self._check_lipschitz()
        if math.isinf(self.rhs_bound()[1]):
            raise ValueError("f(., y0) has an infinite modular for every sampled lambda")

    @property
    def anchor(self) -> float:
        return self.x0 if self.y0 is None else self.y0

    def _check_lipschitz(self, samples: int = 256) -> None:
        rng = np.random.default_rng(0)
        lo, hi = self.state_box or (self.x0 - 5.0, self.x0 + 5.0)
        t = rng.uniform(self.a, self.b, samples)
        x = rng.uniform(lo, hi, samples)
        y = rng.uniform(lo, hi, samples)
        gap = np.abs(self.f(t, x) - self.f(t, y))
        allowed = self.L * np.abs(x - y) + LIPSCHITZ_SLACK
        bad = np.flatnonzero(gap > allowed)
        if bad.size:
            i = bad[0]
            raise LipschitzViolation(
                f"{self.name}: |f(t,x)-f(t,y)| = {gap[i]:.6g} > L|x-y| at t={t[i]:.6g}, "
                f"x={x[i]:.6g}, y={y[i]:.6g}")

    def rhs_bound(self, N: int = 1024, b1: float | None = None) -> tuple[float, ExtReal]:
        """(lam2, C2): the first ladder lam2 with int phi(|f(t, y0)| / lam2) dt <= 1.

        Falls back to the first finite value; (inf, inf) if none is finite.
        """
        b1 = self.b if b1 is None else b1
        mids = self.a + (np.arange(N) + 0.5) * ((b1 - self.a) / N)
        g = np.broadcast_to(np.asarray(self.f(mids, np.full(N, self.anchor)), float), (N,))
        first = None
        for lam in lambda_ladder(1e6, start=2.0 ** -10):
            c = _riesz_sum(self.phi, lam, g, b1 - self.a)
            if c <= 1.0:
                return lam, c
            if first is None and not math.isinf(c):
                first = (lam, c)
        return first or (math.inf, math.inf)

    def modular(self) -> ModularEvaluator:
        """The GV modular used by the solver (no limit extrapolation)."""
        return gv_modular(self.phi, extrapolate=False)


def integral_operator(problem: CaratheodoryProblem, x: ACFunction) -> ACFunction:
    if (x.a, x.b, x.x0) != (problem.a, problem.b, problem.x0):
        raise ValueError("x must live on the problem interval and start at x0")
    with np.errstate(all="ignore"):
        d = np.asarray(problem.f(x.midpoints, x.mid_values), dtype=float)
    d = np.broadcast_to(d, (x.N,))
    if not np.isfinite(d).all():
        i = int(np.flatnonzero(~np.isfinite(d))[0])
        raise NonFiniteRHS(f"f is not finite at t={x.midpoints[i]:.6g}")
    return ACFunction(x.a, x.b, x.x0, d)


def verify_contraction_factor(problem: CaratheodoryProblem,
                              pairs: Sequence[tuple[ACFunction, ACFunction]],
                              lambda_grid: Sequence[float], L: float | None = None) -> Verdict:
    """Check w(L (b - a) lam, Tx, Ty) <= w(lam, x, y) with 1e-6 relative slack.

    ``L`` overrides the problem's constant (useful to show that an
    understated constant is caught).  With L = 0 the operator must map every
    pair to the same function.
    """
    L = problem.L if L is None else L
    k = L * (problem.b - problem.a)
    m = problem.modular()
    checked = 0
    for x, y in pairs:
        tx, ty = integral_operator(problem, x), integral_operator(problem, y)
        for lam in lambda_grid:
            checked += 1
            rhs = m(lam, x, y)
            if k == 0:
                if not np.allclose(tx.deriv, ty.deriv, rtol=0, atol=1e-12):
                    return Verdict(False, witness=(lam, x, y), value=math.inf, checked=checked,
                                   note="L = 0 but Tx != Ty")
                continue
            lhs = m(k * lam, tx, ty)
            if not le(lhs, rhs, CONTRACTION_SLACK):
                return Verdict(False, witness=(lam, x, y), value=lhs, checked=checked,
                               note=f"lhs={lhs} rhs={rhs} k={k}")
    return Verdict(True, checked=checked)


def seed_bound(problem: CaratheodoryProblem, b1: float | None = None,
               N: int = 1024) -> tuple[float, float]:
    """(lam0, C0) with w(lam0, const x0, T const x0) <= C0 on [a, b1].

    lam0 = L (b1 - a) + 1 + lam2 and
    C0 = (b1 - a) / lam0 * phi(L |x0 - y0|) + lam2 / lam0 * C2, where
    C2 = int_a^b1 phi(|f(t, y0)| / lam2) dt on the same N-cell grid.
    """
    b1 = problem.b if b1 is None else b1
    lam2, c2 = problem.rhs_bound(N, b1)
    length = b1 - problem.a
    lam0 = problem.L * length + 1.0 + lam2
    c0 = (length / lam0 * float(problem.phi(problem.L * abs(problem.x0 - problem.anchor)))
          + lam2 / lam0 * c2)
    return lam0, c0


def sample_anchored_pairs(problem: CaratheodoryProblem, count: int, N: int,
                          seed: int = 0, amplitude: float = 0.5) -> list[tuple[ACFunction, ACFunction]]:
    """Random pairs x, y with x(a) = y(a) = x0 on the problem grid.

    Each function is x0 plus a random combination of a ramp, a sine and a
    rescaled t (1 - log t) profile, which has a log-singular derivative at a.
    """
    rng = np.random.default_rng(seed)
    s = np.linspace(0.0, 1.0, N + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        singular = np.where(s > 0, s * (1.0 - np.log(np.where(s > 0, s, 1.0))), 0.0)
    shapes = np.stack([s, np.sin(math.pi * s), singular])

    def draw() -> ACFunction:
        c = rng.uniform(-amplitude, amplitude, 3)
        return ACFunction.from_values(problem.a, problem.b, problem.x0 + c @ shapes)

    return [(draw(), draw()) for _ in range(count)]


# ---------------------------------------------------------------- solver

@dataclass
class Segment:
    a: float
    b: float
    solution: ACFunction
    trace: FixedPointTrace


@dataclass
class SegmentedSolution:
    problem: CaratheodoryProblem
    segments: list[Segment]

    @property
    def knots(self) -> list[float]:
        return [seg.solution.x0 for seg in self.segments] + [float(self.segments[-1].solution.values[-1])]

    def nodes(self) -> np.ndarray:
        parts = [self.segments[0].solution.nodes[:1]] + [seg.solution.nodes[1:] for seg in self.segments]
        return np.concatenate(parts)

    def values(self) -> np.ndarray:
        parts = [self.segments[0].solution.values[:1]] + [seg.solution.values[1:] for seg in self.segments]
        return np.concatenate(parts)

    def residual(self) -> float:
        """max_i |x(t_i) - x0 - cumulative midpoint quadrature of f(s, x(s))|."""
        p = self.problem
        increments = []
        for seg in self.segments:
            sol = seg.solution
            increments.append(np.asarray(p.f(sol.midpoints, sol.mid_values), float) * sol.h)
        integral = np.concatenate([[0.0], np.cumsum(np.concatenate(increments))])
        return float(np.max(np.abs(self.values() - p.x0 - integral)))

    def max_error(self) -> float:
        if self.problem.exact is None:
            raise ValueError(f"problem {self.problem.name!r} has no exact solution")
        t = self.nodes()
        return float(np.max(np.abs(self.values() - self.problem.exact(t))))

    def iterations(self) -> list[int]:
        return [seg.trace.iterations for seg in self.segments]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "x"])
        for t, v in zip(self.nodes(), self.values()):
            writer.writerow([repr(float(t)), repr(float(v))])
        return buf.getvalue()

    def traces_dict(self) -> dict:
        return {"schema": 1, "problem": self.problem.name,
                "segments": [{"index": i, "a": seg.a, "b": seg.b, "trace": seg.trace.to_dict()}
                             for i, seg in enumerate(self.segments)]}

    def traces_json(self) -> str:
        return json.dumps(self.traces_dict(), sort_keys=True)


def segment_edges(problem: CaratheodoryProblem, safety: float) -> np.ndarray:
    """Segments of length safety / L from a, with a shorter last one ending at b."""
    if not 0.0 < safety < 1.0:
        raise ValueError("safety must lie in (0, 1)")
    if problem.L == 0:
        return np.array([problem.a, problem.b])
    step = safety / problem.L
    edges = [problem.a]
    while problem.b - edges[-1] > step * (1 + 1e-12):
        edges.append(edges[-1] + step)
    edges.append(problem.b)
    return np.array(edges)


def solve_ivp(problem: CaratheodoryProblem, eps: float = 1e-10, N: int = 2048,
              safety: float = 0.5, max_iter: int = 500) -> SegmentedSolution:
    """Solve segment by segment with Picard iteration on the GV modular.

    Each segment has contraction factor k = L * length <= safety and uses
    lambda0 = 1, the constant seed at the segment's initial value, and the
    tolerance eps * length so that node residuals add up to at most
    eps * (b - a).  With L = 0 the operator is constant and k = safety is a
    nominal value.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    m = problem.modular()
    edges = segment_edges(problem, safety)
    segments: list[Segment] = []
    start = problem.x0
    for i, (s, e) in enumerate(zip(edges[:-1], edges[1:])):
        sub = replace(problem, a=float(s), b=float(e), x0=start)
        k = problem.L * (e - s) if problem.L > 0 else safety
        spec = ContractionSpec(k, 1.0)
        try:
            trace = picard_solve(m, lambda x, sub=sub: integral_operator(sub, x),
                                 ACFunction.constant(s, e, start, N), spec, eps * (e - s), max_iter)
        except ModularError as exc:
            raise SegmentFailure(i, str(exc)) from exc
        if trace.verdict != "converged":
            raise SegmentFailure(i, f"picard iteration ended with verdict {trace.verdict}", trace)
        segments.append(Segment(float(s), float(e), trace.fixed_point, trace))
        start = float(trace.fixed_point.values[-1])
    return SegmentedSolution(problem, segments)


# ---------------------------------------------------------------- registry

def _logistic(t, x):
    c = np.clip(x, 0.0, 1.0)
    return c * (1.0 - c)


def make_problem(name: str, T: float | None = None, phi: PhiFunction = EXP_MINUS_ONE) -> CaratheodoryProblem:
    """Registry problems; ``T`` replaces the right end of the default interval."""
    if name == "decay":
        p = CaratheodoryProblem(lambda t, x: -x, 1.0, phi, 0.0, 1.0, 1.0, name="decay",
                                exact=lambda t: np.exp(-t))
    elif name == "constant":
        p = CaratheodoryProblem(lambda t, x: np.ones_like(x), 0.0, phi, 0.0, 1.0, 0.0,
                                name="constant", exact=lambda t: t)
    elif name == "cosine":
        p = CaratheodoryProblem(lambda t, x: np.cos(t), 0.0, phi, 0.0, 2.0, 0.0, name="cosine",
                                exact=np.sin)
    elif name == "logistic":
        # the clipped right-hand side is 1-Lipschitz on all of R; it agrees
        # with x(1 - x) on the box [0, 1], where the solution stays
        p = CaratheodoryProblem(_logistic, 1.0, phi, 0.0, 1.0, 0.5, name="logistic",
                                exact=lambda t: 1.0 / (1.0 + np.exp(-t)), state_box=(-1.0, 2.0))
    else:
        raise ValueError(f"unknown problem {name!r}; known: {list(PROBLEMS)}")
    return p if T is None else replace(p, b=float(T))


PROBLEMS = ("decay", "constant", "cosine", "logistic")
