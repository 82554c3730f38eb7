"""Modular contractions and the successive-approximation engine.

A map T is a modular contraction with constants (k, lambda0) when

    w(k * lam, Tx, Ty) <= w(lam, x, y)    for 0 < lam <= lambda0,

with inf <= inf allowed.  Starting from a seed with finite
C = w((1 - k) * lambda0, seed, T seed), the iterates satisfy the a-priori
bound w(lambda0, x_m, x_n) <= k**m * C for all m < n.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .extreal import ExtReal, le, ratio, scale
from .modular_core import (CapExceeded, ModularError, ModularEvaluator, Point, Verdict,
                           metric_dw_star, regularize, same_point)

Map = Callable[[Point], Point]


class InfiniteSeed(ModularError):
    """w((1-k) lambda0, seed, T seed) is infinite: the iteration has no finite bound."""


class InfiniteGap(ModularError):
    """A gap became infinite after a finite seed constant: the hypotheses are broken."""


class MaxIter(ModularError):
    def __init__(self, message: str, trace: "FixedPointTrace"):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class ContractionSpec:
    k: float
    lambda0: float

    def __post_init__(self):
        if not 0.0 < self.k < 1.0:
            raise ValueError(f"contraction factor must lie in (0, 1), got {self.k}")
        if not self.lambda0 > 0.0:
            raise ValueError(f"lambda0 must be positive, got {self.lambda0}")

    @property
    def lambda1(self) -> float:
        return (1.0 - self.k) * self.lambda0


def _grid_in_range(lambda_grid: Sequence[float], spec: ContractionSpec) -> list[float]:
    grid = [float(v) for v in lambda_grid]
    if any(not 0.0 < lam <= spec.lambda0 * (1 + 1e-12) for lam in grid):
        raise ValueError("lambda grid must lie in (0, lambda0]")
    return grid


def _contraction_audit(m, T, pairs, spec, lambda_grid, weight) -> Verdict:
    grid = _grid_in_range(lambda_grid, spec)
    checked = 0
    for x, y in pairs:
        tx, ty = T(x), T(y)
        for lam in grid:
            lhs = m(spec.k * lam, tx, ty)
            rhs = scale(weight, m(lam, x, y))
            checked += 1
            if not le(lhs, rhs):
                return Verdict(False, witness=(lam, x, y), value=lhs, checked=checked,
                               note=f"lhs={lhs} rhs={rhs}")
    return Verdict(True, checked=checked)


def check_modular_contraction(m: ModularEvaluator, T: Map, pairs: Sequence[tuple[Point, Point]],
                              spec: ContractionSpec, lambda_grid: Sequence[float]) -> Verdict:
    """Refute w(k lam, Tx, Ty) <= w(lam, x, y) on the sampled pairs and grid."""
    return _contraction_audit(m, T, pairs, spec, lambda_grid, 1.0)


def check_strong_contraction(m: ModularEvaluator, T: Map, pairs: Sequence[tuple[Point, Point]],
                             spec: ContractionSpec, lambda_grid: Sequence[float]) -> Verdict:
    """Refute w(k lam, Tx, Ty) <= k w(lam, x, y) on the sampled pairs and grid."""
    return _contraction_audit(m, T, pairs, spec, lambda_grid, spec.k)


def limsup_ratio_probe(m: ModularEvaluator, T: Map, pairs: Sequence[tuple[Point, Point]],
                       h: float, lambda_schedule: Sequence[float], tail: int | None = None) -> float:
    """Estimate limsup_{lam -> 0} sup_{x != y} w(h lam, Tx, Ty) / w(lam, x, y).

    inf/inf counts as 1.  The estimate is the largest sup-ratio over the
    last ``tail`` schedule entries (default: the second half).  A value
    <= 1 is consistent with T being a modular contraction for any k in (h, 1).
    """
    if not 0.0 < h < 1.0:
        raise ValueError("h must lie in (0, 1)")
    sched = [float(v) for v in lambda_schedule]
    if any(b >= a for a, b in zip(sched, sched[1:])):
        raise ValueError("lambda schedule must be strictly decreasing")
    pairs = [(x, y) for x, y in pairs if not same_point(x, y)]
    if not pairs:
        raise ValueError("need at least one pair with x != y")
    tail = tail or max(1, (len(sched) + 1) // 2)
    sups = []
    for lam in sched[-tail:]:
        sups.append(max(ratio(m(h * lam, T(x), T(y)), m(lam, x, y)) for x, y in pairs))
    return max(sups)


@dataclass(frozen=True)
class LipschitzCheck:
    agree: bool
    metric_side: tuple[bool, ...]
    modular_side: tuple[bool, ...]
    witness: tuple | None = None

    def __bool__(self) -> bool:
        return self.agree


def lipschitz_equivalence_check(m: ModularEvaluator, T: Map, pairs: Sequence[tuple[Point, Point]],
                                k: float, tol: float = 1e-9, delta: float = 1e-9,
                                rel_grid: Sequence[float] | None = None,
                                lambda_cap: float = 1e6) -> LipschitzCheck:
    """Evaluate both sides of the d_w*-Lipschitz characterisation for convex m.

    metric side: d*(Tx, Ty) <= k d*(x, y) (+ 2 tol).
    modular side: w(k lam + 0, Tx, Ty) <= 1 for every sampled lam > d*(x, y),
    using the right regularization with ``delta`` as the one-sided limit and
    lam = d*(x, y) * (1 + s) for s in ``rel_grid``.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    rel = list(rel_grid) if rel_grid is not None else [2.0 ** -j for j in range(1, 31)] + [1.0, 3.0, 15.0]
    right = regularize(m, "right", delta)
    metric_side, modular_side = [], []
    witness = None
    for x, y in pairs:
        tx, ty = T(x), T(y)
        try:
            d_xy = metric_dw_star(m, x, y, tol=tol, lambda_cap=lambda_cap)
            d_t = metric_dw_star(m, tx, ty, tol=tol, lambda_cap=lambda_cap)
        except CapExceeded as exc:
            raise ValueError("pairs must lie at finite d_w* distance") from exc
        met = d_t <= k * d_xy + 2 * tol
        if same_point(x, y):
            mod = True
        else:
            base = max(d_xy, tol)
            mod = all(le(right(k * base * (1 + s), tx, ty), 1.0) for s in rel)
        metric_side.append(met)
        modular_side.append(mod)
        if met != mod and witness is None:
            witness = (x, y, d_xy, d_t)
    return LipschitzCheck(witness is None, tuple(metric_side), tuple(modular_side), witness)


# ---------------------------------------------------------------- iteration

@dataclass
class FixedPointTrace:
    spec: ContractionSpec
    eps: float
    C: ExtReal
    iterates: list[Any] = field(default_factory=list)
    gaps: list[ExtReal] = field(default_factory=list)
    apriori: list[float] = field(default_factory=list)
    verdict: str = "max_iter"
    fixed_point: Any = None
    residual: ExtReal | None = None

    @property
    def iterations(self) -> int:
        return len(self.gaps)

    def bound_violations(self, slack: float = 1e-9) -> list[int]:
        """Steps where the recorded gap exceeds k^m C."""
        return [i for i, (g, b) in enumerate(zip(self.gaps, self.apriori))
                if not le(g, b, slack)]

    def iteration_budget(self) -> int | None:
        """Smallest n with k^n C <= eps, known before iterating."""
        if self.C <= self.eps:
            return 0
        if math.isinf(self.C):
            return None
        return math.ceil(math.log(self.eps / self.C) / math.log(self.spec.k))

    def to_dict(self) -> dict:
        def num(v):
            return "inf" if v is not None and math.isinf(v) else v
        return {
            "schema": 1,
            "k": self.spec.k,
            "lambda0": self.spec.lambda0,
            "eps": self.eps,
            "C": num(self.C),
            "verdict": self.verdict,
            "residual": num(self.residual),
            "steps": [{"iteration": i, "gap": num(g), "apriori": b}
                      for i, (g, b) in enumerate(zip(self.gaps, self.apriori))],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _diverging(gaps: list[float]) -> bool:
    if len(gaps) < 6:
        return False
    w = gaps[-6:]
    return all(b > a for a, b in zip(w, w[1:])) and w[-1] > 2.0 * w[0]


def picard_solve(m: ModularEvaluator, T: Map, seed: Point, spec: ContractionSpec,
                 eps: float, max_iter: int = 500, raise_on_max_iter: bool = False) -> FixedPointTrace:
    """Iterate x_{n+1} = T x_n from ``seed`` and record modular gaps.

    Stops once gap_n = w(lambda0, x_n, T x_n) <= eps or the a-priori bound
    k^n C <= eps, returning x_n as the fixed point.  A run whose gaps grow
    over six consecutive steps by more than a factor 2 is ``diverged``.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    C = m(spec.lambda1, seed, T(seed))
    if math.isinf(C):
        raise InfiniteSeed(f"w({spec.lambda1:g}, seed, T seed) is infinite")
    trace = FixedPointTrace(spec=spec, eps=eps, C=C)
    x = seed
    for n in range(max_iter):
        tx = T(x)
        gap = m(spec.lambda0, x, tx)
        bound = C * spec.k ** n
        trace.iterates.append(x)
        trace.gaps.append(gap)
        trace.apriori.append(bound)
        if math.isinf(gap):
            raise InfiniteGap(f"gap became infinite at iteration {n}")
        if gap <= eps or bound <= eps:
            trace.verdict = "converged"
            trace.fixed_point = x
            trace.residual = gap
            return trace
        if _diverging(trace.gaps):
            trace.verdict = "diverged"
            return trace
        x = tx
    trace.verdict = "max_iter"
    if raise_on_max_iter:
        raise MaxIter(f"no convergence within {max_iter} iterations", trace)
    return trace


def chain_inequality_sides(m: ModularEvaluator, lambdas: Sequence[float],
                           points: Sequence[Point]) -> tuple[float, float]:
    """(sum lam) w_{sum lam}(x_1, x_{N+1}) and sum lam_i w_{lam_i}(x_i, x_{i+1})."""
    if len(points) != len(lambdas) + 1:
        raise ValueError("need one more point than lambdas")
    total = float(np.sum(lambdas))
    lhs = scale(total, m(total, points[0], points[-1]))
    rhs = sum(scale(lam, m(lam, p, q)) for lam, p, q in zip(lambdas, points, points[1:]))
    return lhs, rhs
