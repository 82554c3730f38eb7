"""Metric modulars: evaluators, axiom audits, derived metrics and transforms.

A modular is a one-parameter family ``w(lam, x, y)`` with values in [0, inf],
read as the average velocity needed to travel from ``x`` to ``y`` in time
``lam``.  Every evaluator here is immutable; the universe of points is
implicit and only equality between points is required.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .extreal import INFINITY, ExtReal, ext, le, scale

Point = Any
Metric = Callable[[Point, Point], float]

DEFAULT_TOL = 1e-9
DEFAULT_CAP = 1e9


class ModularError(Exception):
    pass


class EmptySample(ModularError):
    pass


class CapExceeded(ModularError):
    """No lambda up to the cap satisfies the defining predicate of a metric."""


class InvalidGauge(ModularError):
    pass


def same_point(x: Point, y: Point) -> bool:
    if x is y:
        return True
    eq = x == y
    if isinstance(eq, np.ndarray):
        return bool(eq.all())
    return bool(eq)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a refutation-style check.

    ``passed`` means no violation was found on the sample; ``witness`` holds
    the first offending tuple when it failed.
    """

    passed: bool
    witness: tuple | None = None
    value: float | None = None
    checked: int = 0
    note: str = ""

    def __bool__(self) -> bool:
        return self.passed


@dataclass(frozen=True)
class ModularEvaluator:
    fn: Callable[[float, Point, Point], ExtReal]
    claims_convex: bool = False
    claims_strict: bool = False
    claims_finite: bool = False
    base_point: Point = None
    name: str = "modular"

    def __call__(self, lam: float, x: Point, y: Point) -> ExtReal:
        if not lam > 0:
            raise ValueError(f"lambda must be positive, got {lam}")
        return ext(self.fn(lam, x, y))


def canonical_modular(metric: Metric, kind: str, base_point: Point = None) -> ModularEvaluator:
    """Build one of the three modulars a metric space carries naturally.

    ``constant``: w = d (nonconvex); ``velocity``: w = d / lam (convex);
    ``threshold``: w = inf for lam <= d and 0 beyond.
    """
    if kind == "constant":
        return ModularEvaluator(lambda lam, x, y: metric(x, y), claims_convex=False,
                                claims_strict=True, claims_finite=True,
                                base_point=base_point, name="constant")
    if kind == "velocity":
        return ModularEvaluator(lambda lam, x, y: metric(x, y) / lam, claims_convex=True,
                                claims_strict=True, claims_finite=True,
                                base_point=base_point, name="velocity")
    if kind == "threshold":
        # convex as well: lam+mu <= d(x,y) forces lam <= d(x,z) or mu <= d(z,y)
        return ModularEvaluator(lambda lam, x, y: INFINITY if lam <= metric(x, y) else 0.0,
                                claims_convex=True, claims_strict=False, claims_finite=False,
                                base_point=base_point, name="threshold")
    raise ValueError(f"unknown modular kind {kind!r}")


def euclidean(x: Sequence[float], y: Sequence[float]) -> float:
    return math.dist(np.atleast_1d(x), np.atleast_1d(y))


# ---------------------------------------------------------------- axioms

AXIOMS = ("i'", "ii", "monotone", "i", "i_s", "iii", "iv")

_MODE_AXIOMS = {
    "pseudomodular": ("i'", "ii", "monotone", "iii"),
    "modular": ("i'", "ii", "monotone", "i", "iii"),
    "strict": ("i'", "ii", "monotone", "i_s", "iii"),
    "convex": ("i'", "ii", "monotone", "iv"),
}


@dataclass(frozen=True)
class Violation:
    axiom: str
    witness: tuple
    lhs: ExtReal
    rhs: ExtReal


@dataclass
class AxiomReport:
    mode: str
    checked: int = 0
    violations: list[Violation] = field(default_factory=list)
    verdicts: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v != "fail" for v in self.verdicts.values())

    def failed(self) -> list[str]:
        return [a for a, v in self.verdicts.items() if v == "fail"]

    def to_dict(self) -> dict:
        def num(v):
            return "inf" if math.isinf(v) else v
        return {
            "mode": self.mode,
            "checked": self.checked,
            "passed": self.passed,
            "verdicts": dict(self.verdicts),
            "violations": [
                {"axiom": v.axiom, "witness": [repr(p) for p in v.witness],
                 "lhs": num(v.lhs), "rhs": num(v.rhs)}
                for v in self.violations
            ],
        }


def _axiom_sides(m: ModularEvaluator, axiom: str, witness: tuple) -> tuple[ExtReal, ExtReal]:
    if axiom == "i'":
        lam, x = witness
        return m(lam, x, x), 0.0
    if axiom == "ii":
        lam, x, y = witness
        return m(lam, x, y), m(lam, y, x)
    if axiom == "monotone":
        lam1, lam2, x, y = witness
        return m(lam2, x, y), m(lam1, x, y)
    if axiom == "i":
        x, y, lambdas = witness
        return max(m(lam, x, y) for lam in lambdas), 0.0
    if axiom == "i_s":
        lam, x, y = witness
        return m(lam, x, y), 0.0
    if axiom == "iii":
        lam, mu, x, y, z = witness
        return m(lam + mu, x, y), m(lam, x, z) + m(mu, y, z)
    if axiom == "iv":
        lam, mu, x, y, z = witness
        s = lam + mu
        return m(s, x, y), scale(lam / s, m(lam, x, z)) + scale(mu / s, m(mu, y, z))
    raise ValueError(f"unknown axiom {axiom!r}")


def replay(m: ModularEvaluator, violation: Violation) -> bool:
    """Re-evaluate a recorded witness; True when it is still a violation."""
    lhs, rhs = _axiom_sides(m, violation.axiom, violation.witness)
    if violation.axiom in ("i", "i_s"):
        # both encode "a vanishing value where x != y"
        return lhs == 0.0
    return not le(lhs, rhs)


def check_axioms(m: ModularEvaluator, points: Sequence[Point], lambdas: Sequence[float],
                 mode: str = "modular", max_witnesses: int = 5) -> AxiomReport:
    """Audit the modular axioms on every sampled tuple.

    Checks are refutations: a ``pass`` only means no counterexample was found
    among ``points`` and ``lambdas``.  ``vacuous`` marks an axiom with no
    applicable tuple (e.g. strictness on a one-point sample).
    """
    if mode not in _MODE_AXIOMS:
        raise ValueError(f"unknown mode {mode!r}")
    points = list(points)
    lambdas = [float(v) for v in lambdas]
    if not points or not lambdas:
        raise EmptySample("need at least one point and one lambda")
    if any(b < a for a, b in zip(lambdas, lambdas[1:])):
        raise ValueError("lambdas must be sorted ascending")

    report = AxiomReport(mode=mode)
    counts = dict.fromkeys(_MODE_AXIOMS[mode], 0)
    fails: dict[str, int] = {}

    def record(axiom, witness, bad, lhs, rhs):
        counts[axiom] += 1
        report.checked += 1
        if bad:
            fails[axiom] = fails.get(axiom, 0) + 1
            if fails[axiom] <= max_witnesses:
                report.violations.append(Violation(axiom, witness, lhs, rhs))

    wanted = _MODE_AXIOMS[mode]
    distinct = [(x, y) for x, y in itertools.product(points, repeat=2) if not same_point(x, y)]

    if "i'" in wanted:
        for lam, x in itertools.product(lambdas, points):
            lhs, rhs = _axiom_sides(m, "i'", (lam, x))
            record("i'", (lam, x), lhs != 0.0, lhs, rhs)
    if "ii" in wanted:
        for lam, (x, y) in itertools.product(lambdas, distinct):
            lhs, rhs = _axiom_sides(m, "ii", (lam, x, y))
            record("ii", (lam, x, y), not (le(lhs, rhs) and le(rhs, lhs)), lhs, rhs)
    if "monotone" in wanted:
        for (x, y) in distinct:
            for lam1, lam2 in zip(lambdas, lambdas[1:]):
                lhs, rhs = _axiom_sides(m, "monotone", (lam1, lam2, x, y))
                record("monotone", (lam1, lam2, x, y), not le(lhs, rhs), lhs, rhs)
    if "i" in wanted:
        for (x, y) in distinct:
            lhs, rhs = _axiom_sides(m, "i", (x, y, tuple(lambdas)))
            record("i", (x, y, tuple(lambdas)), lhs == 0.0, lhs, rhs)
    if "i_s" in wanted:
        for lam, (x, y) in itertools.product(lambdas, distinct):
            lhs, rhs = _axiom_sides(m, "i_s", (lam, x, y))
            record("i_s", (lam, x, y), lhs == 0.0, lhs, rhs)
    tri = "iv" if "iv" in wanted else "iii"
    for lam, mu in itertools.product(lambdas, repeat=2):
        for x, y, z in itertools.product(points, repeat=3):
            lhs, rhs = _axiom_sides(m, tri, (lam, mu, x, y, z))
            record(tri, (lam, mu, x, y, z), not le(lhs, rhs), lhs, rhs)

    for axiom in wanted:
        if fails.get(axiom):
            report.verdicts[axiom] = "fail"
        elif counts[axiom] == 0:
            report.verdicts[axiom] = "vacuous"
        else:
            report.verdicts[axiom] = "pass"
    return report


# ---------------------------------------------------------------- metrics

def _infimum(pred: Callable[[float], bool], tol: float, lambda_cap: float) -> float:
    """inf{lam > 0 : pred(lam)} for a predicate whose true set is an up-ray."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = 0.0, 1.0
    while not pred(hi):
        if hi >= lambda_cap:
            raise CapExceeded(f"predicate fails for every lambda <= {lambda_cap:g}")
        lo, hi = hi, min(2.0 * hi, lambda_cap)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def metric_kappa(m: ModularEvaluator, kappa: Callable[[float], float], x: Point, y: Point,
                 tol: float = DEFAULT_TOL, lambda_cap: float = DEFAULT_CAP,
                 check_grid: Iterable[float] | None = None) -> float:
    """inf{lam > 0 : w(lam, x, y) <= kappa(lam)} by bracketed bisection.

    ``kappa`` must be superadditive, positive on (0, inf) and vanish at 0+;
    superadditivity is spot-checked on ``check_grid``.
    """
    grid = list(check_grid) if check_grid is not None else list(np.geomspace(1e-3, 1e3, 13))
    for u in grid:
        if not kappa(u) > 0:
            raise InvalidGauge(f"kappa({u}) = {kappa(u)} is not positive")
    for u, v in itertools.product(grid, repeat=2):
        if kappa(u) + kappa(v) > kappa(u + v) * (1 + 1e-12):
            raise InvalidGauge(f"kappa is not superadditive at ({u}, {v})")
    if same_point(x, y):
        return 0.0
    return _infimum(lambda lam: le(m(lam, x, y), kappa(lam)), tol, lambda_cap)


def metric_dw(m: ModularEvaluator, x: Point, y: Point, tol: float = DEFAULT_TOL,
              lambda_cap: float = DEFAULT_CAP) -> float:
    """d_w(x, y) = inf{lam > 0 : w(lam, x, y) <= lam}."""
    if same_point(x, y):
        return 0.0
    return _infimum(lambda lam: le(m(lam, x, y), lam), tol, lambda_cap)


def metric_dw_star(m: ModularEvaluator, x: Point, y: Point, tol: float = DEFAULT_TOL,
                   lambda_cap: float = DEFAULT_CAP) -> float:
    """d_w*(x, y) = inf{lam > 0 : w(lam, x, y) <= 1}.

    A metric only for convex ``m``; for nonconvex modulars the value is
    returned as is, without any triangle-inequality guarantee.
    """
    if same_point(x, y):
        return 0.0
    return _infimum(lambda lam: le(m(lam, x, y), 1.0), tol, lambda_cap)


# ---------------------------------------------------------------- transforms

def convexify(m: ModularEvaluator) -> ModularEvaluator:
    """v(lam) = w(lam) / lam, always a convex modular."""
    fn = m.fn
    return replace(m, fn=lambda lam, x, y: fn(lam, x, y) / lam, claims_convex=True,
                   name=f"convexify({m.name})")


def hat(m: ModularEvaluator) -> ModularEvaluator:
    """lam * w(lam); a modular whenever ``m`` is convex."""
    fn = m.fn
    return replace(m, fn=lambda lam, x, y: scale(lam, fn(lam, x, y)), claims_convex=False,
                   name=f"hat({m.name})")


def regularize(m: ModularEvaluator, side: str, delta: float) -> ModularEvaluator:
    """Finite-resolution stand-in for the one-sided limits w(lam+0), w(lam-0).

    right: w(lam + delta); left: w(max(lam - delta, lam / 2)).  Monotonicity
    in lam gives right <= w <= left exactly; the proxies converge to the
    one-sided limits as delta -> 0.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    fn = m.fn
    if side == "right":
        shifted = lambda lam, x, y: fn(lam + delta, x, y)  # noqa: E731
    elif side == "left":
        shifted = lambda lam, x, y: fn(max(lam - delta, 0.5 * lam), x, y)  # noqa: E731
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return replace(m, fn=shifted, name=f"{m.name}{'+' if side == 'right' else '-'}")


@dataclass(frozen=True)
class Membership:
    member: bool
    witness_lambda: float | None = None

    def __bool__(self) -> bool:
        return self.member


def lambda_ladder(lambda_cap: float = DEFAULT_CAP, start: float = 2.0 ** -20) -> list[float]:
    """Powers of two from ``start`` up to and including ``lambda_cap``."""
    out = []
    lam = start
    while lam < lambda_cap:
        out.append(lam)
        lam *= 2.0
    out.append(float(lambda_cap))
    return out


def in_modular_space(m: ModularEvaluator, x: Point, variant: str = "Xw_star",
                     lambda_cap: float = DEFAULT_CAP, tol: float = 1e-6) -> Membership:
    """Semi-decide membership of ``x`` in X_w or X_w* around ``m.base_point``.

    X_w*: the first ladder lambda with a finite value is the witness.
    X_w: the value must drop to ``tol`` by ``lambda_cap``; the witness is the
    first ladder lambda where it does.  Monotonicity rules out false
    positives; false negatives are possible at finite ``lambda_cap``.
    """
    if variant not in ("Xw", "Xw_star"):
        raise ValueError(f"unknown variant {variant!r}")
    ladder = lambda_ladder(lambda_cap)
    if variant == "Xw_star":
        for lam in ladder:
            if not math.isinf(m(lam, x, m.base_point)):
                return Membership(True, lam)
        return Membership(False)
    if m(lambda_cap, x, m.base_point) > tol:
        return Membership(False)
    for lam in ladder:
        if m(lam, x, m.base_point) <= tol:
            return Membership(True, lam)
    return Membership(True, lambda_cap)
