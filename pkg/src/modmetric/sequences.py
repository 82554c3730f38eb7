"""Finite-resolution diagnostics for modular convergence, Cauchy sequences and Delta_2.

Limits cannot be decided from finitely many terms, so every verdict here is
parameterised by an explicit tolerance ``eps``, a ``tail`` window and a
lambda grid, and all three are echoed back in the results.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .extreal import SLACK
from .modular_core import CapExceeded, ModularEvaluator, Point, Verdict, metric_dw_star


@dataclass(frozen=True)
class LambdaProfile:
    """rows[n, j] = w(lambdas[j], seq[n], x)."""

    lambdas: tuple[float, ...]
    rows: np.ndarray

    def column(self, lam: float) -> np.ndarray:
        return self.rows[:, self.lambdas.index(lam)]

    def monotone_rows(self) -> bool:
        r = self.rows
        return bool(np.all(r[:, 1:] <= r[:, :-1] * (1 + SLACK) + SLACK))

    def to_csv(self, index: Sequence | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n"] + [f"lambda={lam:g}" for lam in self.lambdas])
        idx = range(1, len(self.rows) + 1) if index is None else index
        for n, row in zip(idx, self.rows):
            writer.writerow([n] + ["inf" if math.isinf(v) else repr(float(v)) for v in row])
        return buf.getvalue()


def lambda_profile(m: ModularEvaluator, seq: Sequence[Point], x: Point,
                   lambdas: Sequence[float]) -> LambdaProfile:
    if len(seq) == 0:
        raise ValueError("sequence must be nonempty")
    lambdas = tuple(float(v) for v in lambdas)
    rows = np.array([[m(lam, xn, x) for lam in lambdas] for xn in seq], dtype=float)
    return LambdaProfile(lambdas, rows)


def tends_to_zero(column: Sequence[float], eps: float, tail: int) -> bool:
    """Last value <= eps and the last ``tail`` values nonincreasing."""
    col = np.asarray(column, dtype=float)
    window = col[-max(tail, 1):]
    if not np.isfinite(window).all():
        return False
    steady = np.all(window[1:] <= window[:-1] * (1 + 1e-9) + SLACK)
    return bool(window[-1] <= eps and steady)


def modular_cauchy_verdict(m: ModularEvaluator, seq: Sequence[Point], lam: float,
                           eps: float, tail: int) -> Verdict:
    """max of w_lam(x_n, x_m) over pairs in the last ``tail`` terms is <= eps."""
    if not 1 <= tail <= len(seq):
        raise ValueError("tail must be between 1 and len(seq)")
    start = len(seq) - tail
    worst, witness = 0.0, None
    checked = 0
    for i, j in itertools.combinations(range(start, len(seq)), 2):
        v = m(lam, seq[i], seq[j])
        checked += 1
        if v > worst:
            worst, witness = v, (i, j)
    ok = worst <= eps
    return Verdict(ok, witness=None if ok else witness, value=worst, checked=checked,
                   note=f"lambda={lam:g} eps={eps:g} tail={tail}")


@dataclass(frozen=True)
class Delta2Probe:
    premise_holds: bool
    conclusion_holds: bool
    lam0: float
    eps: float
    tail: int

    @property
    def violated(self) -> bool:
        """The sampled sequence refutes the Delta_2 condition."""
        return self.premise_holds and not self.conclusion_holds


def delta2_probe(m: ModularEvaluator, seq: Sequence[Point], x: Point, lam0: float,
                 eps: float, tail: int) -> Delta2Probe:
    """Compare tail convergence of w(x_n, x) at lam0 and at lam0 / 2."""
    if not 1 <= tail <= len(seq):
        raise ValueError("tail must be between 1 and len(seq)")
    prof = lambda_profile(m, seq, x, (lam0 / 2.0, lam0))
    return Delta2Probe(premise_holds=tends_to_zero(prof.rows[:, 1], eps, tail),
                       conclusion_holds=tends_to_zero(prof.rows[:, 0], eps, tail),
                       lam0=lam0, eps=eps, tail=tail)


@dataclass(frozen=True)
class ConvergenceReport:
    metric_converges: bool
    modular_converges: bool
    all_lambda_converges: bool
    metric_tail: tuple[float, ...]
    converging_lambdas: tuple[float, ...]

    @property
    def consistent(self) -> bool:
        return self.metric_converges == self.all_lambda_converges


def metric_vs_modular_convergence(m: ModularEvaluator, seq: Sequence[Point], x: Point,
                                  lambdas: Sequence[float], tol: float = 1e-9,
                                  eps: float = 0.1, tail: int = 3,
                                  lambda_cap: float = 1e3) -> ConvergenceReport:
    """Three views of x_n -> x: in d_w*, at some lambda, at every sampled lambda.

    For a convex modular the first and the third coincide; the second is
    strictly weaker unless the modular satisfies Delta_2.
    """
    if not 1 <= tail <= len(seq):
        raise ValueError("tail must be between 1 and len(seq)")
    dists = []
    for xn in seq[-tail:]:
        try:
            dists.append(metric_dw_star(m, xn, x, tol=tol, lambda_cap=lambda_cap))
        except CapExceeded:
            dists.append(math.inf)
    prof = lambda_profile(m, seq, x, lambdas)
    conv = [lam for j, lam in enumerate(prof.lambdas) if tends_to_zero(prof.rows[:, j], eps, tail)]
    return ConvergenceReport(
        metric_converges=tends_to_zero(dists, eps, tail),
        modular_converges=bool(conv),
        all_lambda_converges=len(conv) == len(prof.lambdas),
        metric_tail=tuple(dists),
        converging_lambdas=tuple(conv),
    )
