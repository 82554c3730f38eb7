"""Convex phi-functions with closed-form inverses, and growth-condition probes."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .modular_core import Verdict


@dataclass(frozen=True)
class PhiFunction:
    """A convex phi-function from a fixed family.

    Families: ``power`` with exponent p >= 1 (u**p), ``exp_minus_one``
    (e**u - 1) and ``linear`` (power with p = 1).  ``__call__`` and
    ``inverse`` accept scalars or numpy arrays.
    """

    family: str
    p: float = 1.0

    def __post_init__(self):
        if self.family not in ("power", "exp_minus_one", "linear"):
            raise ValueError(f"unknown phi family {self.family!r}")
        if self.family == "power" and not self.p >= 1.0:
            raise ValueError("power phi-functions need p >= 1 to be convex")
        if self.family == "linear" and self.p != 1.0:
            raise ValueError("linear phi has p = 1")

    @property
    def name(self) -> str:
        if self.family == "power":
            return f"power({self.p:g})"
        return self.family

    def __call__(self, u):
        with np.errstate(over="ignore"):
            if self.family == "exp_minus_one":
                return np.expm1(u)
            if self.p == 1.0:
                return np.asarray(u, dtype=float) * 1.0
            return np.power(u, self.p)

    def inverse(self, v):
        if self.family == "exp_minus_one":
            return np.log1p(v)
        if self.p == 1.0:
            return np.asarray(v, dtype=float) * 1.0
        return np.power(v, 1.0 / self.p)


def power(p: float) -> PhiFunction:
    return PhiFunction("power", float(p))


EXP_MINUS_ONE = PhiFunction("exp_minus_one")
LINEAR = PhiFunction("linear")

REGISTRY = {
    "exp": EXP_MINUS_ONE,
    "exp_minus_one": EXP_MINUS_ONE,
    "linear": LINEAR,
    "power2": power(2.0),
    "power3": power(3.0),
}


def get_phi(name: str) -> PhiFunction:
    """Look up a registry entry; ``power:<p>`` builds an arbitrary power."""
    if name.startswith("power:"):
        return power(float(name.split(":", 1)[1]))
    try:
        return REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown phi {name!r}; known: {sorted(REGISTRY)}") from None


def check_delta2_at_infinity(phi: PhiFunction, K: float, u0: float = 0.0,
                             grid: Sequence[float] | None = None) -> Verdict:
    """Look for u >= u0 on ``grid`` with phi(2u) > K phi(u)."""
    grid = np.geomspace(1e-3, 300.0, 400) if grid is None else np.asarray(grid, float)
    us = grid[grid >= u0]
    lhs = phi(2.0 * us)
    rhs = K * phi(us)
    bad = np.flatnonzero(lhs > rhs * (1 + 1e-12))
    if bad.size:
        u = float(us[bad[0]])
        return Verdict(False, witness=(u,), value=float(lhs[bad[0]] / rhs[bad[0]]), checked=us.size)
    return Verdict(True, checked=us.size)


def check_orlicz_condition(phi: PhiFunction, grid: Sequence[float] | None = None,
                           threshold: float = 100.0) -> Verdict:
    """Probe phi(u)/u -> inf on a log-spaced increasing grid.

    Passes when the ratio is strictly increasing from some knee onwards (at
    least two grid steps before the end) and reaches ``threshold`` at the
    last grid point.  ``value`` reports the ratio there, ``note`` the knee.
    """
    grid = np.geomspace(1e-2, 300.0, 200) if grid is None else np.asarray(grid, float)
    r = phi(grid) / grid
    increasing = np.diff(r) > 0
    knee = len(grid) - 1
    while knee > 0 and increasing[knee - 1]:
        knee -= 1
    ok = knee <= len(grid) - 3 and r[-1] >= threshold
    return Verdict(bool(ok), witness=None if ok else (float(grid[knee]),), value=float(r[-1]),
                   checked=len(grid), note=f"knee at u={grid[knee]:.4g}")


def omega_phi(phi: PhiFunction, u: float) -> float:
    """Modulus of continuity u * phi^{-1}(1/u), extended by 0 at u = 0."""
    if u < 0:
        raise ValueError("u must be nonnegative")
    if u == 0:
        return 0.0
    return float(u * phi.inverse(1.0 / u))


def jensen_gap(phi: PhiFunction, samples: Sequence[float]) -> tuple[float, float]:
    """(phi(mean |s|), mean phi(|s|)); Jensen says the first never exceeds the second."""
    s = np.abs(np.asarray(samples, dtype=float))
    if s.size == 0:
        raise ValueError("samples must be nonempty")
    return float(phi(s.mean())), float(np.mean(phi(s)))
