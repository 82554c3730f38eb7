"""Shared sample generators for the test suite."""
from __future__ import annotations

import math

import numpy as np

from modmetric import ACFunction, ModularEvaluator, canonical_modular, euclidean, gv_modular
from modmetric.phi_functions import EXP_MINUS_ONE, power


def power_velocity(p: float) -> ModularEvaluator:
    """w = d / lam**p: a modular for p >= 0, convex for p >= 1."""
    return ModularEvaluator(lambda lam, x, y: euclidean(x, y) / lam ** p,
                            claims_convex=p >= 1, claims_strict=True, claims_finite=True,
                            name=f"power_velocity({p:g})")


def random_point(rng, dim: int = 2) -> tuple:
    return tuple(float(v) for v in rng.uniform(-3.0, 3.0, dim))


def random_function(rng, N: int = 64) -> ACFunction:
    s = np.linspace(0.0, 1.0, N + 1)
    c = rng.uniform(-1.0, 1.0, 3)
    vals = c[0] * s + c[1] * np.sin(math.pi * s) + c[2] * s ** 2
    return ACFunction.from_values(0.0, 1.0, vals)


def random_modular(rng, convex_only: bool = False):
    """(modular, point factory) drawn from a mix of canonical, power and GV modulars."""
    kinds = ["velocity", "threshold", "power", "gv_exp", "gv_pow2"]
    if not convex_only:
        kinds += ["constant", "power_low"]
    kind = kinds[rng.integers(len(kinds))]
    if kind in ("velocity", "threshold", "constant"):
        return canonical_modular(euclidean, kind), random_point
    if kind == "power":
        return power_velocity(float(rng.uniform(1.0, 3.0))), random_point
    if kind == "power_low":
        return power_velocity(float(rng.uniform(0.0, 1.0))), random_point
    phi = EXP_MINUS_ONE if kind == "gv_exp" else power(2.0)
    return gv_modular(phi, extrapolate=False), random_function


def log_uniform(rng, lo: float = 0.05, hi: float = 20.0) -> float:
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
