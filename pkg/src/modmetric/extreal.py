"""Values in [0, inf] with saturating arithmetic.

Modulars take values in the extended half-line.  IEEE-754 already has an exact,
distinguished infinity that saturates under addition and under multiplication
or division by positive finite scalars, and that compares correctly against
every finite threshold, so ``ExtReal`` is a plain ``float`` restricted to
``[0, inf]``.  The helpers here pin down the few places where IEEE semantics
differ from the ones needed (``0 * inf``, ``inf / inf``) and validate inputs.
"""
from __future__ import annotations

import math

ExtReal = float
INFINITY: ExtReal = math.inf

# absolute part of the comparison slack used by every inequality check
SLACK = 1e-12


def ext(value: float) -> ExtReal:
    """Coerce ``value`` into [0, inf], rejecting NaN and negatives."""
    v = float(value)
    if math.isnan(v):
        raise ValueError("NaN is not an extended nonnegative real")
    if v < 0.0:
        if v > -SLACK:
            return 0.0
        raise ValueError(f"negative value {v} is not in [0, inf]")
    return v


def is_inf(value: float) -> bool:
    return value == math.inf


def scale(c: float, value: ExtReal) -> ExtReal:
    """``c * value`` for finite ``c >= 0`` with ``0 * inf = 0``."""
    if c == 0.0:
        return 0.0
    return c * value


def ratio(num: ExtReal, den: ExtReal) -> float:
    """``num / den`` with ``inf/inf = 1``, ``0/0 = 0``, ``x/0 = inf`` for x > 0."""
    if math.isinf(num) and math.isinf(den):
        return 1.0
    if num == 0.0:
        return 0.0
    if den == 0.0:
        return math.inf
    return num / den


def le(lhs: ExtReal, rhs: ExtReal, slack: float = SLACK) -> bool:
    """``lhs <= rhs`` up to a rounding slack; ``inf <= inf`` holds, ``inf <= c`` never."""
    if math.isinf(rhs):
        return True
    if math.isinf(lhs):
        return False
    return lhs <= rhs + slack * max(1.0, abs(rhs))


def fmt(value: ExtReal) -> str:
    return "inf" if math.isinf(value) else repr(float(value))
