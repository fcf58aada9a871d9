"""Directed-rounding scalar arithmetic on IEEE doubles.

Every ``*_down`` result is <= the exact real value of the operation and
every ``*_up`` result is >= it.  Exact results are returned unchanged, so
hand-checkable identities such as [3,5]/[8,12] = [1/4, 5/8] survive; only
inexact operations widen, and then by exactly one ulp.

Exactness is decided without rounding-mode switches:

* add/sub use the TwoSum error term (exact in IEEE arithmetic),
* mul/div/sqrt compare against the exact rational value (``fractions``),
  which the compiled backend replaces with an ``fma`` residual test,
* exp/sin/cos trust the platform libm to ~1 ulp and widen by two ulps,
  with exact anchors at x = 0.

Infinities pass through (they are exact in the extended reals); an
overflowed finite operation is clamped to +-DBL_MAX on the inward side.
"""

import math
import sys
from fractions import Fraction

INF = math.inf
MAX = sys.float_info.max
SAFE_MIN = 1e-300  # below this, residual-based exactness tests are skipped

PI_LO = math.pi  # fl(pi) < pi
PI_HI = math.nextafter(math.pi, INF)

_LIBM_ULPS = 2  # safety margin on exp/sin/cos endpoint values


def next_down(x: float) -> float:
    return math.nextafter(x, -INF)


def next_up(x: float) -> float:
    return math.nextafter(x, INF)


def _twosum_err(a: float, b: float, s: float) -> float:
    # Knuth TwoSum: exact error of the rounded sum, any magnitude ordering.
    bv = s - a
    av = s - bv
    return (a - av) + (b - bv)


def add_down(a: float, b: float) -> float:
    s = a + b
    if not math.isfinite(s):
        if s == INF and math.isfinite(a) and math.isfinite(b):
            return MAX  # overflow: the exact sum still exceeds MAX
        return s  # genuine +-inf (or nan; scrubbed by interval ops)
    e = _twosum_err(a, b, s)
    return s if e >= 0.0 else next_down(s)


def add_up(a: float, b: float) -> float:
    s = a + b
    if not math.isfinite(s):
        if s == -INF and math.isfinite(a) and math.isfinite(b):
            return -MAX
        return s
    e = _twosum_err(a, b, s)
    return s if e <= 0.0 else next_up(s)


def sub_down(a: float, b: float) -> float:
    return add_down(a, -b)


def sub_up(a: float, b: float) -> float:
    return add_up(a, -b)


def mul_down(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0  # also covers 0 * inf, which is 0 for attained bounds
    p = a * b
    if not math.isfinite(p):
        if p == INF and math.isfinite(a) and math.isfinite(b):
            return MAX
        return p
    if abs(p) < SAFE_MIN:
        return next_down(p)  # subnormal: error term unreliable, widen
    exact = Fraction(a) * Fraction(b)
    return p if exact >= p else next_down(p)


def mul_up(a: float, b: float) -> float:
    if a == 0.0 or b == 0.0:
        return 0.0
    p = a * b
    if not math.isfinite(p):
        if p == -INF and math.isfinite(a) and math.isfinite(b):
            return -MAX
        return p
    if abs(p) < SAFE_MIN:
        return next_up(p)
    exact = Fraction(a) * Fraction(b)
    return p if exact <= p else next_up(p)


def div_down(a: float, b: float) -> float:
    # b must not be 0; interval division handles 0-containing denominators.
    if a == 0.0:
        return 0.0
    if math.isinf(b):
        return a / b  # +-0, a sound closed bound for the limit
    if math.isinf(a):
        return INF if (a > 0) == (b > 0) else -INF
    q = a / b
    if not math.isfinite(q):
        if q == INF:
            return MAX
        return q
    if abs(q) < SAFE_MIN or abs(a) < SAFE_MIN:
        return next_down(q)
    r = Fraction(a) - Fraction(q) * Fraction(b)  # sign of a - q*b
    if r == 0:
        return q
    # true quotient > q  iff  (a - q b) / b > 0
    return q if (r > 0) == (b > 0) else next_down(q)


def div_up(a: float, b: float) -> float:
    if a == 0.0:
        return 0.0
    if math.isinf(b):
        return a / b
    if math.isinf(a):
        return INF if (a > 0) == (b > 0) else -INF
    q = a / b
    if not math.isfinite(q):
        if q == -INF:
            return -MAX
        return q
    if abs(q) < SAFE_MIN or abs(a) < SAFE_MIN:
        return next_up(q)
    r = Fraction(a) - Fraction(q) * Fraction(b)
    if r == 0:
        return q
    return q if (r > 0) != (b > 0) else next_up(q)


def sqrt_down(a: float) -> float:
    # a >= 0 (interval op clamps the domain first).
    if a == 0.0:
        return 0.0
    if a == INF:
        return INF
    s = math.sqrt(a)
    if s < SAFE_MIN:
        return next_down(s)
    r = Fraction(s) * Fraction(s) - Fraction(a)
    if r == 0:
        return s
    return next_down(s) if r > 0 else s


def sqrt_up(a: float) -> float:
    if a == 0.0:
        return 0.0
    if a == INF:
        return INF
    s = math.sqrt(a)
    if s < SAFE_MIN:
        return next_up(s)
    r = Fraction(s) * Fraction(s) - Fraction(a)
    if r == 0:
        return s
    return next_up(s) if r < 0 else s


def exp_down(x: float) -> float:
    if x == 0.0:
        return 1.0
    if x == -INF:
        return 0.0
    if x == INF:
        return MAX
    v = math.exp(x)
    if math.isinf(v):
        return MAX
    for _ in range(_LIBM_ULPS):
        v = next_down(v)
    return v if v > 0.0 else 0.0  # exp is positive


def exp_up(x: float) -> float:
    if x == 0.0:
        return 1.0
    if x == -INF:
        return 0.0
    if x == INF:
        return INF
    v = math.exp(x)
    if math.isinf(v):
        return INF
    for _ in range(_LIBM_ULPS):
        v = next_up(v)
    return v


def sin_down(x: float) -> float:
    if x == 0.0:
        return 0.0
    v = math.sin(x)
    for _ in range(_LIBM_ULPS):
        v = next_down(v)
    return v if v > -1.0 else -1.0


def sin_up(x: float) -> float:
    if x == 0.0:
        return 0.0
    v = math.sin(x)
    for _ in range(_LIBM_ULPS):
        v = next_up(v)
    return v if v < 1.0 else 1.0


def cos_down(x: float) -> float:
    if x == 0.0:
        return 1.0
    v = math.cos(x)
    for _ in range(_LIBM_ULPS):
        v = next_down(v)
    return v if v > -1.0 else -1.0


def cos_up(x: float) -> float:
    if x == 0.0:
        return 1.0
    v = math.cos(x)
    for _ in range(_LIBM_ULPS):
        v = next_up(v)
    return v if v < 1.0 else 1.0
