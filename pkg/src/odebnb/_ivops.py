"""Outward-rounded interval operations on raw (lo, hi) float pairs.

This is the single source of truth for interval semantics at the Python
level: the public ``Interval`` class and the pure-Python tape backend both
delegate here, and the compiled backend mirrors these functions in C.

Conventions:

* the empty interval is the canonical pair ``(inf, -inf)``,
* division by an interval containing 0 yields the whole real line,
* ``sqrt`` intersects its argument with [0, inf) first and is empty only
  if the argument lies entirely below 0,
* NaN bounds never escape: they are scrubbed to the enclosing infinity.
"""

import math

from . import _fp
from ._fp import (
    INF,
    PI_HI,
    PI_LO,
    add_down,
    add_up,
    cos_down,
    cos_up,
    div_down,
    div_up,
    exp_down,
    exp_up,
    mul_down,
    mul_up,
    next_down,
    next_up,
    sin_down,
    sin_up,
    sqrt_down,
    sqrt_up,
    sub_down,
    sub_up,
)

EMPTY = (INF, -INF)
WHOLE = (-INF, INF)


def is_empty(lo: float, hi: float) -> bool:
    return lo > hi


def _scrub(lo: float, hi: float):
    if math.isnan(lo):
        lo = -INF
    if math.isnan(hi):
        hi = INF
    return lo, hi


def iadd(alo, ahi, blo, bhi):
    if alo > ahi or blo > bhi:
        return EMPTY
    return _scrub(add_down(alo, blo), add_up(ahi, bhi))


def isub(alo, ahi, blo, bhi):
    if alo > ahi or blo > bhi:
        return EMPTY
    return _scrub(sub_down(alo, bhi), sub_up(ahi, blo))


def ineg(alo, ahi):
    if alo > ahi:
        return EMPTY
    return -ahi, -alo


def imul(alo, ahi, blo, bhi):
    if alo > ahi or blo > bhi:
        return EMPTY
    lo = min(
        mul_down(alo, blo),
        mul_down(alo, bhi),
        mul_down(ahi, blo),
        mul_down(ahi, bhi),
    )
    hi = max(
        mul_up(alo, blo),
        mul_up(alo, bhi),
        mul_up(ahi, blo),
        mul_up(ahi, bhi),
    )
    return _scrub(lo, hi)


def idiv(alo, ahi, blo, bhi):
    if alo > ahi or blo > bhi:
        return EMPTY
    if blo <= 0.0 <= bhi:
        return WHOLE
    if blo > 0.0:
        lo = min(div_down(alo, blo), div_down(alo, bhi))
        hi = max(div_up(ahi, blo), div_up(ahi, bhi))
    else:
        lo = min(div_down(ahi, blo), div_down(ahi, bhi))
        hi = max(div_up(alo, blo), div_up(alo, bhi))
    return _scrub(lo, hi)


def iabs(alo, ahi):
    if alo > ahi:
        return EMPTY
    if alo >= 0.0:
        return alo, ahi
    if ahi <= 0.0:
        return -ahi, -alo
    return 0.0, max(-alo, ahi)


def _thin_pow(v: float, n: int):
    """Bounds of v**n via repeated outward-rounded squaring-free products."""
    lo, hi = v, v
    for _ in range(n - 1):
        lo, hi = imul(lo, hi, v, v)
    return lo, hi


def ipowi(alo, ahi, n: int):
    if alo > ahi:
        return EMPTY
    if n == 0:
        return 1.0, 1.0
    if n == 1:
        return alo, ahi
    if n % 2 == 1:
        return _thin_pow(alo, n)[0], _thin_pow(ahi, n)[1]
    # even powers: hull of the endpoint powers, clamped at 0 when 0 is inside
    if alo >= 0.0:
        return _thin_pow(alo, n)[0], _thin_pow(ahi, n)[1]
    if ahi <= 0.0:
        return _thin_pow(ahi, n)[0], _thin_pow(alo, n)[1]
    return 0.0, max(_thin_pow(alo, n)[1], _thin_pow(ahi, n)[1])


def isqrt(alo, ahi):
    if alo > ahi:
        return EMPTY
    if ahi < 0.0:
        return EMPTY
    lo = alo if alo > 0.0 else 0.0
    return sqrt_down(lo), sqrt_up(ahi)


def iexp(alo, ahi):
    if alo > ahi:
        return EMPTY
    return exp_down(alo), exp_up(ahi)


def _hits_extremum(alo, ahi, frac: int):
    """Conservatively: does [alo, ahi] possibly contain frac*(pi/2) + 2*pi*k?

    frac in {-1, 0, 1, 2}; callers guarantee a finite window narrower than
    2*pi, so only a handful of k values need checking.
    """
    two_pi_lo = 2.0 * PI_LO
    two_pi_hi = 2.0 * PI_HI
    if frac == 0:
        f_lo = f_hi = 0.0
    elif frac == 1:
        f_lo, f_hi = 0.5 * PI_LO, 0.5 * PI_HI
    elif frac == -1:
        f_lo, f_hi = -0.5 * PI_HI, -0.5 * PI_LO
    else:  # frac == 2
        f_lo, f_hi = PI_LO, PI_HI
    k0 = int(math.floor(alo / two_pi_hi)) - 1
    k1 = int(math.ceil(ahi / two_pi_lo)) + 1
    for k in range(k0, k1 + 1):
        kf = float(k)
        if kf >= 0.0:
            c_lo = add_down(f_lo, mul_down(two_pi_lo, kf))
            c_hi = add_up(f_hi, mul_up(two_pi_hi, kf))
        else:
            c_lo = add_down(f_lo, mul_down(two_pi_hi, kf))
            c_hi = add_up(f_hi, mul_up(two_pi_lo, kf))
        if c_hi >= alo and c_lo <= ahi:
            return True
    return False


def isin(alo, ahi):
    if alo > ahi:
        return EMPTY
    if ahi - alo >= 2.0 * PI_LO or max(abs(alo), abs(ahi)) > 1e15:
        return -1.0, 1.0
    lo = min(sin_down(alo), sin_down(ahi))
    hi = max(sin_up(alo), sin_up(ahi))
    if _hits_extremum(alo, ahi, 1):
        hi = 1.0
    if _hits_extremum(alo, ahi, -1):
        lo = -1.0
    return lo, hi


def icos(alo, ahi):
    if alo > ahi:
        return EMPTY
    if ahi - alo >= 2.0 * PI_LO or max(abs(alo), abs(ahi)) > 1e15:
        return -1.0, 1.0
    lo = min(cos_down(alo), cos_down(ahi))
    hi = max(cos_up(alo), cos_up(ahi))
    if _hits_extremum(alo, ahi, 0):
        hi = 1.0
    if _hits_extremum(alo, ahi, 2):
        lo = -1.0
    return lo, hi


def ihull(alo, ahi, blo, bhi):
    if alo > ahi:
        return blo, bhi
    if blo > bhi:
        return alo, ahi
    return min(alo, blo), max(ahi, bhi)


def iintersect(alo, ahi, blo, bhi):
    lo = max(alo, blo)
    hi = min(ahi, bhi)
    if lo > hi:
        return EMPTY
    return lo, hi


def iwidth(alo, ahi) -> float:
    if alo > ahi:
        return 0.0
    return sub_up(ahi, alo)


def imag(alo, ahi) -> float:
    """Interval magnitude: max(|lo|, |hi|)."""
    return max(abs(alo), abs(ahi))


def idiv_int(alo, ahi, n: int):
    """Divide by a positive machine integer (used by Taylor recurrences)."""
    nf = float(n)
    return idiv(alo, ahi, nf, nf)


def imul_int(alo, ahi, n: int):
    nf = float(n)
    return imul(alo, ahi, nf, nf)
