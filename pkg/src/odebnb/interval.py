"""Outward-rounded interval arithmetic: the ``Interval`` and ``Box`` types.

An ``Interval`` is a closed, possibly unbounded range [lo, hi] of reals.
Every arithmetic result encloses the exact image of the operation over its
operands (see ``_ivops`` for the rounding model).  The empty interval is an
explicit value, not an exception, so intersection-based filtering composes.

A ``Box`` is a Cartesian product of intervals; its width is the largest
component width, and it is empty as soon as any component is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from . import _ivops as ops


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        lo = float(self.lo)
        hi = float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval bounds must not be NaN")
        if lo > hi and not (lo == math.inf and hi == -math.inf):
            raise ValueError(f"invalid interval bounds [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    # -- constructors ------------------------------------------------------

    @classmethod
    def empty(cls) -> Interval:
        return cls(math.inf, -math.inf)

    @classmethod
    def whole(cls) -> Interval:
        return cls(-math.inf, math.inf)

    @classmethod
    def point(cls, v: float) -> Interval:
        return cls(v, v)

    @classmethod
    def _raw(cls, pair) -> Interval:
        return cls(pair[0], pair[1])

    # -- predicates and measures -------------------------------------------

    @property
    def is_empty(self) -> bool:
        return self.lo > self.hi

    @property
    def is_point(self) -> bool:
        return self.lo == self.hi

    def width(self) -> float:
        """hi - lo, rounded up; 0 for the empty interval."""
        return ops.iwidth(self.lo, self.hi)

    def midpoint(self) -> float:
        if self.is_empty:
            raise ValueError("midpoint of empty interval")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError("midpoint of unbounded interval")
        m = 0.5 * (self.lo + self.hi)
        if not math.isfinite(m):
            m = self.lo + 0.5 * (self.hi - self.lo)
        # guarantee containment even under rounding
        return min(max(m, self.lo), self.hi)

    def magnitude(self) -> float:
        """max(|lo|, |hi|)."""
        if self.is_empty:
            raise ValueError("magnitude of empty interval")
        return ops.imag(self.lo, self.hi)

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    def contains_interval(self, other: Interval) -> bool:
        if other.is_empty:
            return True
        return self.lo <= other.lo and other.hi <= self.hi

    def intersects(self, other: Interval) -> bool:
        if self.is_empty or other.is_empty:
            return False
        return self.lo <= other.hi and other.lo <= self.hi

    # -- arithmetic ----------------------------------------------------------

    @staticmethod
    def _coerce(v) -> Interval:
        if isinstance(v, Interval):
            return v
        return Interval.point(float(v))

    def __add__(self, other) -> Interval:
        o = self._coerce(other)
        return Interval._raw(ops.iadd(self.lo, self.hi, o.lo, o.hi))

    __radd__ = __add__

    def __sub__(self, other) -> Interval:
        o = self._coerce(other)
        return Interval._raw(ops.isub(self.lo, self.hi, o.lo, o.hi))

    def __rsub__(self, other) -> Interval:
        return self._coerce(other) - self

    def __mul__(self, other) -> Interval:
        o = self._coerce(other)
        return Interval._raw(ops.imul(self.lo, self.hi, o.lo, o.hi))

    __rmul__ = __mul__

    def __truediv__(self, other) -> Interval:
        o = self._coerce(other)
        return Interval._raw(ops.idiv(self.lo, self.hi, o.lo, o.hi))

    def __rtruediv__(self, other) -> Interval:
        return self._coerce(other) / self

    def __neg__(self) -> Interval:
        return Interval._raw(ops.ineg(self.lo, self.hi))

    def __abs__(self) -> Interval:
        return Interval._raw(ops.iabs(self.lo, self.hi))

    def powi(self, n: int) -> Interval:
        """n-th power with non-negative integer n; tight on even powers."""
        if n < 0:
            raise ValueError("powi requires a non-negative exponent")
        return Interval._raw(ops.ipowi(self.lo, self.hi, n))

    def sqrt(self) -> Interval:
        return Interval._raw(ops.isqrt(self.lo, self.hi))

    def exp(self) -> Interval:
        return Interval._raw(ops.iexp(self.lo, self.hi))

    def sin(self) -> Interval:
        return Interval._raw(ops.isin(self.lo, self.hi))

    def cos(self) -> Interval:
        return Interval._raw(ops.icos(self.lo, self.hi))

    # -- set operations ------------------------------------------------------

    def hull(self, other: Interval) -> Interval:
        return Interval._raw(ops.ihull(self.lo, self.hi, other.lo, other.hi))

    def intersect(self, other: Interval) -> Interval:
        return Interval._raw(ops.iintersect(self.lo, self.hi, other.lo, other.hi))

    def inflate(self, r: float) -> Interval:
        """Widen both bounds outward by r >= 0 (rounded outward)."""
        if self.is_empty:
            return self
        from ._fp import add_up, sub_down

        return Interval(sub_down(self.lo, r), add_up(self.hi, r))

    def __repr__(self) -> str:
        if self.is_empty:
            return "Interval.empty()"
        return f"[{self.lo!r}, {self.hi!r}]"


@dataclass(frozen=True)
class Box:
    components: tuple[Interval, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("box needs at least one component")
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_bounds(cls, bounds: Iterable[Sequence[float]]) -> Box:
        return cls(tuple(Interval(lo, hi) for lo, hi in bounds))

    @classmethod
    def from_points(cls, values: Iterable[float]) -> Box:
        return cls(tuple(Interval.point(v) for v in values))

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int) -> Interval:
        return self.components[i]

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.components)

    @property
    def is_empty(self) -> bool:
        return any(c.is_empty for c in self.components)

    def width(self) -> float:
        """Largest component width."""
        return max(c.width() for c in self.components)

    def midpoint(self) -> tuple[float, ...]:
        return tuple(c.midpoint() for c in self.components)

    def inf_norm(self) -> float:
        """Largest component magnitude."""
        if self.is_empty:
            raise ValueError("norm of empty box")
        return max(c.magnitude() for c in self.components)

    def contains_point(self, pt: Sequence[float]) -> bool:
        return all(c.contains(v) for c, v in zip(self.components, pt))

    def contains_box(self, other: Box) -> bool:
        return all(a.contains_interval(b) for a, b in zip(self.components, other))

    def hull(self, other: Box) -> Box:
        if len(other) != len(self):
            raise ValueError("dimension mismatch")
        return Box(tuple(a.hull(b) for a, b in zip(self.components, other)))

    def intersect(self, other: Box) -> Box:
        if len(other) != len(self):
            raise ValueError("dimension mismatch")
        return Box(tuple(a.intersect(b) for a, b in zip(self.components, other)))

    def bisect(self, k: int) -> tuple[Box, Box]:
        """Split component k at its midpoint; the halves reunite to self."""
        c = self.components[k]
        if c.is_empty or not (math.isfinite(c.lo) and math.isfinite(c.hi)):
            raise ValueError("bisect needs a finite non-empty component")
        if c.width() <= 0.0:
            raise ValueError("bisect needs a component of positive width")
        m = c.midpoint()
        left = list(self.components)
        right = list(self.components)
        left[k] = Interval(c.lo, m)
        right[k] = Interval(m, c.hi)
        return Box(tuple(left)), Box(tuple(right))

    def __repr__(self) -> str:
        return "Box(" + "; ".join(repr(c) for c in self.components) + ")"
