"""ODE systems and forward-sensitivity augmentation.

``augment`` extends a parametrized system y' = f(t, y, p) with one block
of forward sensitivity equations per parameter,

    s_j' = (df/dy) s_j + df/dp_j,      s_j(t0) = dy0/dp_j,

built by exact symbolic differentiation of the right-hand side.  One
validated integration of the augmented system then encloses states and
sensitivities together.  Initial states are boxes that do not depend on
the parameters, so all sensitivity blocks start at zero.

State layout of the augmented vector is parameter-major:
[y_1..y_n, s_11..s_n1, s_12..s_n2, ...]; downstream code indexes
sensitivity blocks positionally with this convention.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import expr as ex
from .interval import Box, Interval


@dataclass(frozen=True)
class OdeSystem:
    """y' = f(t, y, p) with y(t0) in the box y0, over t in [t0, tf]."""

    rhs: tuple[ex.Expr, ...]
    y0: Box
    tspan: tuple[float, float]
    n_params: int

    def __post_init__(self):
        object.__setattr__(self, "rhs", tuple(self.rhs))
        n = len(self.rhs)
        if len(self.y0) != n:
            raise ValueError("initial state dimension does not match rhs")
        t0, tf = self.tspan
        if not t0 < tf:
            raise ValueError("tspan must satisfy t0 < tf")
        if self.y0.is_empty:
            raise ValueError("initial state box is empty")
        for e in self.rhs:
            ex.validate(e, n, self.n_params)

    @property
    def n_states(self) -> int:
        return len(self.rhs)

    # the integrator-facing view: total state length and Sens flattening base
    @property
    def total_states(self) -> int:
        return len(self.rhs)

    @property
    def sens_base(self) -> int | None:
        return None


@dataclass(frozen=True)
class AugmentedSystem:
    """A base system joined with its n*m forward sensitivity equations."""

    base: OdeSystem
    rhs: tuple[ex.Expr, ...]  # length n*(1+m): base rhs, then s-blocks
    y0: Box  # base y0 followed by initial sensitivities
    s0: Box  # the initial sensitivities alone

    @property
    def n_states(self) -> int:
        return self.base.n_states

    @property
    def n_params(self) -> int:
        return self.base.n_params

    @property
    def tspan(self) -> tuple[float, float]:
        return self.base.tspan

    @property
    def total_states(self) -> int:
        return len(self.rhs)

    @property
    def sens_base(self) -> int | None:
        return self.base.n_states

    def sens_block(self, box: Box, param: int) -> Box:
        """Slice the sensitivity block of parameter ``param`` out of an
        augmented state box."""
        n = self.base.n_states
        lo = n + param * n
        return Box(box.components[lo:lo + n])


def augment(sys: OdeSystem) -> AugmentedSystem:
    """Build the sensitivity-augmented system of dimension n*(1+m).

    Raises DifferentiationError if the right-hand side is not symbolically
    differentiable (abs nodes).
    """
    n = sys.n_states
    m = sys.n_params
    dfdy = [[ex.differentiate(f, ex.State(k)) for k in range(n)] for f in sys.rhs]
    rhs = list(sys.rhs)
    for j in range(m):
        for i in range(n):
            acc: ex.Expr = ex.differentiate(sys.rhs[i], ex.Param(j))
            for k in range(n):
                acc = ex.add(acc, ex.mul(dfdy[i][k], ex.Sens(k, j)))
            rhs.append(acc)
    # y0 independent of p, so every sensitivity starts at 0
    zeros = tuple(Interval.point(0.0) for _ in range(n * m))
    s0 = Box(zeros)
    y0 = Box(sys.y0.components + zeros)
    return AugmentedSystem(base=sys, rhs=tuple(rhs), y0=y0, s0=s0)
