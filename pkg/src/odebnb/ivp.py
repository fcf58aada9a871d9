"""Validated integration of interval-parametrized ODEs.

Each step runs in two stages.  First a Picard iteration with epsilon
inflation produces an a-priori box enclosing the flow over the whole step
(and proves existence and uniqueness there); the step size is halved until
the iteration contracts.  Second, an interval Taylor series of order k
around the current grid point, with the order-k term evaluated on the
a-priori box over the step window, tightens the enclosure at the step
endpoint.

The result is a ``FlowEnclosure``: tight boxes on a time grid plus
a-priori boxes on the panels tiling [t0, tf].  ``query_at`` re-expands
from the nearest grid point for a sharp enclosure at an arbitrary time;
``query_over`` hulls the panels covering a time window.

Enclosures hold for every parameter value in the supplied box (the ODE is
integrated as a differential inclusion) and for every initial state in y0.
Plain boxes are used throughout; no wrapping-effect preconditioning is
attempted, which is acceptable for short horizons but a known width source
on long ones.
"""

from __future__ import annotations

import bisect
import csv
from functools import lru_cache
from dataclasses import dataclass, field
from typing import IO, Optional, Sequence, Union

from . import kernels
from .interval import Box, Interval
from .sensitivity import AugmentedSystem, OdeSystem
from .tape import Tape, compile_exprs

System = Union[OdeSystem, AugmentedSystem]


class IntegrationError(RuntimeError):
    """Validated integration could not continue; carries the time reached."""

    def __init__(self, message: str, t_reached: float):
        super().__init__(f"{message} (t = {t_reached:g})")
        self.t_reached = t_reached


@dataclass(frozen=True)
class IntegratorConfig:
    order: int = 4  # Taylor series order k
    h0: Optional[float] = None  # initial step; default (tf - t0) / 50
    hmin: Optional[float] = None  # smallest step tried; default h0 / 4096
    alpha: float = 0.1  # epsilon-inflation: relative part
    delta: float = 1e-10  # epsilon-inflation: absolute part
    max_picard_iter: int = 10
    max_steps: int = 100_000

    def __post_init__(self):
        if not 2 <= self.order <= 10:
            raise ValueError("Taylor order must be between 2 and 10")
        if self.alpha <= 0:
            raise ValueError("inflation factor must be positive")

    def resolve_steps(self, t0: float, tf: float) -> tuple[float, float]:
        h0 = self.h0 if self.h0 is not None else (tf - t0) / 50.0
        if not 0 < h0 <= tf - t0:
            raise ValueError("h0 must lie in (0, tf - t0]")
        hmin = self.hmin if self.hmin is not None else h0 / 4096.0
        if not 0 < hmin <= h0:
            raise ValueError("hmin must lie in (0, h0]")
        return h0, hmin


@dataclass(frozen=True)
class FlowEnclosure:
    """Tight grid enclosures plus a-priori panel enclosures of the flow."""

    grid: tuple[tuple[float, Box], ...]  # (t_j, [y_j]) with t_0 = t0, last = tf
    panels: tuple[tuple[float, float, Box], ...]  # ([t_j, t_j+1], [ytilde_j])
    params: Optional[Box]  # None for parameter-free systems
    system: System = field(compare=False)
    config: IntegratorConfig = field(compare=False)

    @property
    def t0(self) -> float:
        return self.grid[0][0]

    @property
    def tf(self) -> float:
        return self.grid[-1][0]

    def final_state(self) -> Box:
        return self.grid[-1][1]

    def to_csv(self, out: IO[str]) -> None:
        """Grid rows (t, lo/hi per state) for external plotting."""
        n = self.system.total_states
        w = csv.writer(out)
        w.writerow(["t"] + [f"y{i + 1}_{b}" for i in range(n) for b in ("lo", "hi")])
        for t, box in self.grid:
            row = [repr(t)]
            for c in box:
                row.extend([repr(c.lo), repr(c.hi)])
            w.writerow(row)


@lru_cache(maxsize=512)
def system_tape(sys: System) -> Tape:
    """Compile (and cache) the right-hand side tape of a system."""
    return compile_exprs(sys.rhs, sys.total_states, sys.n_params,
                         sens_base=sys.sens_base)


def _pairs(box: Box) -> list[tuple[float, float]]:
    return [(c.lo, c.hi) for c in box]


def _box(pairs: Sequence[tuple[float, float]]) -> Box:
    return Box(tuple(Interval(lo, hi) for lo, hi in pairs))


def integrate(sys: System, p: Optional[Box],
              cfg: IntegratorConfig = IntegratorConfig()) -> FlowEnclosure:
    """Enclose the flow of the system over its full time span.

    ``p`` is the parameter box (None for parameter-free systems); the
    enclosure is valid for every parameter in it and every initial state
    in ``sys.y0``.
    """
    if sys.n_params == 0:
        if p is not None:
            raise ValueError("system declares no parameters")
    else:
        if p is None or len(p) != sys.n_params:
            raise ValueError("parameter box dimension mismatch")
        if p.is_empty:
            raise ValueError("parameter box is empty")
    t0, tf = sys.tspan
    h0, hmin = cfg.resolve_steps(t0, tf)
    tape = system_tape(sys)
    y = _pairs(sys.y0)
    pp = _pairs(p) if p is not None else []
    status, t_reached, grid_rows, panel_rows = kernels.integrate_loop(
        tape, cfg.order, t0, tf, h0, hmin, cfg.alpha, cfg.delta,
        cfg.max_picard_iter, cfg.max_steps, y, pp)
    if status == kernels.NO_ENCLOSURE:
        raise IntegrationError("no contracting a-priori enclosure above hmin",
                               t_reached)
    if status == kernels.ABS_KINK:
        raise IntegrationError("abs() crossed zero; flow is not smooth enough",
                               t_reached)
    if status == kernels.STEP_LIMIT:
        raise IntegrationError("step limit exceeded", t_reached)
    if status != kernels.OK:
        raise IntegrationError("tightening produced an empty enclosure",
                               t_reached)
    grid = tuple((t, _box(pairs)) for t, pairs in grid_rows)
    panels = tuple((ta, tb, _box(pairs)) for ta, tb, pairs in panel_rows)
    return FlowEnclosure(grid=grid, panels=panels, params=p,
                         system=sys, config=cfg)


def query_at(flow: FlowEnclosure, t: float) -> Box:
    """Enclosure of the flow at exactly t.

    Grid times return the stored tight box; other times re-expand the
    Taylor series from the preceding grid point, reusing the covering
    panel as the a-priori box, and clip by that panel.
    """
    if not flow.t0 <= t <= flow.tf:
        raise ValueError(f"t = {t:g} outside [{flow.t0:g}, {flow.tf:g}]")
    times = [g[0] for g in flow.grid]
    j = bisect.bisect_right(times, t) - 1
    if times[j] == t:
        return flow.grid[j][1]
    tj, yj = flow.grid[j]
    _, _, ytilde = flow.panels[j]
    tape = system_tape(flow.system)
    pp = _pairs(flow.params) if flow.params is not None else []
    status, y_t = kernels.taylor_step(
        tape, flow.config.order, tj, t, _pairs(yj), pp, _pairs(ytilde))
    if status != kernels.OK:
        raise IntegrationError("re-expansion failed inside a panel", tj)
    return _box(y_t)


def query_over(flow: FlowEnclosure, t_lo: float, t_hi: float) -> Box:
    """Hull of the a-priori enclosures over the window [t_lo, t_hi]."""
    if t_lo > t_hi:
        raise ValueError("empty time window")
    if not (flow.t0 <= t_lo and t_hi <= flow.tf):
        raise ValueError("window outside the integrated span")
    out: Optional[Box] = None
    for ta, tb, ytilde in flow.panels:
        if t_lo == t_hi:
            hit = ta <= t_lo <= tb
        else:
            hit = ta < t_hi and t_lo < tb
        if hit:
            out = ytilde if out is None else out.hull(ytilde)
    if out is None:  # degenerate window on a shared endpoint
        raise AssertionError("window not covered by any panel")
    return out
