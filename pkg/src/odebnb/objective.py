"""Interval evaluation of cost functionals over a flow enclosure.

The cost is  J(p) = phi(y(tf), p) + integral of g(t, y(t), p) dt.  The
terminal part is bounded by evaluating phi on the final grid box; the
integral part by the interval rectangle rule over the integrator's panels:
each panel contributes (width of the time slice) * g(slice, panel box, p),
which encloses the true integral because the panel box contains the flow
over the whole slice.  An optional subdivision factor splits each time
slice to sharpen explicit time dependence of g without re-integrating.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from . import kernels
from . import expr as ex
from .interval import Box, Interval
from .ivp import FlowEnclosure
from .tape import Tape, compile_exprs


@dataclass(frozen=True)
class CostSpec:
    """Terminal cost over (y(tf), p) and/or running cost over (t, y, p)."""

    terminal: Optional[ex.Expr] = None
    running: Optional[ex.Expr] = None

    def __post_init__(self):
        if self.terminal is None and self.running is None:
            raise ValueError("cost needs a terminal and/or a running part")

    def validate(self, n_states: int, n_params: int) -> None:
        if self.terminal is not None:
            ex.validate(self.terminal, n_states, n_params)
        if self.running is not None:
            ex.validate(self.running, n_states, n_params)


@lru_cache(maxsize=512)
def _tape_for(e: ex.Expr, n_states: int, n_params: int, tag: str) -> Tape:
    return compile_exprs([e], n_states, n_params)


def _param_pairs(flow: FlowEnclosure):
    return [(c.lo, c.hi) for c in flow.params] if flow.params is not None else []


def _state_pairs(box: Box, n_states: int):
    # flows of augmented systems carry sensitivity blocks; cost expressions
    # only see the leading base states
    return [(c.lo, c.hi) for c in box.components[:n_states]]


def eval_terminal(spec: CostSpec, flow: FlowEnclosure, p: Optional[Box] = None) -> Interval:
    """Bound phi over every trajectory endpoint and parameter in the box."""
    if spec.terminal is None:
        return Interval.point(0.0)
    n = flow.system.n_states
    m = flow.system.n_params
    tape = _tape_for(spec.terminal, n, m, "terminal")
    pp = [(c.lo, c.hi) for c in p] if p is not None else _param_pairs(flow)
    tf = flow.tf
    (res,) = kernels.eval_tape(tape, tf, tf, _state_pairs(flow.final_state(), n), pp)
    return Interval._raw(res)


def eval_running(spec: CostSpec, flow: FlowEnclosure, p: Optional[Box] = None,
                 subdivide: int = 1) -> Interval:
    """Rectangle-rule bound of the integral of g along the flow."""
    if spec.running is None:
        return Interval.point(0.0)
    if subdivide < 1:
        raise ValueError("subdivision factor must be >= 1")
    n = flow.system.n_states
    m = flow.system.n_params
    tape = _tape_for(spec.running, n, m, "running")
    pp = [(c.lo, c.hi) for c in p] if p is not None else _param_pairs(flow)
    acc = Interval.point(0.0)
    for ta, tb, ytilde in flow.panels:
        ypairs = _state_pairs(ytilde, n)
        if subdivide == 1:
            cuts = (ta, tb)
        else:
            step = (tb - ta) / subdivide
            cuts = tuple(ta + i * step for i in range(subdivide)) + (tb,)
        for i in range(len(cuts) - 1):
            lo_t, hi_t = cuts[i], cuts[i + 1]
            (g,) = kernels.eval_tape(tape, lo_t, hi_t, ypairs, pp)
            width = Interval.point(hi_t) - Interval.point(lo_t)
            acc = acc + width * Interval._raw(g)
    return acc


def eval_cost(spec: CostSpec, flow: FlowEnclosure, p: Optional[Box] = None,
              subdivide: int = 1) -> Interval:
    """J = terminal part + running part; the lower bound prunes branch &
    bound nodes, the upper bound updates incumbents."""
    return eval_terminal(spec, flow, p) + eval_running(spec, flow, p, subdivide)


# -- parameter-centered refinement ---------------------------------------------
#
# Natural-inclusion enclosures of the flow over a parameter box suffer the
# usual box blowup.  When a sensitivity-augmented flow over [p] and a thin
# flow at the box midpoint m are both available, the mean-value theorem in
# the parameters gives a second sound enclosure,
#
#     y(t, p)  in  y(t, m) + sum_i s_i(t, [p]) * ([p_i] - m_i),
#
# whose width shrinks with the box instead of with the integration horizon.
# Intersecting both keeps soundness and restores the pruning power the
# branch & bound needs.


def _deltas(pbox: Box, thin_flow: FlowEnclosure) -> list[Interval]:
    mid = thin_flow.params
    if mid is None or len(mid) != len(pbox):
        raise ValueError("thin flow does not match the parameter box")
    if not pbox.contains_box(mid):
        # the mean-value segment must stay inside the box the sensitivities
        # were enclosed over
        raise ValueError("thin flow parameter point lies outside the box")
    return [pbox[i] - mid[i] for i in range(len(pbox))]


def _centered_box(thin_box: Box, aug_box: Box, aug_sys, deltas) -> Box:
    """Mean-value enclosure intersected with the naive one (base states)."""
    n = aug_sys.n_states
    out = []
    for k in range(n):
        mv = thin_box[k]
        for i, d in enumerate(deltas):
            lo = n + i * n + k
            mv = mv + aug_box[lo] * d
        out.append(mv.intersect(aug_box[k]))
    return Box(tuple(out))


def centered_terminal_box(aug_flow: FlowEnclosure, thin_flow: FlowEnclosure,
                          pbox: Box) -> Box:
    """Refined enclosure of y(tf) over the parameter box (base states)."""
    deltas = _deltas(pbox, thin_flow)
    return _centered_box(thin_flow.final_state(), aug_flow.final_state(),
                         aug_flow.system, deltas)


def _window_hulls(thin_panels, aug_panels) -> list[Box]:
    """Hull of the thin-flow panels overlapping each augmented panel window."""
    out = []
    i = 0
    n = len(thin_panels)
    for ta, tb, _ in aug_panels:
        while i < n and thin_panels[i][1] <= ta:
            i += 1
        j = i
        hull: Optional[Box] = None
        while j < n and thin_panels[j][0] < tb:
            box = thin_panels[j][2]
            hull = box if hull is None else hull.hull(box)
            j += 1
        if hull is None:
            raise AssertionError("panel windows do not tile the span")
        out.append(hull)
    return out


def centered_cost(spec: CostSpec, aug_flow: FlowEnclosure,
                  thin_flow: FlowEnclosure, pbox: Box,
                  subdivide: int = 1) -> Interval:
    """eval_cost with every state enclosure refined by the mean-value form."""
    sys = aug_flow.system
    n = sys.n_states
    m = sys.n_params
    deltas = _deltas(pbox, thin_flow)
    pp = [(c.lo, c.hi) for c in pbox]
    acc = Interval.point(0.0)
    if spec.terminal is not None:
        box = _centered_box(thin_flow.final_state(), aug_flow.final_state(),
                            sys, deltas)
        tape = _tape_for(spec.terminal, n, m, "terminal")
        tf = aug_flow.tf
        (res,) = kernels.eval_tape(tape, tf, tf,
                                   [(c.lo, c.hi) for c in box], pp)
        acc = acc + Interval._raw(res)
    if spec.running is not None:
        tape = _tape_for(spec.running, n, m, "running")
        hulls = _window_hulls(thin_flow.panels, aug_flow.panels)
        for (ta, tb, ytilde), thin_hull in zip(aug_flow.panels, hulls):
            box = _centered_box(thin_hull, ytilde, sys, deltas)
            ypairs = [(c.lo, c.hi) for c in box]
            if subdivide == 1:
                cuts = (ta, tb)
            else:
                step = (tb - ta) / subdivide
                cuts = tuple(ta + i * step for i in range(subdivide)) + (tb,)
            for i in range(len(cuts) - 1):
                lo_t, hi_t = cuts[i], cuts[i + 1]
                (g,) = kernels.eval_tape(tape, lo_t, hi_t, ypairs, pp)
                width = Interval.point(hi_t) - Interval.point(lo_t)
                acc = acc + width * Interval._raw(g)
    return acc
