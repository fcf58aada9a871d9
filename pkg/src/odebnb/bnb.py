"""Interval branch & bound over the parameter box.

The loop is deliberately the simplest sound one, so that bisection
heuristics can be compared in isolation:

0. incumbent = +inf, accepted list empty, FIFO queue = {initial box}
1. pop the oldest box
2. reject it if an endpoint constraint enclosure misses its target;
   otherwise try the midpoint (thin parameters): if feasible, its cost
   upper bound may lower the incumbent
3. drop every queued box whose lower bound exceeds the incumbent
4. boxes narrower than epsilon are accepted with their cost bound;
   anything else is bisected along a heuristic dimension and both halves
   are queued with freshly integrated bounds
5. repeat while the queue is non-empty
6. purge the accepted list against the final incumbent and hull it

Each queued node carries the cost and constraint enclosures (and, for the
sensitivity heuristic, the per-parameter smear weights) computed from one
validated integration of its own box, so the guarantee is unconditional:
the true minimizer set stays inside the returned hull and the true optimum
inside the returned cost interval.

Bisection heuristics: round robin, largest width first, and the smear
rule that weights each parameter's box width by the infinity norm of its
forward sensitivity function (over the whole horizon, or only at the final
time for purely terminal costs).
"""

from __future__ import annotations

import math
from collections import deque
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import expr as ex
from . import kernels
from .interval import Box, Interval
from .ivp import FlowEnclosure, IntegrationError, IntegratorConfig, integrate
from .objective import CostSpec, centered_cost, centered_terminal_box, eval_cost
from .sensitivity import AugmentedSystem, OdeSystem, augment
from .tape import compile_exprs

HEURISTICS = ("round_robin", "largest_first", "smear")
SMEAR_MODES = ("auto", "terminal", "horizon")


@dataclass(frozen=True)
class Problem:
    """Minimize the cost over the parameter box, subject to the ODE and
    optional equality constraints on the trajectory endpoint."""

    sys: OdeSystem
    cost: CostSpec
    pbox: Box
    endpoint_constraints: tuple[tuple[ex.Expr, Interval], ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.sys.n_params < 1:
            raise ValueError("optimization needs at least one parameter")
        if len(self.pbox) != self.sys.n_params:
            raise ValueError("parameter box dimension mismatch")
        if self.pbox.is_empty:
            raise ValueError("parameter box is empty")
        for c in self.pbox:
            if not (math.isfinite(c.lo) and math.isfinite(c.hi)):
                raise ValueError("parameter box must have finite bounds")
        self.cost.validate(self.sys.n_states, self.sys.n_params)
        for e, target in self.endpoint_constraints:
            ex.validate(e, self.sys.n_states, self.sys.n_params)
            if target.is_empty:
                raise ValueError("constraint target is empty")


@dataclass
class BnbNode:
    pbox: Box
    lower_bound: float
    cost: Interval
    constraint_vals: tuple[Interval, ...]
    depth: int
    sigmas: Optional[tuple[float, ...]] = None  # smear weights, if computed
    # midpoint trial data, precomputed from the node's own thin flow
    mid_cost: Optional[Interval] = None  # None: midpoint infeasible or unknown
    mid_point: Optional[tuple[float, ...]] = None


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-3
    heuristic: str = "largest_first"
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    feas_tol: float = 1e-3  # equality-constraint tolerance for incumbent trials
    smear_mode: str = "auto"  # auto: terminal norm iff the cost has no running part
    quad_subdivide: int = 1
    max_branches: Optional[int] = None
    max_nodes: Optional[int] = None
    on_integration_failure: str = "abort"  # or "keep": undiscardable node
    event_sink: Optional[Callable[[dict], None]] = None

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"heuristic must be one of {HEURISTICS}")
        if self.smear_mode not in SMEAR_MODES:
            raise ValueError(f"smear mode must be one of {SMEAR_MODES}")
        if self.on_integration_failure not in ("abort", "keep"):
            raise ValueError("on_integration_failure must be 'abort' or 'keep'")


@dataclass(frozen=True)
class Solution:
    psol: Optional[Box]  # hull of accepted boxes; None if nothing accepted
    csol: Optional[Interval]  # hull of their cost enclosures
    cbar: float  # final incumbent (upper bound on the optimum)
    branch_count: int
    nodes_processed: int
    accepted: tuple[tuple[Box, Interval], ...]
    status: str  # ok | branch_limit | node_limit


# -- bisection heuristics ------------------------------------------------------


def choose_dimension_round_robin(depth: int, pbox: Box) -> int:
    """Cycle dimensions with depth, skipping zero-width components."""
    m = len(pbox)
    k = depth % m
    for off in range(m):
        i = (k + off) % m
        if pbox[i].width() > 0.0:
            return i
    raise ValueError("box has no positive-width dimension")


def choose_dimension_largest_first(pbox: Box) -> int:
    """Widest component, ties to the lowest index."""
    best, best_w = 0, -1.0
    for i, c in enumerate(pbox):
        w = c.width()
        if w > best_w:
            best, best_w = i, w
    return best


def smear_weights(flow: FlowEnclosure, pbox: Box, mode: str) -> tuple[float, ...]:
    """Per-parameter smear value: ||s_i||_inf * w(p_i).

    The sensitivity norm is the infinity norm of the i-th sensitivity block,
    maximized over the a-priori panel enclosures ("horizon" mode) or taken
    from the final-time enclosure only ("terminal" mode).
    """
    sys = flow.system
    if not isinstance(sys, AugmentedSystem):
        raise TypeError("smear weights need a flow of the augmented system")
    m = sys.n_params
    norms = [0.0] * m
    if mode == "terminal":
        final = flow.final_state()
        for j in range(m):
            norms[j] = sys.sens_block(final, j).inf_norm()
    else:
        for _, _, ytilde in flow.panels:
            for j in range(m):
                v = sys.sens_block(ytilde, j).inf_norm()
                if v > norms[j]:
                    norms[j] = v
    return tuple(norms[j] * pbox[j].width() for j in range(m))


def choose_dimension_smear(prob: Problem, node: BnbNode,
                           augmented_flow: Optional[FlowEnclosure] = None,
                           mode: str = "auto") -> int:
    """Widest effect first: argmax of the smear values, ties to the lowest
    index; zero-width dimensions are excluded; all-zero weights fall back
    to largest-first."""
    if mode == "auto":
        mode = "terminal" if prob.cost.running is None else "horizon"
    sigmas = node.sigmas
    if sigmas is None:
        if augmented_flow is None:
            raise ValueError("need either precomputed weights or an augmented flow")
        sigmas = smear_weights(augmented_flow, node.pbox, mode)
    best = -1
    best_s = 0.0
    for i, s in enumerate(sigmas):
        if node.pbox[i].width() <= 0.0:
            continue
        if s > best_s:
            best, best_s = i, s
    if best < 0:  # all weights zero (or no information): degeneracy rule
        return choose_dimension_largest_first(node.pbox)
    return best


# -- constraint handling -------------------------------------------------------


def constraint_enclosures(prob: Problem, flow: FlowEnclosure,
                          pbox: Box) -> tuple[Interval, ...]:
    """Interval enclosures of every endpoint-constraint expression."""
    if not prob.endpoint_constraints:
        return ()
    n = prob.sys.n_states
    m = prob.sys.n_params
    tape = _constraint_tape(prob)
    tf = flow.tf
    ypairs = [(c.lo, c.hi) for c in flow.final_state().components[:n]]
    ppairs = [(c.lo, c.hi) for c in pbox]
    vals = kernels.eval_tape(tape, tf, tf, ypairs, ppairs)
    return tuple(Interval._raw(v) for v in vals)


@lru_cache(maxsize=256)
def _constraint_tape(prob: Problem):
    return compile_exprs([e for e, _ in prob.endpoint_constraints],
                         prob.sys.n_states, prob.sys.n_params)


def filter_constraints(prob: Problem, node: BnbNode,
                       flow: Optional[FlowEnclosure] = None) -> Box:
    """Sound infeasibility test: the node box survives unchanged unless some
    constraint enclosure is disjoint from its target, in which case an empty
    box is returned.  No contraction is attempted."""
    vals = node.constraint_vals
    if flow is not None and not vals:
        vals = constraint_enclosures(prob, flow, node.pbox)
    for v, (_, target) in zip(vals, prob.endpoint_constraints):
        if not v.intersects(target):
            return Box(tuple(Interval.empty() for _ in range(len(node.pbox))))
    return node.pbox


# -- the solver ----------------------------------------------------------------


def _emit(cfg: SolverConfig, payload: dict) -> None:
    if cfg.event_sink is not None:
        cfg.event_sink(payload)


def _box_list(box: Box) -> list[list[float]]:
    return [[c.lo, c.hi] for c in box]


class _NodeFactory:
    """Bounds a box from two integrations that every heuristic shares: the
    sensitivity-augmented flow over the box and a thin flow at its midpoint.

    The augmented flow alone gives natural-inclusion enclosures (and the
    smear weights); combining it with the thin flow yields the much tighter
    parameter-centered cost and constraint bounds, and the thin flow doubles
    as the midpoint incumbent trial of step 2."""

    def __init__(self, prob: Problem, cfg: SolverConfig):
        self.prob = prob
        self.cfg = cfg
        self.aug_sys = augment(prob.sys)
        mode = cfg.smear_mode
        if mode == "auto":
            mode = "terminal" if prob.cost.running is None else "horizon"
        self.smear_mode = mode

    def _endpoint_vals(self, terminal_box: Box, pbox: Box) -> tuple[Interval, ...]:
        if not self.prob.endpoint_constraints:
            return ()
        n = self.prob.sys.n_states
        tape = _constraint_tape(self.prob)
        tf = self.prob.sys.tspan[1]
        ypairs = [(c.lo, c.hi) for c in terminal_box.components[:n]]
        ppairs = [(c.lo, c.hi) for c in pbox]
        vals = kernels.eval_tape(tape, tf, tf, ypairs, ppairs)
        return tuple(Interval._raw(v) for v in vals)

    def make(self, pbox: Box, depth: int) -> BnbNode:
        """Bound a box; if integration fails and the config says to keep
        going, the node gets undiscardable bounds."""
        try:
            aug_flow = integrate(self.aug_sys, pbox, self.cfg.integrator)
        except IntegrationError:
            if self.cfg.on_integration_failure == "abort":
                raise
            return BnbNode(pbox=pbox, lower_bound=-math.inf,
                           cost=Interval.whole(),
                           constraint_vals=tuple(Interval.whole()
                                                 for _ in self.prob.endpoint_constraints),
                           depth=depth)
        mid = pbox.midpoint()
        mid_box = Box.from_points(mid)
        thin_flow = None
        try:
            thin_flow = integrate(self.prob.sys, mid_box, self.cfg.integrator)
        except IntegrationError:
            if self.cfg.on_integration_failure == "abort":
                raise
        if thin_flow is not None:
            cost = centered_cost(self.prob.cost, aug_flow, thin_flow, pbox,
                                 self.cfg.quad_subdivide)
            terminal = centered_terminal_box(aug_flow, thin_flow, pbox)
        else:
            cost = eval_cost(self.prob.cost, aug_flow, pbox,
                             self.cfg.quad_subdivide)
            terminal = Box(aug_flow.final_state().components[:self.prob.sys.n_states])
        if cost.is_empty:
            raise ValueError("cost expression undefined over a parameter box")
        cons = self._endpoint_vals(terminal, pbox)
        sigmas = smear_weights(aug_flow, pbox, self.smear_mode)

        mid_cost = None
        if thin_flow is not None:
            feasible = True
            for v, (_, target) in zip(self._endpoint_vals(thin_flow.final_state(),
                                                          mid_box),
                                      self.prob.endpoint_constraints):
                if not v.intersects(target) or v.width() > self.cfg.feas_tol:
                    feasible = False
                    break
            if feasible:
                mid_cost = eval_cost(self.prob.cost, thin_flow, mid_box,
                                     self.cfg.quad_subdivide)
        return BnbNode(pbox=pbox, lower_bound=cost.lo, cost=cost,
                       constraint_vals=cons, depth=depth, sigmas=sigmas,
                       mid_cost=mid_cost, mid_point=mid)


def solve(prob: Problem, cfg: SolverConfig = SolverConfig()) -> Solution:
    factory = _NodeFactory(prob, cfg)
    m = len(prob.pbox)

    cbar = math.inf
    accepted: list[tuple[Box, Interval]] = []
    queue: deque[BnbNode] = deque()
    root = factory.make(prob.pbox, depth=0)
    queue.append(root)

    branch_count = 0
    nodes = 0
    status = "ok"

    while queue:
        if cfg.max_nodes is not None and nodes >= cfg.max_nodes:
            status = "node_limit"
            break
        node = queue.popleft()
        nodes += 1
        _emit(cfg, {"event": "pop", "depth": node.depth, "lb": node.lower_bound,
                    "queue": len(queue), "box": _box_list(node.pbox)})

        # step 2: constraint rejection, then the midpoint incumbent trial
        if filter_constraints(prob, node).is_empty:
            _emit(cfg, {"event": "infeasible", "box": _box_list(node.pbox)})
            continue
        if node.lower_bound > cbar:
            # would have been purged in step 3 had it still been queued
            _emit(cfg, {"event": "purge", "removed": 1, "queue": len(queue),
                        "at": "pop"})
            continue
        if node.mid_cost is not None and node.mid_cost.hi < cbar:
            cbar = node.mid_cost.hi
            _emit(cfg, {"event": "incumbent", "cbar": cbar,
                        "point": list(node.mid_point)})
            # step 3: purge the queue against the improved incumbent
            before = len(queue)
            queue = deque(n for n in queue if n.lower_bound <= cbar)
            if len(queue) != before:
                _emit(cfg, {"event": "purge", "removed": before - len(queue),
                            "queue": len(queue), "at": "filter"})

        # step 4: accept or branch
        if node.pbox.width() < cfg.epsilon:
            accepted.append((node.pbox, node.cost))
            _emit(cfg, {"event": "accept", "box": _box_list(node.pbox),
                        "lb": node.lower_bound})
            continue
        if cfg.max_branches is not None and branch_count >= cfg.max_branches:
            status = "branch_limit"
            queue.appendleft(node)
            break
        if cfg.heuristic == "round_robin":
            dim = choose_dimension_round_robin(node.depth, node.pbox)
        elif cfg.heuristic == "largest_first":
            dim = choose_dimension_largest_first(node.pbox)
        else:
            dim = choose_dimension_smear(prob, node, mode=factory.smear_mode)
        branch_count += 1
        _emit(cfg, {"event": "branch", "dim": dim,
                    "sigmas": list(node.sigmas) if node.sigmas else None,
                    "count": branch_count})
        for child_box in node.pbox.bisect(dim):
            queue.append(factory.make(child_box, node.depth + 1))

    # early stop: whatever is still queued may hold the optimum
    leftovers = [(n.pbox, n.cost) for n in queue] if status != "ok" else []

    # step 6: final purge and hull
    final = [(b, c) for b, c in accepted if c.lo <= cbar] + leftovers
    psol: Optional[Box] = None
    csol: Optional[Interval] = None
    for b, c in final:
        psol = b if psol is None else psol.hull(b)
        csol = c if csol is None else csol.hull(c)
    return Solution(psol=psol, csol=csol, cbar=cbar, branch_count=branch_count,
                    nodes_processed=nodes, accepted=tuple(final), status=status)
