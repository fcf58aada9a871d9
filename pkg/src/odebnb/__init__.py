"""Guaranteed global optimization of ODE parameters.

Interval branch & bound over validated (enclosure-producing) integration
of the parametrized dynamics, with round-robin, largest-first and
sensitivity-based smear bisection heuristics.
"""

from .bnb import (
    BnbNode,
    Problem,
    Solution,
    SolverConfig,
    choose_dimension_largest_first,
    choose_dimension_round_robin,
    choose_dimension_smear,
    filter_constraints,
    smear_weights,
    solve,
)
from .expr import (
    EvalContext,
    Expr,
    ParseError,
    differentiate,
    eval_interval,
    eval_point,
    parse,
    render,
)
from .interval import Box, Interval
from .ivp import (
    FlowEnclosure,
    IntegrationError,
    IntegratorConfig,
    integrate,
    query_at,
    query_over,
)
from .kernels import BACKEND
from .objective import CostSpec, centered_cost, eval_cost, eval_running, eval_terminal
from .problem_io import parse_problem, render_problem
from .problems import catalog
from .sensitivity import AugmentedSystem, OdeSystem, augment

__version__ = "0.1.0"

__all__ = [
    "AugmentedSystem",
    "BACKEND",
    "BnbNode",
    "Box",
    "CostSpec",
    "EvalContext",
    "Expr",
    "FlowEnclosure",
    "IntegrationError",
    "IntegratorConfig",
    "Interval",
    "OdeSystem",
    "ParseError",
    "Problem",
    "Solution",
    "SolverConfig",
    "augment",
    "catalog",
    "centered_cost",
    "choose_dimension_largest_first",
    "choose_dimension_round_robin",
    "choose_dimension_smear",
    "differentiate",
    "eval_cost",
    "eval_interval",
    "eval_point",
    "eval_running",
    "eval_terminal",
    "filter_constraints",
    "integrate",
    "parse",
    "parse_problem",
    "query_at",
    "query_over",
    "render",
    "render_problem",
    "smear_weights",
    "solve",
]
