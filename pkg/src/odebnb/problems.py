"""Built-in benchmark problems.

Three classic dynamic-optimization benchmarks from the global-optimization
literature (with their published optima as reference data), plus small
synthetic problems with analytic optima used by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import expr as ex
from .bnb import Problem
from .interval import Box, Interval
from .objective import CostSpec


@dataclass(frozen=True)
class ProblemCatalogEntry:
    name: str
    problem: Problem
    known_minimizer: Optional[tuple[float, ...]]  # reported/analytic optimizer
    known_cost: Optional[float]  # cost at the minimizer (published precision)
    note: str = ""


def _minus_sqrt5() -> Interval:
    # kept as an outward-rounded enclosure, not a decimal approximation
    return -Interval.point(5.0).sqrt()


def _singular_control() -> ProblemCatalogEntry:
    rhs = (
        ex.parse("y2"),
        ex.parse("-y3*u1 + 16*t - 8"),
        ex.parse("u1"),
    )
    sys_ = _system(rhs, y0=(Interval.point(0.0), Interval.point(-1.0), _minus_sqrt5()),
                   tspan=(0.0, 1.0), n_params=1)
    cost = CostSpec(running=ex.parse(
        "y1^2 + y2^2 + 0.0005*(y2 + 16*t - 8 - 0.1*y3*u1^2)^2"))
    prob = Problem(sys=sys_, cost=cost, pbox=Box.from_bounds([(-4.0, 10.0)]),
                   name="singular_control")
    return ProblemCatalogEntry(
        name="singular_control",
        problem=prob,
        known_minimizer=(4.07,),
        known_cost=0.497,
        note="classic singular-control benchmark with one scalar control",
    )


def _polynomial() -> ProblemCatalogEntry:
    rhs = (
        ex.parse("p1*y1^2 + p2*y2 - 2*p3^2"),
        ex.parse("-3*p1*y1 - p1*p2*y2 + y1*y2*p3 + 1.0"),
    )
    sys_ = _system(rhs, y0=(Interval.point(0.0), Interval.point(1.0)),
                   tspan=(0.0, 1.0), n_params=3)
    cost = CostSpec(terminal=ex.parse("(y1 + y2)^2"))
    prob = Problem(sys=sys_, cost=cost,
                   pbox=Box.from_bounds([(0.95, 1.0)] * 3), name="polynomial")
    return ProblemCatalogEntry(
        name="polynomial",
        problem=prob,
        known_minimizer=(0.95, 1.0, 1.0),
        known_cost=0.71875,
        note="polynomial dynamics with a known corner optimizer",
    )


def _endpoint_control() -> ProblemCatalogEntry:
    rhs = (
        ex.parse("u1*(1-t) + u2*t"),
        ex.parse("y1^2 + (u1*(1-t) + u2*t)^2"),
    )
    sys_ = _system(rhs, y0=(Interval.point(1.0), Interval.point(0.0)),
                   tspan=(0.0, 1.0), n_params=2)
    cost = CostSpec(terminal=ex.parse("y2"))
    prob = Problem(sys=sys_, cost=cost,
                   pbox=Box.from_bounds([(-1.0, 1.0)] * 2),
                   endpoint_constraints=((ex.parse("y1"), Interval.point(1.0)),),
                   name="endpoint_control")
    return ProblemCatalogEntry(
        name="endpoint_control",
        problem=prob,
        known_minimizer=(-0.4545, 0.4545),
        known_cost=0.924242,
        note="two-parameter control benchmark with an endpoint equality",
    )


def _toy_quadratic() -> ProblemCatalogEntry:
    sys_ = _system((ex.parse("p1"),), y0=(Interval.point(0.0),),
                   tspan=(0.0, 1.0), n_params=1)
    prob = Problem(sys=sys_, cost=CostSpec(terminal=ex.parse("y1^2")),
                   pbox=Box.from_bounds([(-1.0, 1.0)]), name="toy_quadratic")
    return ProblemCatalogEntry(
        name="toy_quadratic",
        problem=prob,
        known_minimizer=(0.0,),
        known_cost=0.0,
        note="y' = p, minimize y(1)^2; analytic optimum p* = 0",
    )


def _linear_decay() -> ProblemCatalogEntry:
    # y' = p*y, y(0) = 1; minimize (y(1) - 1/2)^2, optimum p* = -ln 2
    sys_ = _system((ex.parse("p1*y1"),), y0=(Interval.point(1.0),),
                   tspan=(0.0, 1.0), n_params=1)
    prob = Problem(sys=sys_, cost=CostSpec(terminal=ex.parse("(y1 - 0.5)^2")),
                   pbox=Box.from_bounds([(-1.0, 0.0)]), name="linear_decay")
    return ProblemCatalogEntry(
        name="linear_decay",
        problem=prob,
        known_minimizer=(-0.6931471805599453,),
        known_cost=0.0,
        note="exponential decay fit; analytic optimum p* = -ln 2",
    )


def _system(rhs, y0, tspan, n_params):
    from .sensitivity import OdeSystem

    return OdeSystem(rhs=tuple(rhs), y0=Box(tuple(y0)), tspan=tspan,
                     n_params=n_params)


def catalog() -> list[ProblemCatalogEntry]:
    """All built-in problems, addressable by name from the CLI."""
    return [
        _singular_control(),
        _polynomial(),
        _endpoint_control(),
        _toy_quadratic(),
        _linear_decay(),
    ]


def by_name(name: str) -> ProblemCatalogEntry:
    for entry in catalog():
        if entry.name == name:
            return entry
    known = ", ".join(e.name for e in catalog())
    raise KeyError(f"unknown problem {name!r}; built-ins: {known}")
