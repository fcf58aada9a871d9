"""Problem files: a small sectioned text format for optimization problems.

Example::

    # comments start with '#'
    [system]
    states = 2
    params = 2
    t0 = 0
    tf = 1
    rhs y1 = p1*(1-t) + p2*t
    rhs y2 = y1^2 + (p1*(1-t) + p2*t)^2
    init y1 = 1
    init y2 = 0

    [cost]
    terminal = y2
    # running = <expression in t, y, p>

    [constraints]
    endpoint y1 in [1, 1]

    [parameters]
    p1 in [-1, 1]
    p2 in [-1, 1]

Expressions use the grammar of the expression module (t, y<k>, p<k>/u<k>,
sin/cos/exp/sqrt/abs, ^integer).  ``init`` values are constant expressions
(evaluated in interval arithmetic, so e.g. ``-sqrt(5)`` stays validated) or
interval literals ``[lo, hi]``.  All errors carry line numbers.
"""

from __future__ import annotations

import math

from . import expr as ex
from .bnb import Problem
from .interval import Box, Interval
from .objective import CostSpec


class ProblemFileError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def _parse_expr(src: str, line: int) -> ex.Expr:
    try:
        return ex.parse(src)
    except ex.ParseError as err:
        raise ProblemFileError(str(err), line) from None


def _parse_interval(src: str, line: int) -> Interval:
    s = src.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise ProblemFileError(f"expected an interval [lo, hi], got {s!r}", line)
    parts = s[1:-1].split(",")
    if len(parts) != 2:
        raise ProblemFileError("interval needs exactly two bounds", line)
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ProblemFileError(f"bad interval bounds {s!r}", line) from None
    if math.isnan(lo) or math.isnan(hi) or lo > hi:
        raise ProblemFileError(f"invalid interval {s!r}", line)
    return Interval(lo, hi)


def _has_time(e: ex.Expr) -> bool:
    if isinstance(e, ex.Time):
        return True
    if isinstance(e, (ex.Neg, ex.Sin, ex.Cos, ex.Exp, ex.Sqrt, ex.Abs, ex.PowInt)):
        return _has_time(e.child)
    if isinstance(e, (ex.Add, ex.Sub, ex.Mul, ex.Div)):
        return _has_time(e.left) or _has_time(e.right)
    return False


def _const_interval(src: str, line: int) -> Interval:
    """A constant initial value: interval literal or constant expression."""
    if src.strip().startswith("["):
        return _parse_interval(src, line)
    e = _parse_expr(src, line)
    try:
        ex.validate(e, 0, 0)
    except ex.ExprError:
        raise ProblemFileError("initial values must be constant expressions", line) from None
    if _has_time(e):
        raise ProblemFileError("initial values must not depend on t", line)
    v = ex.eval_point(e, 0.0, (), ())
    if v.is_empty:
        raise ProblemFileError("initial value is undefined", line)
    return v


def parse_problem(text: str, name: str = "") -> Problem:
    section = None
    sys_kv: dict[str, tuple[str, int]] = {}
    rhs: dict[int, tuple[str, int]] = {}
    init: dict[int, tuple[str, int]] = {}
    cost_kv: dict[str, tuple[str, int]] = {}
    constraints: list[tuple[str, str, int]] = []
    params: dict[int, tuple[str, int]] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ProblemFileError("unterminated section header", lineno)
            section = line[1:-1].strip().lower()
            if section not in ("system", "cost", "constraints", "parameters"):
                raise ProblemFileError(f"unknown section {section!r}", lineno)
            continue
        if section is None:
            raise ProblemFileError("content before the first section", lineno)
        if section == "constraints":
            if " in " not in line:
                raise ProblemFileError("constraint must read 'endpoint <expr> in [lo, hi]'", lineno)
            lhs, rhs_txt = line.split(" in ", 1)
            lhs = lhs.strip()
            if not lhs.startswith("endpoint "):
                raise ProblemFileError("constraints must start with 'endpoint'", lineno)
            constraints.append((lhs[len("endpoint "):].strip(), rhs_txt.strip(), lineno))
            continue
        if section == "parameters":
            if " in " not in line:
                raise ProblemFileError("parameter must read 'p<k> in [lo, hi]'", lineno)
            key, rng = line.split(" in ", 1)
            key = key.strip()
            if not (len(key) >= 2 and key[0] in "pu" and key[1:].isdigit()):
                raise ProblemFileError(f"bad parameter name {key!r}", lineno)
            idx = int(key[1:]) - 1
            if idx in params:
                raise ProblemFileError(f"duplicate parameter {key}", lineno)
            params[idx] = (rng.strip(), lineno)
            continue
        if "=" not in line:
            raise ProblemFileError("expected 'key = value'", lineno)
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if section == "system":
            if key.startswith("rhs ") or key.startswith("init "):
                kind, var = key.split(None, 1)
                var = var.strip()
                if not (var.startswith("y") and var[1:].isdigit()):
                    raise ProblemFileError(f"bad state name {var!r}", lineno)
                idx = int(var[1:]) - 1
                target = rhs if kind == "rhs" else init
                if idx in target:
                    raise ProblemFileError(f"duplicate {kind} for {var}", lineno)
                target[idx] = (value, lineno)
            elif key in ("states", "params", "t0", "tf"):
                sys_kv[key] = (value, lineno)
            else:
                raise ProblemFileError(f"unknown system key {key!r}", lineno)
        elif section == "cost":
            if key not in ("terminal", "running"):
                raise ProblemFileError(f"unknown cost key {key!r}", lineno)
            if key in cost_kv:
                raise ProblemFileError(f"duplicate cost key {key!r}", lineno)
            cost_kv[key] = (value, lineno)
        else:
            raise ProblemFileError(f"unexpected line in [{section}]", lineno)

    def need(key: str) -> tuple[str, int]:
        if key not in sys_kv:
            raise ProblemFileError(f"missing system key {key!r}", 0)
        return sys_kv[key]

    def intval(key: str) -> int:
        txt, ln = need(key)
        try:
            return int(txt)
        except ValueError:
            raise ProblemFileError(f"{key} must be an integer", ln) from None

    def floatval(key: str) -> float:
        txt, ln = need(key)
        try:
            return float(txt)
        except ValueError:
            raise ProblemFileError(f"{key} must be a number", ln) from None

    n = intval("states")
    m = intval("params")
    t0, tf = floatval("t0"), floatval("tf")
    if n < 1:
        raise ProblemFileError("need at least one state", sys_kv["states"][1])

    rhs_exprs = []
    y0 = []
    for i in range(n):
        if i not in rhs:
            raise ProblemFileError(f"missing 'rhs y{i + 1}'", 0)
        if i not in init:
            raise ProblemFileError(f"missing 'init y{i + 1}'", 0)
        src, ln = rhs[i]
        e = _parse_expr(src, ln)
        try:
            ex.validate(e, n, m)
        except ex.ExprError as err:
            raise ProblemFileError(str(err), ln) from None
        rhs_exprs.append(e)
        y0.append(_const_interval(*init[i]))
    for i in rhs:
        if i >= n:
            raise ProblemFileError(f"rhs y{i + 1} outside declared dimension", rhs[i][1])
    for i in init:
        if i >= n:
            raise ProblemFileError(f"init y{i + 1} outside declared dimension", init[i][1])

    terminal = running = None
    if "terminal" in cost_kv:
        src, ln = cost_kv["terminal"]
        terminal = _parse_expr(src, ln)
    if "running" in cost_kv:
        src, ln = cost_kv["running"]
        running = _parse_expr(src, ln)
    if terminal is None and running is None:
        raise ProblemFileError("the [cost] section needs 'terminal' and/or 'running'", 0)

    cons = []
    for src, rng, ln in constraints:
        e = _parse_expr(src, ln)
        try:
            ex.validate(e, n, m)
        except ex.ExprError as err:
            raise ProblemFileError(str(err), ln) from None
        cons.append((e, _parse_interval(rng, ln)))

    pbox = []
    for j in range(m):
        if j not in params:
            raise ProblemFileError(f"missing range for parameter {j + 1}", 0)
        pbox.append(_parse_interval(*params[j]))
    for j in params:
        if j >= m:
            raise ProblemFileError(f"parameter p{j + 1} outside declared dimension",
                                   params[j][1])

    from .sensitivity import OdeSystem

    sys_ = OdeSystem(rhs=tuple(rhs_exprs), y0=Box(tuple(y0)), tspan=(t0, tf),
                     n_params=m)
    try:
        cost = CostSpec(terminal=terminal, running=running)
        cost.validate(n, m)
    except (ex.ExprError, ValueError) as err:
        raise ProblemFileError(str(err), 0) from None
    return Problem(sys=sys_, cost=cost, pbox=Box(tuple(pbox)),
                   endpoint_constraints=tuple(cons), name=name)


def render_problem(prob: Problem) -> str:
    """Text form that reparses to an identically-behaving problem.

    Interval-valued initial states are written as exact-repr interval
    literals, so a round trip reproduces the same bounds bit for bit.
    """
    n = prob.sys.n_states
    m = prob.sys.n_params
    t0, tf = prob.sys.tspan
    lines = [f"# problem: {prob.name or 'unnamed'}", "[system]",
             f"states = {n}", f"params = {m}", f"t0 = {t0!r}", f"tf = {tf!r}"]
    for i, e in enumerate(prob.sys.rhs):
        lines.append(f"rhs y{i + 1} = {ex.render(e)}")
    for i, c in enumerate(prob.sys.y0):
        if c.is_point:
            lines.append(f"init y{i + 1} = {c.lo!r}")
        else:
            lines.append(f"init y{i + 1} = [{c.lo!r}, {c.hi!r}]")
    lines.append("")
    lines.append("[cost]")
    if prob.cost.terminal is not None:
        lines.append(f"terminal = {ex.render(prob.cost.terminal)}")
    if prob.cost.running is not None:
        lines.append(f"running = {ex.render(prob.cost.running)}")
    if prob.endpoint_constraints:
        lines.append("")
        lines.append("[constraints]")
        for e, tgt in prob.endpoint_constraints:
            lines.append(f"endpoint {ex.render(e)} in [{tgt.lo!r}, {tgt.hi!r}]")
    lines.append("")
    lines.append("[parameters]")
    for j, c in enumerate(prob.pbox):
        lines.append(f"p{j + 1} in [{c.lo!r}, {c.hi!r}]")
    lines.append("")
    return "\n".join(lines)
