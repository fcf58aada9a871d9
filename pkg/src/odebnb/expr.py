"""Symbolic expressions over time, states and parameters.

The AST is deliberately small: constants, the time variable ``t``, state
variables ``y1..yn``, parameters ``p1..pm`` (spelled ``u1..um`` for control
problems), sensitivity variables (internal, for augmented systems), the
elementary functions sin/cos/exp/sqrt/abs, integer powers, and the four
arithmetic operations.

Three consumers share it: natural-inclusion interval evaluation, exact
symbolic differentiation (used to build sensitivity equations), and the
tape compiler that feeds the numeric kernels.

Simplification is conservative by design: identity and zero elimination
plus constant folding, and constants are folded only when the float
operation is exact, so a simplified tree evaluates to the same enclosure
as the original.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _fp, _ivops
from .interval import Box, Interval


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    """Syntax or name error with a character position."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


class DifferentiationError(ExprError):
    pass


# -- node types --------------------------------------------------------------


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return powi(self, n)

    def __repr__(self):
        return f"{type(self).__name__}({render(self)!r})"


def _coerce(v) -> Expr:
    if isinstance(v, Expr):
        return v
    return Constant(float(v))


@dataclass(frozen=True, repr=False)
class Constant(Expr):
    value: float


@dataclass(frozen=True, repr=False)
class Time(Expr):
    pass


@dataclass(frozen=True, repr=False)
class State(Expr):
    index: int


@dataclass(frozen=True, repr=False)
class Param(Expr):
    index: int


@dataclass(frozen=True, repr=False)
class Sens(Expr):
    """Sensitivity variable d(state)/d(param); only valid in augmented systems."""

    state: int
    param: int


@dataclass(frozen=True, repr=False)
class Neg(Expr):
    child: Expr


@dataclass(frozen=True, repr=False)
class Sin(Expr):
    child: Expr


@dataclass(frozen=True, repr=False)
class Cos(Expr):
    child: Expr


@dataclass(frozen=True, repr=False)
class Exp(Expr):
    child: Expr


@dataclass(frozen=True, repr=False)
class Sqrt(Expr):
    child: Expr


@dataclass(frozen=True, repr=False)
class Abs(Expr):
    child: Expr


@dataclass(frozen=True, repr=False)
class PowInt(Expr):
    child: Expr
    exponent: int

    def __post_init__(self):
        if not isinstance(self.exponent, int) or self.exponent < 0:
            raise ExprError("PowInt exponent must be a non-negative integer")


@dataclass(frozen=True, repr=False)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, repr=False)
class Div(Expr):
    left: Expr
    right: Expr


ZERO = Constant(0.0)
ONE = Constant(1.0)


# -- smart constructors (the only simplification layer) ----------------------


def _is_const(e: Expr, v: float | None = None) -> bool:
    return isinstance(e, Constant) and (v is None or e.value == v)


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if isinstance(a, Constant) and isinstance(b, Constant):
        lo = _fp.add_down(a.value, b.value)
        if lo == _fp.add_up(a.value, b.value):
            return Constant(lo)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if isinstance(a, Constant) and isinstance(b, Constant):
        lo = _fp.sub_down(a.value, b.value)
        if lo == _fp.sub_up(a.value, b.value):
            return Constant(lo)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if isinstance(a, Constant) and isinstance(b, Constant):
        lo = _fp.mul_down(a.value, b.value)
        if lo == _fp.mul_up(a.value, b.value):
            return Constant(lo)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 1.0):
        return a
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Neg):
        return a.child
    if isinstance(a, Constant):
        return Constant(-a.value)
    return Neg(a)


def powi(a: Expr, n: int) -> Expr:
    if n == 0:
        return ONE
    if n == 1:
        return a
    return PowInt(a, n)


# -- evaluation ---------------------------------------------------------------


@dataclass(frozen=True)
class EvalContext:
    """Interval bindings for t, the state vector and the parameter vector.

    ``n_base`` is the number of genuine states; any further entries of ``y``
    are sensitivity blocks in parameter-major order, addressed by ``Sens``
    nodes as y[n_base + param*n_base + state].
    """

    t: Interval
    y: Box
    p: Box
    n_base: int | None = None

    def state_count(self) -> int:
        return self.n_base if self.n_base is not None else len(self.y)


def sens_slot(state: int, param: int, n_base: int) -> int:
    """Flat index of sensitivity variable (state, param) in an augmented vector."""
    return n_base + param * n_base + state


def eval_interval(e: Expr, ctx: EvalContext) -> Interval:
    """Natural inclusion function: every occurrence evaluated as an interval."""
    pair = _eval(e, (ctx.t.lo, ctx.t.hi),
                 [(c.lo, c.hi) for c in ctx.y],
                 [(c.lo, c.hi) for c in ctx.p],
                 ctx.state_count())
    return Interval._raw(pair)


def eval_point(e: Expr, t: float, y, p) -> Interval:
    """Evaluate at a point through interval arithmetic; thin-ish result."""
    pair = _eval(e, (t, t), [(v, v) for v in y], [(v, v) for v in p], len(y))
    return Interval._raw(pair)


def _eval(e: Expr, t, y, p, n_base):
    if isinstance(e, Constant):
        return (e.value, e.value)
    if isinstance(e, Time):
        return t
    if isinstance(e, State):
        if e.index >= len(y):
            raise ExprError(f"state index {e.index} out of range")
        return y[e.index]
    if isinstance(e, Param):
        if e.index >= len(p):
            raise ExprError(f"parameter index {e.index} out of range")
        return p[e.index]
    if isinstance(e, Sens):
        slot = sens_slot(e.state, e.param, n_base)
        if slot >= len(y):
            raise ExprError("sensitivity variable outside augmented state vector")
        return y[slot]
    if isinstance(e, Neg):
        return _ivops.ineg(*_eval(e.child, t, y, p, n_base))
    if isinstance(e, Sin):
        return _ivops.isin(*_eval(e.child, t, y, p, n_base))
    if isinstance(e, Cos):
        return _ivops.icos(*_eval(e.child, t, y, p, n_base))
    if isinstance(e, Exp):
        return _ivops.iexp(*_eval(e.child, t, y, p, n_base))
    if isinstance(e, Sqrt):
        return _ivops.isqrt(*_eval(e.child, t, y, p, n_base))
    if isinstance(e, Abs):
        return _ivops.iabs(*_eval(e.child, t, y, p, n_base))
    if isinstance(e, PowInt):
        return _ivops.ipowi(*_eval(e.child, t, y, p, n_base), e.exponent)
    if isinstance(e, Add):
        return _ivops.iadd(*_eval(e.left, t, y, p, n_base),
                           *_eval(e.right, t, y, p, n_base))
    if isinstance(e, Sub):
        return _ivops.isub(*_eval(e.left, t, y, p, n_base),
                           *_eval(e.right, t, y, p, n_base))
    if isinstance(e, Mul):
        return _ivops.imul(*_eval(e.left, t, y, p, n_base),
                           *_eval(e.right, t, y, p, n_base))
    if isinstance(e, Div):
        return _ivops.idiv(*_eval(e.left, t, y, p, n_base),
                           *_eval(e.right, t, y, p, n_base))
    raise ExprError(f"unknown node type {type(e).__name__}")


# -- differentiation ----------------------------------------------------------


def differentiate(e: Expr, wrt: Expr) -> Expr:
    """Exact symbolic partial derivative with respect to a leaf variable.

    ``wrt`` is one of Time, State(i), Param(j) or Sens(i, j).  Abs is not
    differentiable and raises.
    """
    if not isinstance(wrt, (Time, State, Param, Sens)):
        raise DifferentiationError("can only differentiate with respect to a variable")
    return _diff(e, wrt)


def _diff(e: Expr, v: Expr) -> Expr:
    if isinstance(e, Constant):
        return ZERO
    if isinstance(e, (Time, State, Param, Sens)):
        return ONE if e == v else ZERO
    if isinstance(e, Neg):
        return neg(_diff(e.child, v))
    if isinstance(e, Sin):
        return mul(Cos(e.child), _diff(e.child, v))
    if isinstance(e, Cos):
        return neg(mul(Sin(e.child), _diff(e.child, v)))
    if isinstance(e, Exp):
        return mul(e, _diff(e.child, v))
    if isinstance(e, Sqrt):
        return div(_diff(e.child, v), mul(Constant(2.0), e))
    if isinstance(e, Abs):
        raise DifferentiationError("abs is not differentiable")
    if isinstance(e, PowInt):
        du = _diff(e.child, v)
        return mul(mul(Constant(float(e.exponent)), powi(e.child, e.exponent - 1)), du)
    if isinstance(e, Add):
        return add(_diff(e.left, v), _diff(e.right, v))
    if isinstance(e, Sub):
        return sub(_diff(e.left, v), _diff(e.right, v))
    if isinstance(e, Mul):
        return add(mul(_diff(e.left, v), e.right), mul(e.left, _diff(e.right, v)))
    if isinstance(e, Div):
        num = sub(mul(_diff(e.left, v), e.right), mul(e.left, _diff(e.right, v)))
        return div(num, powi(e.right, 2))
    raise DifferentiationError(f"unknown node type {type(e).__name__}")


# -- validation ---------------------------------------------------------------


def validate(e: Expr, n_states: int, n_params: int, allow_sens: bool = False) -> None:
    """Check all variable indices against declared dimensions."""
    if isinstance(e, State):
        if not 0 <= e.index < n_states:
            raise ExprError(f"state y{e.index + 1} outside declared dimension {n_states}")
    elif isinstance(e, Param):
        if not 0 <= e.index < n_params:
            raise ExprError(f"parameter p{e.index + 1} outside declared dimension {n_params}")
    elif isinstance(e, Sens):
        if not allow_sens:
            raise ExprError("sensitivity variables are only valid in augmented systems")
        if not (0 <= e.state < n_states and 0 <= e.param < n_params):
            raise ExprError("sensitivity variable indices out of range")
    elif isinstance(e, (Neg, Sin, Cos, Exp, Sqrt, Abs, PowInt)):
        validate(e.child, n_states, n_params, allow_sens)
    elif isinstance(e, (Add, Sub, Mul, Div)):
        validate(e.left, n_states, n_params, allow_sens)
        validate(e.right, n_states, n_params, allow_sens)


# -- parsing ------------------------------------------------------------------

_FUNCS = {"sin": Sin, "cos": Cos, "exp": Exp, "sqrt": Sqrt, "abs": Abs}


class _Parser:
    """Recursive-descent parser for the expression grammar.

    expr   := ["-"] term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := atom ["^" int]
    atom   := number | ident | "(" expr ")" | func "(" expr ")"
    ident  := "t" | "y"<k> | "p"<k> | "u"<k>      (k >= 1)
    """

    def __init__(self, src: str):
        self.src = src
        self.pos = 0

    def parse(self) -> Expr:
        e = self.expr()
        self.skip_ws()
        if self.pos < len(self.src):
            raise ParseError(f"unexpected character {self.src[self.pos]!r}", self.pos)
        return e

    def skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def expr(self) -> Expr:
        negate = False
        if self.peek() == "-":
            self.pos += 1
            negate = True
        e = self.term()
        if negate:
            e = neg(e)
        while True:
            c = self.peek()
            if c == "+":
                self.pos += 1
                e = add(e, self.term())
            elif c == "-":
                self.pos += 1
                e = sub(e, self.term())
            else:
                return e

    def term(self) -> Expr:
        e = self.factor()
        while True:
            c = self.peek()
            if c == "*":
                self.pos += 1
                e = mul(e, self.factor())
            elif c == "/":
                self.pos += 1
                e = div(e, self.factor())
            else:
                return e

    def factor(self) -> Expr:
        e = self.atom()
        if self.peek() == "^":
            self.pos += 1
            self.skip_ws()
            start = self.pos
            while self.pos < len(self.src) and self.src[self.pos].isdigit():
                self.pos += 1
            if self.pos == start:
                raise ParseError("expected integer exponent after '^'", start)
            e = powi(e, int(self.src[start:self.pos]))
        return e

    def atom(self) -> Expr:
        c = self.peek()
        start = self.pos
        if c == "(":
            self.pos += 1
            e = self.expr()
            if self.peek() != ")":
                raise ParseError("expected ')'", self.pos)
            self.pos += 1
            return e
        if c.isdigit() or c == ".":
            return self.number()
        if c.isalpha():
            while self.pos < len(self.src) and self.src[self.pos].isalnum():
                self.pos += 1
            name = self.src[start:self.pos]
            if name in _FUNCS:
                if self.peek() != "(":
                    raise ParseError(f"expected '(' after {name}", self.pos)
                self.pos += 1
                arg = self.expr()
                if self.peek() != ")":
                    raise ParseError("expected ')'", self.pos)
                self.pos += 1
                return _FUNCS[name](arg)
            return self.ident(name, start)
        raise ParseError("expected a number, variable or '('", self.pos)

    def ident(self, name: str, start: int) -> Expr:
        if name == "t":
            return Time()
        kind, digits = name[0], name[1:]
        if kind in ("y", "p", "u") and digits.isdigit() and int(digits) >= 1:
            idx = int(digits) - 1
            return State(idx) if kind == "y" else Param(idx)
        raise ParseError(f"unknown identifier {name!r}", start)

    def number(self) -> Expr:
        start = self.pos
        s = self.src
        while self.pos < len(s) and (s[self.pos].isdigit() or s[self.pos] == "."):
            self.pos += 1
        if self.pos < len(s) and s[self.pos] in "eE":
            mark = self.pos
            self.pos += 1
            if self.pos < len(s) and s[self.pos] in "+-":
                self.pos += 1
            if self.pos < len(s) and s[self.pos].isdigit():
                while self.pos < len(s) and s[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = mark  # not an exponent after all
        text = s[start:self.pos]
        try:
            return Constant(float(text))
        except ValueError:
            raise ParseError(f"bad numeric literal {text!r}", start) from None


def parse(src: str) -> Expr:
    return _Parser(src).parse()


# -- rendering ----------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_POW, _PREC_ATOM = 0, 1, 2, 3


def render(e: Expr, param_prefix: str = "p") -> str:
    """Text form that reparses to a structurally equal tree."""
    return _render(e, param_prefix)[0]


def _render(e: Expr, pp: str):
    if isinstance(e, Constant):
        v = e.value
        if v < 0 or (v == 0 and math.copysign(1.0, v) < 0):
            return f"-{-v!r}", _PREC_ADD  # Neg-like: parenthesized by context
        return repr(v), _PREC_ATOM
    if isinstance(e, Time):
        return "t", _PREC_ATOM
    if isinstance(e, State):
        return f"y{e.index + 1}", _PREC_ATOM
    if isinstance(e, Param):
        return f"{pp}{e.index + 1}", _PREC_ATOM
    if isinstance(e, Sens):
        # internal notation; not part of the parseable grammar
        return f"<s{e.state + 1}/{pp}{e.param + 1}>", _PREC_ATOM
    if isinstance(e, Neg):
        s, prec = _render(e.child, pp)
        if prec < _PREC_MUL:
            s = f"({s})"
        return f"-{s}", _PREC_ADD
    for cls, name in ((Sin, "sin"), (Cos, "cos"), (Exp, "exp"), (Sqrt, "sqrt"), (Abs, "abs")):
        if isinstance(e, cls):
            return f"{name}({_render(e.child, pp)[0]})", _PREC_ATOM
    if isinstance(e, PowInt):
        s, prec = _render(e.child, pp)
        if prec < _PREC_ATOM:
            s = f"({s})"
        return f"{s}^{e.exponent}", _PREC_POW
    if isinstance(e, (Add, Sub)):
        ls, lp = _render(e.left, pp)
        rs, rp = _render(e.right, pp)
        opc = "+" if isinstance(e, Add) else "-"
        # the grammar is left-associative, so any add-level right operand
        # needs parentheses to reparse to the same tree
        if rp <= _PREC_ADD:
            rs = f"({rs})"
        return f"{ls} {opc} {rs}", _PREC_ADD
    if isinstance(e, (Mul, Div)):
        ls, lp = _render(e.left, pp)
        rs, rp = _render(e.right, pp)
        if lp < _PREC_MUL:
            ls = f"({ls})"
        opc = "*" if isinstance(e, Mul) else "/"
        if rp <= _PREC_MUL:
            rs = f"({rs})"
        return f"{ls}{opc}{rs}", _PREC_MUL
    raise ExprError(f"cannot render {type(e).__name__}")
