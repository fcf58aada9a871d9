"""Flat evaluation tapes for the numeric kernels.

Expression trees are walked once and flattened into an instruction array
(op, out, a, b, c) over virtual interval registers.  The kernels (compiled
or pure Python) then evaluate the tape order by order: plain interval
evaluation is order 0, and the validated integrator reuses the same tape
to propagate interval Taylor coefficients of the ODE flow.

Integer powers are lowered to a SQR / POWSTEP chain so that each
intermediate power can use the tight even-power rule at order 0 while
higher orders use the product convolution.  Sin and cos are fused into a
single SINCOS op because their Taylor recurrences are coupled.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import expr as ex

OP_CONST = 0
OP_TIME = 1
OP_STATE = 2
OP_PARAM = 3
OP_ADD = 4
OP_SUB = 5
OP_MUL = 6
OP_DIV = 7
OP_NEG = 8
OP_ABS = 9
OP_SQR = 10
OP_POWSTEP = 11  # out = prev * base, order 0 tightened as base**c
OP_SQRT = 12
OP_EXP = 13
OP_SINCOS = 14  # out = sin(a), register c = cos(a)


@dataclass(frozen=True, eq=False)
class Tape:
    code: np.ndarray  # (L, 5) int32 rows: op, out, a, b, c
    consts: np.ndarray  # (n_consts,) float64
    n_regs: int
    out_regs: np.ndarray  # (n_out,) int32
    n_state: int
    n_param: int
    has_abs: bool = False
    _rows: list = field(default_factory=list, compare=False, repr=False)

    def rows(self) -> list:
        """Instruction rows as plain tuples (cached; used by the pure backend)."""
        if not self._rows:
            self._rows.extend(tuple(int(v) for v in r) for r in self.code)
        return self._rows


class _Compiler:
    def __init__(self, n_state: int, n_param: int, sens_base: int | None):
        self.n_state = n_state
        self.n_param = n_param
        self.sens_base = sens_base
        self.code: list[tuple[int, int, int, int, int]] = []
        self.consts: list[float] = []
        self.n_regs = 0
        self.has_abs = False

    def new_reg(self) -> int:
        r = self.n_regs
        self.n_regs += 1
        return r

    def emit(self, op: int, a: int = -1, b: int = -1, c: int = -1) -> int:
        out = self.new_reg()
        self.code.append((op, out, a, b, c))
        return out

    def const(self, v: float) -> int:
        self.consts.append(v)
        return self.emit(OP_CONST, len(self.consts) - 1)

    def compile(self, e: ex.Expr) -> int:
        if isinstance(e, ex.Constant):
            return self.const(e.value)
        if isinstance(e, ex.Time):
            return self.emit(OP_TIME)
        if isinstance(e, ex.State):
            if not 0 <= e.index < self.n_state:
                raise ex.ExprError(f"state y{e.index + 1} out of range for tape")
            return self.emit(OP_STATE, e.index)
        if isinstance(e, ex.Param):
            if not 0 <= e.index < self.n_param:
                raise ex.ExprError(f"parameter {e.index + 1} out of range for tape")
            return self.emit(OP_PARAM, e.index)
        if isinstance(e, ex.Sens):
            if self.sens_base is None:
                raise ex.ExprError("sensitivity variable in a non-augmented system")
            slot = ex.sens_slot(e.state, e.param, self.sens_base)
            if not 0 <= slot < self.n_state:
                raise ex.ExprError("sensitivity slot out of range for tape")
            return self.emit(OP_STATE, slot)
        if isinstance(e, ex.Neg):
            return self.emit(OP_NEG, self.compile(e.child))
        if isinstance(e, ex.Abs):
            self.has_abs = True
            return self.emit(OP_ABS, self.compile(e.child))
        if isinstance(e, ex.Sqrt):
            return self.emit(OP_SQRT, self.compile(e.child))
        if isinstance(e, ex.Exp):
            return self.emit(OP_EXP, self.compile(e.child))
        if isinstance(e, ex.Sin):
            a = self.compile(e.child)
            cos_reg = self.new_reg()
            sin_reg = self.new_reg()
            self.code.append((OP_SINCOS, sin_reg, a, -1, cos_reg))
            return sin_reg
        if isinstance(e, ex.Cos):
            a = self.compile(e.child)
            cos_reg = self.new_reg()
            sin_reg = self.new_reg()
            self.code.append((OP_SINCOS, sin_reg, a, -1, cos_reg))
            return cos_reg
        if isinstance(e, ex.PowInt):
            base = self.compile(e.child)
            n = e.exponent
            if n == 0:
                return self.const(1.0)
            if n == 1:
                return base
            reg = self.emit(OP_SQR, base)
            for m in range(3, n + 1):
                reg = self.emit(OP_POWSTEP, reg, base, m)
            return reg
        if isinstance(e, ex.Add):
            return self.emit(OP_ADD, self.compile(e.left), self.compile(e.right))
        if isinstance(e, ex.Sub):
            return self.emit(OP_SUB, self.compile(e.left), self.compile(e.right))
        if isinstance(e, ex.Mul):
            return self.emit(OP_MUL, self.compile(e.left), self.compile(e.right))
        if isinstance(e, ex.Div):
            return self.emit(OP_DIV, self.compile(e.left), self.compile(e.right))
        raise ex.ExprError(f"cannot compile node {type(e).__name__}")


def compile_exprs(exprs, n_state: int, n_param: int,
                  sens_base: int | None = None) -> Tape:
    """Compile a list of expressions into one multi-output tape.

    ``n_state`` is the full state vector length seen by the tape (including
    sensitivity blocks for augmented systems); ``sens_base`` is the base
    state count used to flatten Sens nodes.
    """
    c = _Compiler(n_state, n_param, sens_base)
    out_regs = [c.compile(e) for e in exprs]
    code = np.array(c.code, dtype=np.int32).reshape(len(c.code), 5)
    return Tape(
        code=code,
        consts=np.array(c.consts, dtype=np.float64),
        n_regs=c.n_regs,
        out_regs=np.array(out_regs, dtype=np.int32),
        n_state=n_state,
        n_param=n_param,
        has_abs=c.has_abs,
    )
