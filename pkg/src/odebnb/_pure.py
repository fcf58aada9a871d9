"""Pure-Python tape kernels: the fallback backend.

Implements the same four entry points as the compiled core (``_core``):
order-0 tape evaluation, interval Taylor coefficient propagation for ODE
flows, the Picard ``a priori`` enclosure iteration, and the tightened
Taylor step.  Semantics (including rounding) are identical to the compiled
backend; only speed differs.

Intervals are (lo, hi) float tuples here; boxes are lists of tuples.
Status codes: 0 ok, 1 no contracting enclosure above the minimal step,
2 abs() hit with a sign-indefinite argument at order >= 1, 3 empty result.
"""

from __future__ import annotations

from ._fp import add_up, sub_down, sub_up
from ._ivops import (
    iabs,
    iadd,
    icos,
    idiv,
    idiv_int,
    iexp,
    ihull,
    imul,
    imul_int,
    ineg,
    ipowi,
    isin,
    isqrt,
    isub,
    iwidth,
)
from .tape import (
    OP_ABS,
    OP_ADD,
    OP_CONST,
    OP_DIV,
    OP_EXP,
    OP_MUL,
    OP_NEG,
    OP_PARAM,
    OP_POWSTEP,
    OP_SINCOS,
    OP_SQR,
    OP_SQRT,
    OP_STATE,
    OP_SUB,
    OP_TIME,
)

BACKEND_NAME = "python"

OK = 0
NO_ENCLOSURE = 1
ABS_KINK = 2
EMPTY_RESULT = 3
STEP_LIMIT = 4

_Z = (0.0, 0.0)


def _conv(a, b, q):
    """Order-q coefficient of the product of two coefficient sequences."""
    acc = _Z
    for j in range(q + 1):
        acc = iadd(*acc, *imul(*a[j], *b[q - j]))
    return acc


def _propagate(rows, consts, regs, q, t, Y, P):
    """Fill order q of every register; lower orders must already be present."""
    for op, out, a, b, c in rows:
        if op == OP_CONST:
            v = consts[a]
            r = (v, v) if q == 0 else _Z
        elif op == OP_TIME:
            r = t if q == 0 else ((1.0, 1.0) if q == 1 else _Z)
        elif op == OP_STATE:
            r = Y[a][q]
        elif op == OP_PARAM:
            r = P[a] if q == 0 else _Z
        elif op == OP_ADD:
            r = iadd(*regs[a][q], *regs[b][q])
        elif op == OP_SUB:
            r = isub(*regs[a][q], *regs[b][q])
        elif op == OP_MUL:
            r = _conv(regs[a], regs[b], q)
        elif op == OP_DIV:
            den = regs[b]
            acc = regs[a][q]
            w = regs[out]
            for j in range(q):
                acc = isub(*acc, *imul(*w[j], *den[q - j]))
            r = idiv(*acc, *den[0])
        elif op == OP_NEG:
            r = ineg(*regs[a][q])
        elif op == OP_ABS:
            if q == 0:
                r = iabs(*regs[a][q])
            else:
                a0 = regs[a][0]
                if a0[0] > 0.0:
                    r = regs[a][q]
                elif a0[1] < 0.0:
                    r = ineg(*regs[a][q])
                else:
                    return ABS_KINK
        elif op == OP_SQR:
            if q == 0:
                r = ipowi(*regs[a][0], 2)
            else:
                r = _conv(regs[a], regs[a], q)
        elif op == OP_POWSTEP:
            if q == 0:
                r = ipowi(*regs[b][0], c)
            else:
                r = _conv(regs[a], regs[b], q)
        elif op == OP_SQRT:
            u = regs[a]
            w = regs[out]
            if q == 0:
                r = isqrt(*u[0])
            else:
                acc = u[q]
                for j in range(1, q):
                    acc = isub(*acc, *imul(*w[j], *w[q - j]))
                r = idiv(*acc, *imul_int(*w[0], 2))
        elif op == OP_EXP:
            u = regs[a]
            w = regs[out]
            if q == 0:
                r = iexp(*u[0])
            else:
                acc = _Z
                for j in range(1, q + 1):
                    acc = iadd(*acc, *imul(*imul_int(*u[j], j), *w[q - j]))
                r = idiv_int(*acc, q)
        elif op == OP_SINCOS:
            u = regs[a]
            s = regs[out]
            co = regs[c]
            if q == 0:
                regs[out][0] = isin(*u[0])
                regs[c][0] = icos(*u[0])
                continue
            acc_s = _Z
            acc_c = _Z
            for j in range(1, q + 1):
                ju = imul_int(*u[j], j)
                acc_s = iadd(*acc_s, *imul(*ju, *co[q - j]))
                acc_c = iadd(*acc_c, *imul(*ju, *s[q - j]))
            regs[out][q] = idiv_int(*acc_s, q)
            regs[c][q] = ineg(*idiv_int(*acc_c, q))
            continue
        else:
            raise ValueError(f"bad opcode {op}")
        regs[out][q] = r
    return OK


def _fresh_regs(n_regs, k):
    return [[_Z] * (k + 1) for _ in range(n_regs)]


def eval_tape(tape, t_lo, t_hi, y, p):
    """Order-0 (natural inclusion) evaluation; returns list of (lo, hi)."""
    rows = tape.rows()
    consts = tape.consts.tolist()
    regs = _fresh_regs(tape.n_regs, 0)
    Y = [[pair] for pair in y]
    status = _propagate(rows, consts, regs, 0, (t_lo, t_hi), Y, list(p))
    if status != OK:  # unreachable at order 0, kept for symmetry
        raise AssertionError("order-0 propagation cannot fail")
    return [regs[r][0] for r in tape.out_regs]


def ode_coeffs(tape, k, t_lo, t_hi, y0, p):
    """Interval Taylor coefficients Y[0..k] of the flow of y' = f(t, y, p).

    ``y0`` bounds the solution values and [t_lo, t_hi] the expansion point;
    with a thin time and the grid box this yields the series terms, with
    the step interval and the a-priori box it bounds the remainder term.
    """
    rows = tape.rows()
    consts = tape.consts.tolist()
    n = tape.n_state
    regs = _fresh_regs(tape.n_regs, k)
    Y = [[_Z] * (k + 1) for _ in range(n)]
    for i in range(n):
        Y[i][0] = y0[i]
    P = list(p)
    t = (t_lo, t_hi)
    outs = tape.out_regs
    for q in range(k):
        status = _propagate(rows, consts, regs, q, t, Y, P)
        if status != OK:
            return status, None
        for i in range(n):
            fq = regs[outs[i]][q]
            if fq[0] > fq[1]:
                return EMPTY_RESULT, None
            Y[i][q + 1] = idiv_int(*fq, q + 1)
    return OK, Y


def picard(tape, tj, h0, hmin, y, p, alpha, delta, max_iter):
    """Find (t_next, ytilde) with the Picard contraction over [tj, t_next].

    Starts from an inflated candidate and iterates
    ``P(c) = y + [0, h] * f([tj, t_next], c, p)``; success once P(c) lies
    inside c, which proves existence, uniqueness and enclosure of the flow
    on the whole step.  The step is halved on failure, down to hmin.
    """
    n = tape.n_state
    y = list(y)
    p = list(p)
    h = h0
    while True:
        t_next = tj + h
        hw = sub_up(t_next, tj)
        cand = []
        for yi in y:
            r = alpha * iwidth(*yi) + delta
            cand.append((sub_down(yi[0], r), add_up(yi[1], r)))
        accepted = False
        for _ in range(max_iter):
            F = eval_tape(tape, tj, t_next, cand, p)
            nxt = []
            bad = False
            inside = True
            for i in range(n):
                pi = iadd(*y[i], *imul(0.0, hw, *F[i]))
                if pi[0] > pi[1]:
                    bad = True
                    break
                if pi[0] < cand[i][0] or pi[1] > cand[i][1]:
                    inside = False
                nxt.append(pi)
            if bad:
                break
            if inside:
                cand = nxt
                accepted = True
                break
            # grow only towards the inflated image so that components that
            # already contract stop moving (racing inflation stalls the test)
            grown = []
            for i in range(n):
                r = alpha * iwidth(*nxt[i]) + delta
                infl = (sub_down(nxt[i][0], r), add_up(nxt[i][1], r))
                grown.append(ihull(*cand[i], *infl))
            cand = grown
        if accepted:
            # one extra application tightens and stays inside by monotonicity
            F = eval_tape(tape, tj, t_next, cand, p)
            tight = [iadd(*y[i], *imul(0.0, hw, *F[i])) for i in range(n)]
            return OK, t_next, tight
        h *= 0.5
        if h < hmin:
            return NO_ENCLOSURE, tj, y


def integrate_loop(tape, k, t0, tf, h0, hmin, alpha, delta, max_iter,
                   max_steps, y0, p):
    """Full two-stage integration over [t0, tf].

    Returns (status, t_reached, grid, panels) where grid is a list of
    (t, [(lo, hi), ...]) rows and panels a list of (ta, tb, boxpairs).
    On failure the partial grid/panels up to t_reached are still returned.
    """
    t = t0
    y = list(y0)
    grid = [(t0, list(y0))]
    panels = []
    steps = 0
    while t < tf:
        remaining = sub_up(tf, t)
        h_try = h0 if h0 < remaining else remaining
        hmin_eff = hmin if hmin < remaining else remaining
        status, t_next, ytilde = picard(tape, t, h_try, hmin_eff, y, p,
                                        alpha, delta, max_iter)
        if status != OK:
            return status, t, grid, panels
        t_grid = tf if t_next >= tf else t_next
        status, y_next = taylor_step(tape, k, t, t_grid, y, p, ytilde)
        if status != OK:
            return status, t, grid, panels
        grid.append((t_grid, y_next))
        panels.append((t, t_grid, ytilde))
        t, y = t_grid, y_next
        steps += 1
        if steps > max_steps:
            return STEP_LIMIT, t, grid, panels
    return OK, t, grid, panels


def taylor_step(tape, k, tj, tj1, y, p, ytilde):
    """Tightened enclosure at tj1: Taylor terms at (tj, y) plus the
    order-k remainder evaluated on ([tj, tj1], ytilde), clipped by ytilde."""
    status, C = ode_coeffs(tape, k - 1, tj, tj, y, p)
    if status != OK:
        return status, None
    status, R = ode_coeffs(tape, k, tj, tj1, ytilde, p)
    if status != OK:
        return status, None
    h = isub(tj1, tj1, tj, tj)
    hk = ipowi(*h, k)
    out = []
    for i in range(tape.n_state):
        acc = C[i][k - 1]
        for q in range(k - 2, -1, -1):
            acc = iadd(*C[i][q], *imul(*acc, *h))
        res = iadd(*acc, *imul(*R[i][k], *hk))
        lo = max(res[0], ytilde[i][0])
        hi = min(res[1], ytilde[i][1])
        if lo > hi:
            return EMPTY_RESULT, None
        out.append((lo, hi))
    return OK, out
