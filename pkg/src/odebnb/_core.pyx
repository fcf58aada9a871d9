# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled interval tape kernels.

Same contract and rounding semantics as the pure backend (``_pure``);
exactness of mul/div/sqrt bounds is decided with an fma residual instead
of rational arithmetic.  See _pure.py for documentation of the entry
points and status codes.
"""

from libc.float cimport DBL_MAX
from libc.math cimport (INFINITY, ceil, cos, exp, fabs, floor, fma,
                        isfinite, isinf, isnan, nextafter, sin, sqrt)
from libc.stdint cimport uint64_t

cdef extern from "string.h":
    void *memcpy(void *dest, const void *src, size_t n) nogil

import numpy as np

BACKEND_NAME = "c"

OK = 0
NO_ENCLOSURE = 1
ABS_KINK = 2
EMPTY_RESULT = 3
STEP_LIMIT = 4

cdef int _OK = 0
cdef int _NO_ENCLOSURE = 1
cdef int _ABS_KINK = 2
cdef int _EMPTY_RESULT = 3

# opcode values mirror odebnb.tape
cdef enum:
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
    OP_POWSTEP = 11
    OP_SQRT = 12
    OP_EXP = 13
    OP_SINCOS = 14

cdef double SAFE_MIN = 1e-300
cdef double PI_LO = 3.141592653589793
cdef double PI_HI = nextafter(3.141592653589793, INFINITY)


# ---------------------------------------------------------------------------
# directed scalar arithmetic (mirrors _fp.py)
# ---------------------------------------------------------------------------

# bit-twiddled nextafter for finite arguments (callers guarantee finiteness
# and non-NaN); matches nextafter(x, +-inf) exactly, including across zero
cdef inline double next_down(double x) nogil:
    cdef uint64_t bits
    cdef double out
    if x == 0.0:
        return -4.9406564584124654e-324
    memcpy(&bits, &x, 8)
    if bits >> 63:
        bits += 1
    else:
        bits -= 1
    memcpy(&out, &bits, 8)
    return out


cdef inline double next_up(double x) nogil:
    cdef uint64_t bits
    cdef double out
    if x == 0.0:
        return 4.9406564584124654e-324
    memcpy(&bits, &x, 8)
    if bits >> 63:
        bits -= 1
    else:
        bits += 1
    memcpy(&out, &bits, 8)
    return out


cdef inline double _twosum_err(double a, double b, double s) nogil:
    cdef double bv = s - a
    cdef double av = s - bv
    return (a - av) + (b - bv)


cdef inline double add_down(double a, double b) nogil:
    cdef double s = a + b
    cdef double e
    if not isfinite(s):
        if s == INFINITY and isfinite(a) and isfinite(b):
            return DBL_MAX
        return s
    e = _twosum_err(a, b, s)
    return s if e >= 0.0 else next_down(s)


cdef inline double add_up(double a, double b) nogil:
    cdef double s = a + b
    cdef double e
    if not isfinite(s):
        if s == -INFINITY and isfinite(a) and isfinite(b):
            return -DBL_MAX
        return s
    e = _twosum_err(a, b, s)
    return s if e <= 0.0 else next_up(s)


cdef inline double sub_down(double a, double b) nogil:
    return add_down(a, -b)


cdef inline double sub_up(double a, double b) nogil:
    return add_up(a, -b)


cdef inline double mul_down(double a, double b) nogil:
    cdef double p, e
    if a == 0.0 or b == 0.0:
        return 0.0
    p = a * b
    if not isfinite(p):
        if p == INFINITY and isfinite(a) and isfinite(b):
            return DBL_MAX
        return p
    if fabs(p) < SAFE_MIN:
        return next_down(p)
    e = fma(a, b, -p)  # exact error of the rounded product
    return p if e >= 0.0 else next_down(p)


cdef inline double mul_up(double a, double b) nogil:
    cdef double p, e
    if a == 0.0 or b == 0.0:
        return 0.0
    p = a * b
    if not isfinite(p):
        if p == -INFINITY and isfinite(a) and isfinite(b):
            return -DBL_MAX
        return p
    if fabs(p) < SAFE_MIN:
        return next_up(p)
    e = fma(a, b, -p)
    return p if e <= 0.0 else next_up(p)


cdef inline double div_down(double a, double b) nogil:
    cdef double q, r
    if a == 0.0:
        return 0.0
    if isinf(b):
        return a / b
    if isinf(a):
        return INFINITY if (a > 0) == (b > 0) else -INFINITY
    q = a / b
    if not isfinite(q):
        if q == INFINITY:
            return DBL_MAX
        return q
    if fabs(q) < SAFE_MIN or fabs(a) < SAFE_MIN:
        return next_down(q)
    r = fma(q, b, -a)  # sign of q*b - a
    if r == 0.0:
        return q
    # true quotient > q  iff  (a - q b)/b > 0  iff  (r < 0) == (b > 0)
    return q if (r < 0.0) == (b > 0.0) else next_down(q)


cdef inline double div_up(double a, double b) nogil:
    cdef double q, r
    if a == 0.0:
        return 0.0
    if isinf(b):
        return a / b
    if isinf(a):
        return INFINITY if (a > 0) == (b > 0) else -INFINITY
    q = a / b
    if not isfinite(q):
        if q == -INFINITY:
            return -DBL_MAX
        return q
    if fabs(q) < SAFE_MIN or fabs(a) < SAFE_MIN:
        return next_up(q)
    r = fma(q, b, -a)
    if r == 0.0:
        return q
    return q if (r < 0.0) != (b > 0.0) else next_up(q)


cdef inline double sqrt_down(double a) nogil:
    cdef double s, r
    if a == 0.0:
        return 0.0
    if a == INFINITY:
        return INFINITY
    s = sqrt(a)
    if s < SAFE_MIN:
        return next_down(s)
    r = fma(s, s, -a)
    if r == 0.0:
        return s
    return next_down(s) if r > 0.0 else s


cdef inline double sqrt_up(double a) nogil:
    cdef double s, r
    if a == 0.0:
        return 0.0
    if a == INFINITY:
        return INFINITY
    s = sqrt(a)
    if s < SAFE_MIN:
        return next_up(s)
    r = fma(s, s, -a)
    if r == 0.0:
        return s
    return next_up(s) if r < 0.0 else s


cdef inline double exp_down(double x) nogil:
    cdef double v
    if x == 0.0:
        return 1.0
    if x == -INFINITY:
        return 0.0
    if x == INFINITY:
        return DBL_MAX
    v = exp(x)
    if isinf(v):
        return DBL_MAX
    v = next_down(next_down(v))
    return v if v > 0.0 else 0.0


cdef inline double exp_up(double x) nogil:
    cdef double v
    if x == 0.0:
        return 1.0
    if x == INFINITY:
        return INFINITY
    if x == -INFINITY:
        return 0.0
    v = exp(x)
    if isinf(v):
        return INFINITY
    return next_up(next_up(v))


cdef inline double sin_down(double x) nogil:
    cdef double v
    if x == 0.0:
        return 0.0
    v = next_down(next_down(sin(x)))
    return v if v > -1.0 else -1.0


cdef inline double sin_up(double x) nogil:
    cdef double v
    if x == 0.0:
        return 0.0
    v = next_up(next_up(sin(x)))
    return v if v < 1.0 else 1.0


cdef inline double cos_down(double x) nogil:
    cdef double v
    if x == 0.0:
        return 1.0
    v = next_down(next_down(cos(x)))
    return v if v > -1.0 else -1.0


cdef inline double cos_up(double x) nogil:
    cdef double v
    if x == 0.0:
        return 1.0
    v = next_up(next_up(cos(x)))
    return v if v < 1.0 else 1.0


# ---------------------------------------------------------------------------
# interval ops on (lo, hi) pairs (mirrors _ivops.py)
# ---------------------------------------------------------------------------

cdef struct IV:
    double lo
    double hi


cdef inline IV mk(double lo, double hi) nogil:
    cdef IV r
    r.lo = lo
    r.hi = hi
    return r


cdef inline IV mk_empty() nogil:
    return mk(INFINITY, -INFINITY)


cdef inline IV _scrub(double lo, double hi) nogil:
    if isnan(lo):
        lo = -INFINITY
    if isnan(hi):
        hi = INFINITY
    return mk(lo, hi)


cdef inline IV iadd(IV a, IV b) nogil:
    if a.lo > a.hi or b.lo > b.hi:
        return mk_empty()
    return _scrub(add_down(a.lo, b.lo), add_up(a.hi, b.hi))


cdef inline IV isub(IV a, IV b) nogil:
    if a.lo > a.hi or b.lo > b.hi:
        return mk_empty()
    return _scrub(sub_down(a.lo, b.hi), sub_up(a.hi, b.lo))


cdef inline IV ineg(IV a) nogil:
    if a.lo > a.hi:
        return mk_empty()
    return mk(-a.hi, -a.lo)


cdef inline IV imul(IV a, IV b) nogil:
    # sign-case analysis; picks the same extremal endpoint pairs as the
    # four-product hull, so results match the reference backend exactly
    cdef double lo, hi, v
    if a.lo > a.hi or b.lo > b.hi:
        return mk_empty()
    if a.lo >= 0.0:
        if b.lo >= 0.0:
            lo = mul_down(a.lo, b.lo)
            hi = mul_up(a.hi, b.hi)
        elif b.hi <= 0.0:
            lo = mul_down(a.hi, b.lo)
            hi = mul_up(a.lo, b.hi)
        else:
            lo = mul_down(a.hi, b.lo)
            hi = mul_up(a.hi, b.hi)
    elif a.hi <= 0.0:
        if b.lo >= 0.0:
            lo = mul_down(a.lo, b.hi)
            hi = mul_up(a.hi, b.lo)
        elif b.hi <= 0.0:
            lo = mul_down(a.hi, b.hi)
            hi = mul_up(a.lo, b.lo)
        else:
            lo = mul_down(a.lo, b.hi)
            hi = mul_up(a.lo, b.lo)
    else:
        if b.lo >= 0.0:
            lo = mul_down(a.lo, b.hi)
            hi = mul_up(a.hi, b.hi)
        elif b.hi <= 0.0:
            lo = mul_down(a.hi, b.lo)
            hi = mul_up(a.lo, b.lo)
        else:
            lo = mul_down(a.lo, b.hi)
            v = mul_down(a.hi, b.lo)
            if v < lo:
                lo = v
            hi = mul_up(a.lo, b.lo)
            v = mul_up(a.hi, b.hi)
            if v > hi:
                hi = v
    return _scrub(lo, hi)


cdef inline IV idiv(IV a, IV b) nogil:
    cdef double lo, hi, v
    if a.lo > a.hi or b.lo > b.hi:
        return mk_empty()
    if b.lo <= 0.0 <= b.hi:
        return mk(-INFINITY, INFINITY)
    if b.lo > 0.0:
        lo = div_down(a.lo, b.lo)
        v = div_down(a.lo, b.hi)
        if v < lo:
            lo = v
        hi = div_up(a.hi, b.lo)
        v = div_up(a.hi, b.hi)
        if v > hi:
            hi = v
    else:
        lo = div_down(a.hi, b.lo)
        v = div_down(a.hi, b.hi)
        if v < lo:
            lo = v
        hi = div_up(a.lo, b.lo)
        v = div_up(a.lo, b.hi)
        if v > hi:
            hi = v
    return _scrub(lo, hi)


cdef inline IV iabs(IV a) nogil:
    if a.lo > a.hi:
        return mk_empty()
    if a.lo >= 0.0:
        return a
    if a.hi <= 0.0:
        return mk(-a.hi, -a.lo)
    return mk(0.0, (-a.lo) if -a.lo > a.hi else a.hi)


cdef inline IV _thin_pow(double v, int n) nogil:
    cdef IV r = mk(v, v)
    cdef IV base = mk(v, v)
    cdef int i
    for i in range(n - 1):
        r = imul(r, base)
    return r


cdef inline IV ipowi(IV a, int n) nogil:
    cdef IV lo_p, hi_p
    cdef double m1, m2
    if a.lo > a.hi:
        return mk_empty()
    if n == 0:
        return mk(1.0, 1.0)
    if n == 1:
        return a
    if n % 2 == 1:
        return mk(_thin_pow(a.lo, n).lo, _thin_pow(a.hi, n).hi)
    if a.lo >= 0.0:
        return mk(_thin_pow(a.lo, n).lo, _thin_pow(a.hi, n).hi)
    if a.hi <= 0.0:
        return mk(_thin_pow(a.hi, n).lo, _thin_pow(a.lo, n).hi)
    m1 = _thin_pow(a.lo, n).hi
    m2 = _thin_pow(a.hi, n).hi
    return mk(0.0, m1 if m1 > m2 else m2)


cdef inline IV isqrt(IV a) nogil:
    cdef double lo
    if a.lo > a.hi:
        return mk_empty()
    if a.hi < 0.0:
        return mk_empty()
    lo = a.lo if a.lo > 0.0 else 0.0
    return mk(sqrt_down(lo), sqrt_up(a.hi))


cdef inline IV iexp(IV a) nogil:
    if a.lo > a.hi:
        return mk_empty()
    return mk(exp_down(a.lo), exp_up(a.hi))


cdef bint _hits_extremum(double alo, double ahi, int frac) nogil:
    cdef double two_pi_lo = 2.0 * PI_LO
    cdef double two_pi_hi = 2.0 * PI_HI
    cdef double f_lo, f_hi, kf, c_lo, c_hi
    cdef long long k, k0, k1
    if frac == 0:
        f_lo = 0.0
        f_hi = 0.0
    elif frac == 1:
        f_lo = 0.5 * PI_LO
        f_hi = 0.5 * PI_HI
    elif frac == -1:
        f_lo = -0.5 * PI_HI
        f_hi = -0.5 * PI_LO
    else:
        f_lo = PI_LO
        f_hi = PI_HI
    k0 = <long long>floor(alo / two_pi_hi) - 1
    k1 = <long long>ceil(ahi / two_pi_lo) + 1
    for k in range(k0, k1 + 1):
        kf = <double>k
        if kf >= 0.0:
            c_lo = add_down(f_lo, mul_down(two_pi_lo, kf))
            c_hi = add_up(f_hi, mul_up(two_pi_hi, kf))
        else:
            c_lo = add_down(f_lo, mul_down(two_pi_hi, kf))
            c_hi = add_up(f_hi, mul_up(two_pi_lo, kf))
        if c_hi >= alo and c_lo <= ahi:
            return True
    return False


cdef inline IV isin(IV a) nogil:
    cdef double lo, hi, v
    if a.lo > a.hi:
        return mk_empty()
    if a.hi - a.lo >= 2.0 * PI_LO or fabs(a.lo) > 1e15 or fabs(a.hi) > 1e15:
        return mk(-1.0, 1.0)
    lo = sin_down(a.lo)
    v = sin_down(a.hi)
    if v < lo:
        lo = v
    hi = sin_up(a.lo)
    v = sin_up(a.hi)
    if v > hi:
        hi = v
    if _hits_extremum(a.lo, a.hi, 1):
        hi = 1.0
    if _hits_extremum(a.lo, a.hi, -1):
        lo = -1.0
    return mk(lo, hi)


cdef inline IV icos(IV a) nogil:
    cdef double lo, hi, v
    if a.lo > a.hi:
        return mk_empty()
    if a.hi - a.lo >= 2.0 * PI_LO or fabs(a.lo) > 1e15 or fabs(a.hi) > 1e15:
        return mk(-1.0, 1.0)
    lo = cos_down(a.lo)
    v = cos_down(a.hi)
    if v < lo:
        lo = v
    hi = cos_up(a.lo)
    v = cos_up(a.hi)
    if v > hi:
        hi = v
    if _hits_extremum(a.lo, a.hi, 0):
        hi = 1.0
    if _hits_extremum(a.lo, a.hi, 2):
        lo = -1.0
    return mk(lo, hi)


cdef inline IV ihull(IV a, IV b) nogil:
    if a.lo > a.hi:
        return b
    if b.lo > b.hi:
        return a
    return mk(a.lo if a.lo < b.lo else b.lo, a.hi if a.hi > b.hi else b.hi)


cdef inline double iwidth(IV a) nogil:
    if a.lo > a.hi:
        return 0.0
    return sub_up(a.hi, a.lo)


cdef inline IV idiv_int(IV a, int n) nogil:
    cdef double nf = <double>n
    return idiv(a, mk(nf, nf))


cdef inline IV imul_int(IV a, int n) nogil:
    cdef double nf = <double>n
    return imul(a, mk(nf, nf))


# ---------------------------------------------------------------------------
# tape propagation
# ---------------------------------------------------------------------------

cdef inline IV _get(double[:, :, ::1] regs, int r, int q) nogil:
    return mk(regs[r, q, 0], regs[r, q, 1])


cdef inline void _set(double[:, :, ::1] regs, int r, int q, IV v) nogil:
    regs[r, q, 0] = v.lo
    regs[r, q, 1] = v.hi


cdef inline IV _conv(double[:, :, ::1] regs, int ra, int rb, int q) nogil:
    cdef IV acc = mk(0.0, 0.0)
    cdef int j
    for j in range(q + 1):
        acc = iadd(acc, imul(_get(regs, ra, j), _get(regs, rb, q - j)))
    return acc


cdef int _propagate(int[:, ::1] code, double[::1] consts,
                    double[:, :, ::1] regs, int q,
                    double t_lo, double t_hi,
                    double[:, :, ::1] Y, double[:, ::1] P) nogil:
    cdef int idx, op, out, a, b, c, j
    cdef int n_code = code.shape[0]
    cdef IV r, acc, a0, ju
    cdef double v
    for idx in range(n_code):
        op = code[idx, 0]
        out = code[idx, 1]
        a = code[idx, 2]
        b = code[idx, 3]
        c = code[idx, 4]
        if op == OP_CONST:
            if q == 0:
                v = consts[a]
                r = mk(v, v)
            else:
                r = mk(0.0, 0.0)
        elif op == OP_TIME:
            if q == 0:
                r = mk(t_lo, t_hi)
            elif q == 1:
                r = mk(1.0, 1.0)
            else:
                r = mk(0.0, 0.0)
        elif op == OP_STATE:
            r = mk(Y[a, q, 0], Y[a, q, 1])
        elif op == OP_PARAM:
            if q == 0:
                r = mk(P[a, 0], P[a, 1])
            else:
                r = mk(0.0, 0.0)
        elif op == OP_ADD:
            r = iadd(_get(regs, a, q), _get(regs, b, q))
        elif op == OP_SUB:
            r = isub(_get(regs, a, q), _get(regs, b, q))
        elif op == OP_MUL:
            r = _conv(regs, a, b, q)
        elif op == OP_DIV:
            acc = _get(regs, a, q)
            for j in range(q):
                acc = isub(acc, imul(_get(regs, out, j), _get(regs, b, q - j)))
            r = idiv(acc, _get(regs, b, 0))
        elif op == OP_NEG:
            r = ineg(_get(regs, a, q))
        elif op == OP_ABS:
            if q == 0:
                r = iabs(_get(regs, a, 0))
            else:
                a0 = _get(regs, a, 0)
                if a0.lo > 0.0:
                    r = _get(regs, a, q)
                elif a0.hi < 0.0:
                    r = ineg(_get(regs, a, q))
                else:
                    return _ABS_KINK
        elif op == OP_SQR:
            if q == 0:
                r = ipowi(_get(regs, a, 0), 2)
            else:
                r = _conv(regs, a, a, q)
        elif op == OP_POWSTEP:
            if q == 0:
                r = ipowi(_get(regs, b, 0), c)
            else:
                r = _conv(regs, a, b, q)
        elif op == OP_SQRT:
            if q == 0:
                r = isqrt(_get(regs, a, 0))
            else:
                acc = _get(regs, a, q)
                for j in range(1, q):
                    acc = isub(acc, imul(_get(regs, out, j), _get(regs, out, q - j)))
                r = idiv(acc, imul_int(_get(regs, out, 0), 2))
        elif op == OP_EXP:
            if q == 0:
                r = iexp(_get(regs, a, 0))
            else:
                acc = mk(0.0, 0.0)
                for j in range(1, q + 1):
                    acc = iadd(acc, imul(imul_int(_get(regs, a, j), j),
                                         _get(regs, out, q - j)))
                r = idiv_int(acc, q)
        elif op == OP_SINCOS:
            if q == 0:
                a0 = _get(regs, a, 0)
                _set(regs, out, 0, isin(a0))
                _set(regs, c, 0, icos(a0))
                continue
            acc = mk(0.0, 0.0)
            r = mk(0.0, 0.0)  # reused as cos accumulator
            for j in range(1, q + 1):
                ju = imul_int(_get(regs, a, j), j)
                acc = iadd(acc, imul(ju, _get(regs, c, q - j)))
                r = iadd(r, imul(ju, _get(regs, out, q - j)))
            _set(regs, out, q, idiv_int(acc, q))
            _set(regs, c, q, ineg(idiv_int(r, q)))
            continue
        else:
            return 99
        _set(regs, out, q, r)
    return _OK


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------


def eval_tape(tape, double t_lo, double t_hi, y, p):
    """Order-0 evaluation; returns a list of (lo, hi) tuples."""
    cdef int[:, ::1] code = tape.code
    cdef double[::1] consts = tape.consts
    cdef int n_regs = tape.n_regs
    cdef int[::1] outs = tape.out_regs
    regs_arr = np.zeros((n_regs, 1, 2), dtype=np.float64)
    cdef double[:, :, ::1] regs = regs_arr
    Y_arr = np.asarray(y, dtype=np.float64).reshape(-1, 1, 2)
    cdef double[:, :, ::1] Y = Y_arr
    P_arr = np.asarray(p, dtype=np.float64).reshape(-1, 2) if len(p) else np.zeros((0, 2))
    cdef double[:, ::1] P = P_arr
    cdef int status = _propagate(code, consts, regs, 0, t_lo, t_hi, Y, P)
    if status != _OK:
        raise AssertionError("order-0 propagation cannot fail")
    cdef int i
    return [(regs[outs[i], 0, 0], regs[outs[i], 0, 1]) for i in range(outs.shape[0])]


cdef int _ode_coeffs_raw(int[:, ::1] code, double[::1] consts, int unused,
                         int[::1] outs, int k, double t_lo, double t_hi,
                         double[:, :, ::1] Y, double[:, ::1] P,
                         double[:, :, ::1] regs) nogil:
    """Fill Y[:, q, :] for q = 1..k from the order-0 slice already in Y."""
    cdef int q, i, status
    cdef IV fq
    cdef int n = Y.shape[0]
    for q in range(k):
        status = _propagate(code, consts, regs, q, t_lo, t_hi, Y, P)
        if status != _OK:
            return status
        for i in range(n):
            fq = _get(regs, outs[i], q)
            if fq.lo > fq.hi:
                return _EMPTY_RESULT
            fq = idiv_int(fq, q + 1)
            Y[i, q + 1, 0] = fq.lo
            Y[i, q + 1, 1] = fq.hi
    return _OK


def ode_coeffs(tape, int k, double t_lo, double t_hi, y0, p):
    """Interval Taylor coefficients of the flow; returns (status, Y) with Y
    a nested list [state][order] of (lo, hi) tuples."""
    cdef int[:, ::1] code = tape.code
    cdef double[::1] consts = tape.consts
    cdef int[::1] outs = tape.out_regs
    cdef int n = tape.n_state
    regs_arr = np.zeros((tape.n_regs, k + 1, 2), dtype=np.float64)
    Y_arr = np.zeros((n, k + 1, 2), dtype=np.float64)
    cdef double[:, :, ::1] regs = regs_arr
    cdef double[:, :, ::1] Y = Y_arr
    cdef int i
    for i in range(n):
        Y[i, 0, 0] = y0[i][0]
        Y[i, 0, 1] = y0[i][1]
    P_arr = np.asarray(p, dtype=np.float64).reshape(-1, 2) if len(p) else np.zeros((0, 2))
    cdef double[:, ::1] P = P_arr
    cdef int status = _ode_coeffs_raw(code, consts, tape.n_regs, outs, k,
                                      t_lo, t_hi, Y, P, regs)
    if status != _OK:
        return status, None
    cdef int q
    return _OK, [[(Y[i, q, 0], Y[i, q, 1]) for q in range(k + 1)]
                 for i in range(n)]


cdef int _picard_raw(int[:, ::1] code, double[::1] consts, int[::1] outs,
                     int n, double[:, :, ::1] regs,
                     double tj, double h0, double hmin,
                     double[:, ::1] yv, double[:, ::1] P,
                     double alpha, double delta, int max_iter,
                     double[:, :, ::1] cand, double[:, ::1] nxt,
                     double[:, ::1] out_yt, double* t_next_out) nogil:
    """Picard contraction with step halving; writes ytilde and t_next."""
    cdef double h = h0
    cdef double t_next, hw, r
    cdef int i, it
    cdef bint accepted, bad, inside
    cdef IV yi, pi, f, hull

    while True:
        t_next = tj + h
        hw = sub_up(t_next, tj)
        for i in range(n):
            yi = mk(yv[i, 0], yv[i, 1])
            r = alpha * iwidth(yi) + delta
            cand[i, 0, 0] = sub_down(yi.lo, r)
            cand[i, 0, 1] = add_up(yi.hi, r)
        accepted = False
        for it in range(max_iter):
            if _propagate(code, consts, regs, 0, tj, t_next, cand, P) != _OK:
                break
            bad = False
            inside = True
            for i in range(n):
                f = _get(regs, outs[i], 0)
                pi = iadd(mk(yv[i, 0], yv[i, 1]), imul(mk(0.0, hw), f))
                if pi.lo > pi.hi:
                    bad = True
                    break
                if pi.lo < cand[i, 0, 0] or pi.hi > cand[i, 0, 1]:
                    inside = False
                nxt[i, 0] = pi.lo
                nxt[i, 1] = pi.hi
            if bad:
                break
            if inside:
                for i in range(n):
                    cand[i, 0, 0] = nxt[i, 0]
                    cand[i, 0, 1] = nxt[i, 1]
                accepted = True
                break
            # grow only towards the inflated image so that components that
            # already contract stop moving (racing inflation stalls the test)
            for i in range(n):
                pi = mk(nxt[i, 0], nxt[i, 1])
                r = alpha * iwidth(pi) + delta
                hull = ihull(mk(cand[i, 0, 0], cand[i, 0, 1]),
                             mk(sub_down(pi.lo, r), add_up(pi.hi, r)))
                cand[i, 0, 0] = hull.lo
                cand[i, 0, 1] = hull.hi
        if accepted:
            # one extra application tightens and stays inside by monotonicity
            if _propagate(code, consts, regs, 0, tj, t_next, cand, P) != _OK:
                return _NO_ENCLOSURE
            for i in range(n):
                f = _get(regs, outs[i], 0)
                pi = iadd(mk(yv[i, 0], yv[i, 1]), imul(mk(0.0, hw), f))
                out_yt[i, 0] = pi.lo
                out_yt[i, 1] = pi.hi
            t_next_out[0] = t_next
            return _OK
        h *= 0.5
        if h < hmin:
            return _NO_ENCLOSURE


cdef int _taylor_raw(int[:, ::1] code, double[::1] consts, int[::1] outs,
                     int n, int k, double tj, double tj1,
                     double[:, ::1] yv, double[:, ::1] P,
                     double[:, ::1] yt,
                     double[:, :, ::1] C, double[:, :, ::1] R,
                     double[:, :, ::1] regsC, double[:, :, ::1] regsR,
                     double[:, ::1] out_y) nogil:
    """Tightened step: series at (tj, y) plus remainder on ([tj,tj1], yt)."""
    cdef int i, q, status
    cdef IV h, hk, acc, res
    cdef double lo, hi
    for i in range(n):
        C[i, 0, 0] = yv[i, 0]
        C[i, 0, 1] = yv[i, 1]
        R[i, 0, 0] = yt[i, 0]
        R[i, 0, 1] = yt[i, 1]
    status = _ode_coeffs_raw(code, consts, 0, outs, k - 1, tj, tj, C, P, regsC)
    if status != _OK:
        return status
    status = _ode_coeffs_raw(code, consts, 0, outs, k, tj, tj1, R, P, regsR)
    if status != _OK:
        return status
    h = isub(mk(tj1, tj1), mk(tj, tj))
    hk = ipowi(h, k)
    for i in range(n):
        acc = mk(C[i, k - 1, 0], C[i, k - 1, 1])
        for q in range(k - 2, -1, -1):
            acc = iadd(mk(C[i, q, 0], C[i, q, 1]), imul(acc, h))
        res = iadd(acc, imul(mk(R[i, k, 0], R[i, k, 1]), hk))
        lo = res.lo if res.lo > yt[i, 0] else yt[i, 0]
        hi = res.hi if res.hi < yt[i, 1] else yt[i, 1]
        if lo > hi:
            return _EMPTY_RESULT
        out_y[i, 0] = lo
        out_y[i, 1] = hi
    return _OK


def picard(tape, double tj, double h0, double hmin, y, p,
           double alpha, double delta, int max_iter):
    """A-priori enclosure via Picard iteration with step halving.

    Returns (status, t_next, ytilde) with ytilde a list of (lo, hi).
    """
    cdef int[:, ::1] code = tape.code
    cdef double[::1] consts = tape.consts
    cdef int[::1] outs = tape.out_regs
    cdef int n = tape.n_state

    y_arr = np.asarray(y, dtype=np.float64).reshape(n, 2)
    P_arr = np.asarray(p, dtype=np.float64).reshape(-1, 2) if len(p) else np.zeros((0, 2))
    cand_arr = np.zeros((n, 1, 2), dtype=np.float64)
    nxt_arr = np.zeros((n, 2), dtype=np.float64)
    out_arr = np.zeros((n, 2), dtype=np.float64)
    regs_arr = np.zeros((tape.n_regs, 1, 2), dtype=np.float64)

    cdef double[:, ::1] yv = y_arr
    cdef double[:, ::1] P = P_arr
    cdef double[:, :, ::1] cand = cand_arr
    cdef double[:, ::1] nxt = nxt_arr
    cdef double[:, ::1] out = out_arr
    cdef double[:, :, ::1] regs = regs_arr
    cdef double t_next = tj
    cdef int status = _picard_raw(code, consts, outs, n, regs, tj, h0, hmin,
                                  yv, P, alpha, delta, max_iter,
                                  cand, nxt, out, &t_next)
    cdef int i
    if status != _OK:
        return NO_ENCLOSURE, tj, [(yv[i, 0], yv[i, 1]) for i in range(n)]
    return OK, t_next, [(out[i, 0], out[i, 1]) for i in range(n)]


def taylor_step(tape, int k, double tj, double tj1, y, p, ytilde):
    """Tight enclosure at tj1 from Taylor terms plus the bounded remainder."""
    cdef int[:, ::1] code = tape.code
    cdef double[::1] consts = tape.consts
    cdef int[::1] outs = tape.out_regs
    cdef int n = tape.n_state
    cdef int n_regs = tape.n_regs

    y_arr = np.asarray(y, dtype=np.float64).reshape(n, 2)
    yt_arr = np.asarray(ytilde, dtype=np.float64).reshape(n, 2)
    P_arr = np.asarray(p, dtype=np.float64).reshape(-1, 2) if len(p) else np.zeros((0, 2))
    C_arr = np.zeros((n, k, 2), dtype=np.float64)
    R_arr = np.zeros((n, k + 1, 2), dtype=np.float64)
    regsC = np.zeros((n_regs, k, 2), dtype=np.float64)
    regsR = np.zeros((n_regs, k + 1, 2), dtype=np.float64)
    out_arr = np.zeros((n, 2), dtype=np.float64)

    cdef double[:, ::1] yv = y_arr
    cdef double[:, ::1] yt = yt_arr
    cdef double[:, ::1] P = P_arr
    cdef double[:, :, ::1] C = C_arr
    cdef double[:, :, ::1] R = R_arr
    cdef double[:, :, ::1] rC = regsC
    cdef double[:, :, ::1] rR = regsR
    cdef double[:, ::1] out = out_arr
    cdef int status = _taylor_raw(code, consts, outs, n, k, tj, tj1,
                                  yv, P, yt, C, R, rC, rR, out)
    cdef int i
    if status != _OK:
        return status, None
    return OK, [(out[i, 0], out[i, 1]) for i in range(n)]


def integrate_loop(tape, int k, double t0, double tf, double h0, double hmin,
                   double alpha, double delta, int max_iter, long max_steps,
                   y0, p):
    """Full two-stage integration over [t0, tf].

    Returns (status, t_reached, grid, panels) where grid is a list of
    (t, [(lo, hi), ...]) rows and panels a list of (ta, tb, boxpairs).
    On failure the partial grid/panels up to t_reached are still returned.
    """
    cdef int[:, ::1] code = tape.code
    cdef double[::1] consts = tape.consts
    cdef int[::1] outs = tape.out_regs
    cdef int n = tape.n_state
    cdef int n_regs = tape.n_regs

    y_arr = np.asarray(y0, dtype=np.float64).reshape(n, 2)
    P_arr = np.asarray(p, dtype=np.float64).reshape(-1, 2) if len(p) else np.zeros((0, 2))
    cand_arr = np.zeros((n, 1, 2), dtype=np.float64)
    nxt_arr = np.zeros((n, 2), dtype=np.float64)
    yt_arr = np.zeros((n, 2), dtype=np.float64)
    C_arr = np.zeros((n, k, 2), dtype=np.float64)
    R_arr = np.zeros((n, k + 1, 2), dtype=np.float64)
    regs0 = np.zeros((n_regs, 1, 2), dtype=np.float64)
    regsC = np.zeros((n_regs, k, 2), dtype=np.float64)
    regsR = np.zeros((n_regs, k + 1, 2), dtype=np.float64)
    ynext_arr = np.zeros((n, 2), dtype=np.float64)

    cdef double[:, ::1] yv = y_arr
    cdef double[:, ::1] P = P_arr
    cdef double[:, :, ::1] cand = cand_arr
    cdef double[:, ::1] nxt = nxt_arr
    cdef double[:, ::1] yt = yt_arr
    cdef double[:, :, ::1] C = C_arr
    cdef double[:, :, ::1] R = R_arr
    cdef double[:, :, ::1] r0 = regs0
    cdef double[:, :, ::1] rC = regsC
    cdef double[:, :, ::1] rR = regsR
    cdef double[:, ::1] ynext = ynext_arr

    cdef double t = t0
    cdef double remaining, h_try, hmin_eff, t_next, t_grid
    cdef long steps = 0
    cdef int status, i

    grid = [(t0, [(yv[i, 0], yv[i, 1]) for i in range(n)])]
    panels = []
    while t < tf:
        remaining = sub_up(tf, t)
        h_try = h0 if h0 < remaining else remaining
        hmin_eff = hmin if hmin < remaining else remaining
        t_next = t
        status = _picard_raw(code, consts, outs, n, r0, t, h_try, hmin_eff,
                             yv, P, alpha, delta, max_iter,
                             cand, nxt, yt, &t_next)
        if status != _OK:
            return status, t, grid, panels
        t_grid = tf if t_next >= tf else t_next
        status = _taylor_raw(code, consts, outs, n, k, t, t_grid,
                             yv, P, yt, C, R, rC, rR, ynext)
        if status != _OK:
            return status, t, grid, panels
        grid.append((t_grid, [(ynext[i, 0], ynext[i, 1]) for i in range(n)]))
        panels.append((t, t_grid, [(yt[i, 0], yt[i, 1]) for i in range(n)]))
        t = t_grid
        for i in range(n):
            yv[i, 0] = ynext[i, 0]
            yv[i, 1] = ynext[i, 1]
        steps += 1
        if steps > max_steps:
            return STEP_LIMIT, t, grid, panels
    return OK, t, grid, panels
