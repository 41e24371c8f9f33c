# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: exp-Laurent evaluation and Dormand-Prince stepping.

Mirrors ``_pykernels`` step for step; the two must return the same nodes.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, pow, fabs, fmax, fmin, isfinite, NAN, INFINITY, floor

cnp.import_array()

DEF END = 0
DEF EVENT = 1
DEF RANGE = 2
DEF STEP_FAILURE = 3
DEF MAX_STEPS = 4

DEF H_FLOOR = 1e-300
DEF Y_BIG = 1e200

cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784, A76 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40
cdef double D1 = -12715105075.0 / 11282082432
cdef double D3 = 87487479700.0 / 32700410799
cdef double D4 = -10690763975.0 / 1880347072
cdef double D5 = 701980252875.0 / 199316789632
cdef double D6 = -1453857185.0 / 822651844
cdef double D7 = 69997945.0 / 29380423
cdef double SAFE = 0.9, FAC_MIN = 0.2, FAC_MAX = 10.0, EXPO1 = 0.17, BETA = 0.04

DEF KIND_TERMS = 0
DEF KIND_KCSCK = 1


cdef struct Rhs:
    int kind
    int nterms
    double *c
    double *p
    double *m
    int n
    int k
    double a_k
    double b_k
    double y_lo
    double y_hi
    double eps_stop
    double psimax


cdef inline double _is_int(double x) nogil:
    return x == floor(x)


cdef double _terms_value(Rhs *r, double y) nogil:
    cdef double s = 0.0, v
    cdef int i
    for i in range(r.nterms):
        v = r.c[i]
        if r.p[i] != 0.0:
            if y > 0.0 or _is_int(r.p[i]):
                v *= pow(y, r.p[i])
            else:
                v = NAN
        if r.m[i] != 0.0:
            v *= exp(r.m[i] * y)
        s += v
    return s


cdef double _kcsck_sigma(Rhs *r, double y) nogil:
    cdef double rad = r.a_k + r.b_k / pow(y, r.n)
    if rad < 0.0:
        return NAN
    return r.n - y * pow(rad, 1.0 / r.k)


cdef double _fun(Rhs *r, double t, double y) nogil:
    if r.kind == KIND_TERMS:
        return _terms_value(r, y)
    if t <= 0.0:
        return NAN
    return _kcsck_sigma(r, t) - (r.n - 1) * y / t


cdef int _halt(Rhs *r, double t, double y, double f) nogil:
    if r.kind == KIND_TERMS:
        if not (r.y_lo < y < r.y_hi) or y > Y_BIG:
            return RANGE
        if y < 1e-12 or f <= r.eps_stop * r.psimax:
            return EVENT
        if f > r.psimax:
            r.psimax = f
        return 0
    return EVENT if y <= 0.0 else 0


cdef double _initial_step(Rhs *r, double t0, double y0, double f0, double d,
                          double rtol, double atol):
    cdef double sk = atol + rtol * fabs(y0)
    cdef double d0 = fabs(y0) / sk, d1 = fabs(f0) / sk, d2, h0, h1, f1
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    f1 = _fun(r, t0 + d * h0, y0 + d * h0 * f0)
    if isfinite(f1):
        d2 = fabs(f1 - f0) / sk / h0
    else:
        d2 = 1e308 * 10.0
    if fmax(d1, d2) <= 1e-15:
        h1 = fmax(1e-6, h0 * 1e-3)
    else:
        h1 = pow(0.01 / fmax(d1, d2), 0.2)
    return fmin(100 * h0, h1)


cdef tuple _dopri(Rhs *r, double t0, double y0, double t1, double rtol, double atol,
                  long max_steps, double h_max):
    cdef list ts = [t0], ys = [y0], coef = []
    cdef double t_bad = NAN, y_bad = NAN
    cdef double d, h, t, y, k1, k2, k3, k4, k5, k6, k7, y1, ev, err, fac11, fac
    cdef double facold = 1e-4, remaining, hs, t_new, ydiff, bspl, hnew
    cdef bint last, rejected = False
    cdef long nstep = 0
    cdef int code
    if t1 == t0:
        return _pack(ts, ys, coef, END, t_bad, y_bad)
    d = 1.0 if t1 > t0 else -1.0
    k1 = _fun(r, t0, y0)
    if not isfinite(k1):
        return _pack(ts, ys, coef, RANGE, t0, y0)
    code = _halt(r, t0, y0, k1)
    if code:
        return _pack(ts, ys, coef, code, t0, y0)
    h = fmin(_initial_step(r, t0, y0, k1, d, rtol, atol), h_max)
    t = t0
    y = y0
    while True:
        if nstep >= max_steps:
            return _pack(ts, ys, coef, MAX_STEPS, t, y)
        remaining = fabs(t1 - t)
        if t + d * remaining == t:
            # the previous step landed on t1 up to rounding
            return _pack(ts, ys, coef, END, t_bad, y_bad)
        last = h >= remaining
        if last:
            h = remaining
        if h < H_FLOOR or t + d * h == t:
            return _pack(ts, ys, coef, STEP_FAILURE, t, y)
        hs = d * h
        nstep += 1
        k2 = _fun(r, t + C2 * hs, y + hs * A21 * k1)
        k3 = _fun(r, t + C3 * hs, y + hs * (A31 * k1 + A32 * k2))
        k4 = _fun(r, t + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = _fun(r, t + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = _fun(r, t + hs, y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y1 = y + hs * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        k7 = _fun(r, t + hs, y1)
        ev = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        err = fabs(ev) / (atol + rtol * fmax(fabs(y), fabs(y1)))
        if not (isfinite(err) and isfinite(y1) and isfinite(k7)):
            h *= 0.2
            rejected = True
            continue
        fac11 = pow(err, EXPO1)
        if err <= 1.0:
            t_new = t1 if last else t + hs
            code = _halt(r, t_new, y1, k7)
            if code:
                return _pack(ts, ys, coef, code, t_new, y1)
            ydiff = y1 - y
            bspl = hs * k1 - ydiff
            coef.append((
                y, ydiff, bspl, ydiff - hs * k7 - bspl,
                hs * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
            ))
            fac = fac11 / pow(facold, BETA)
            fac = fmax(1.0 / FAC_MAX, fmin(1.0 / FAC_MIN, fac / SAFE))
            facold = fmax(err, 1e-4)
            t = t_new
            y = y1
            k1 = k7
            ts.append(t)
            ys.append(y)
            if last:
                return _pack(ts, ys, coef, END, t_bad, y_bad)
            hnew = fmin(h / fac, h_max)
            if rejected:
                hnew = fmin(hnew, h)
            rejected = False
            h = hnew
        else:
            h = h / fmin(1.0 / FAC_MIN, fac11 / SAFE)
            rejected = True


cdef tuple _pack(list ts, list ys, list coef, int status, double t_bad, double y_bad):
    return (
        np.asarray(ts, dtype=float),
        np.asarray(ys, dtype=float),
        np.asarray(coef, dtype=float).reshape(-1, 5),
        status,
        t_bad,
        y_bad,
    )


cdef inline double _ipow(double y, long e) nogil:
    # binary powering for integer exponents
    cdef double r = 1.0
    cdef bint neg = e < 0
    if neg:
        e = -e
    while e:
        if e & 1:
            r *= y
        y *= y
        e >>= 1
    return 1.0 / r if neg else r


def eval_terms(double[::1] coeffs, double[::1] powers, double[::1] rates, double[::1] ys):
    cdef Py_ssize_t i, j, nt = coeffs.shape[0], ny = ys.shape[0]
    out = np.zeros(ny)
    cdef double[::1] o = out
    cdef double c, p, m, v
    cdef long e
    cdef bint small_int
    with nogil:
        for i in range(nt):
            c, p, m = coeffs[i], powers[i], rates[i]
            small_int = _is_int(p) and fabs(p) <= 16.0
            e = <long>p
            for j in range(ny):
                if p == 0.0:
                    v = c
                elif small_int:
                    v = c * _ipow(ys[j], e)
                else:
                    v = c * pow(ys[j], p)
                if m != 0.0:
                    v = v * exp(m * ys[j])
                o[j] += v
    return out


def dopri_terms(coeffs, powers, rates, double t0, double y0, double t1, double rtol,
                double atol, double y_lo, double y_hi, double eps_stop=1e-10,
                long max_steps=200000, double h_max=INFINITY):
    cdef double[::1] c = np.ascontiguousarray(coeffs, dtype=float)
    cdef double[::1] p = np.ascontiguousarray(powers, dtype=float)
    cdef double[::1] m = np.ascontiguousarray(rates, dtype=float)
    cdef Rhs r
    r.kind = KIND_TERMS
    r.nterms = c.shape[0]
    r.c = &c[0] if r.nterms else NULL
    r.p = &p[0] if r.nterms else NULL
    r.m = &m[0] if r.nterms else NULL
    r.y_lo = y_lo
    r.y_hi = y_hi
    r.eps_stop = eps_stop
    r.psimax = 0.0
    return _dopri(&r, t0, y0, t1, rtol, atol, max_steps, h_max)


def dopri_kcsck(int n, int k, double a_k, double b_k, double y0, double psi0, double y1,
                double rtol, double atol, long max_steps=200000, double h_max=INFINITY):
    cdef Rhs r
    r.kind = KIND_KCSCK
    r.nterms = 0
    r.n = n
    r.k = k
    r.a_k = a_k
    r.b_k = b_k
    return _dopri(&r, y0, psi0, y1, rtol, atol, max_steps, h_max)


def kcsck_sigma(int n, int k, double a_k, double b_k, double y):
    cdef Rhs r
    r.n = n
    r.k = k
    r.a_k = a_k
    r.b_k = b_k
    return _kcsck_sigma(&r, y)
