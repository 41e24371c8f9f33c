"""Pure-Python kernels.

Same entry points and algorithm as the compiled ``_ckernels`` module, used
when the extension is unavailable.  ``dopri5`` is also the integrator for
arbitrary Python right-hand sides, which the compiled module does not
cover.
"""
import math

import numpy as np

# termination codes shared with _ckernels
END, EVENT, RANGE, STEP_FAILURE, MAX_STEPS = 0, 1, 2, 3, 4

H_FLOOR = 1e-300
Y_BIG = 1e200

# Dormand-Prince 5(4)
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
# continuous extension
D1 = -12715105075 / 11282082432
D3 = 87487479700 / 32700410799
D4 = -10690763975 / 1880347072
D5 = 701980252875 / 199316789632
D6 = -1453857185 / 822651844
D7 = 69997945 / 29380423

SAFE, FAC_MIN, FAC_MAX, EXPO1, BETA = 0.9, 0.2, 10.0, 0.17, 0.04


def eval_terms(coeffs, powers, rates, ys):
    out = np.zeros(len(ys))
    # overflow gives inf quietly, as in the compiled kernel
    with np.errstate(over="ignore", invalid="ignore"):
        for c, p, m in zip(coeffs, powers, rates):
            term = np.full(len(ys), c)
            if p != 0.0:
                term = term * np.power(ys, p)
            if m != 0.0:
                term = term * np.exp(m * ys)
            out += term
    return out


def _initial_step(fun, t0, y0, f0, direction, rtol, atol):
    sk = atol + rtol * abs(y0)
    d0, d1 = abs(y0) / sk, abs(f0) / sk
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = fun(t0 + direction * h0, y0 + direction * h0 * f0)
    d2 = abs(f1 - f0) / sk / h0 if math.isfinite(f1) else math.inf
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100 * h0, h1)


def dopri5(fun, t0, y0, t1, rtol, atol, halt=None, max_steps=200000, h_init=0.0,
           h_max=math.inf):
    """Integrate the scalar ODE ``y' = fun(t, y)`` from ``t0`` to ``t1``.

    ``halt(t, y, f)`` is called on every accepted state and may return a
    nonzero code to stop; the offending state is then reported, not stored.

    Returns ``(ts, ys, coef, status, t_bad, y_bad)`` where ``coef`` holds
    the five continuous-extension coefficients of each accepted step.
    """
    ts, ys, coef = [t0], [y0], []
    t_bad = y_bad = math.nan
    if t1 == t0:
        return _pack(ts, ys, coef, END, t_bad, y_bad)
    d = 1.0 if t1 > t0 else -1.0
    k1 = fun(t0, y0)
    if not math.isfinite(k1):
        return _pack(ts, ys, coef, RANGE, t0, y0)
    if halt is not None:
        code = halt(t0, y0, k1)
        if code:
            return _pack(ts, ys, coef, code, t0, y0)
    h = abs(h_init) if h_init else _initial_step(fun, t0, y0, k1, d, rtol, atol)
    h = min(h, h_max)
    t, y = t0, y0
    facold = 1e-4
    rejected = False
    nstep = 0
    while True:
        if nstep >= max_steps:
            return _pack(ts, ys, coef, MAX_STEPS, t, y)
        remaining = abs(t1 - t)
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
        k2 = fun(t + C2 * hs, y + hs * A21 * k1)
        k3 = fun(t + C3 * hs, y + hs * (A31 * k1 + A32 * k2))
        k4 = fun(t + C4 * hs, y + hs * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = fun(t + C5 * hs, y + hs * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = fun(t + hs, y + hs * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        y1 = y + hs * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        k7 = fun(t + hs, y1)
        ev = hs * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        err = abs(ev) / (atol + rtol * max(abs(y), abs(y1)))
        if not (math.isfinite(err) and math.isfinite(y1) and math.isfinite(k7)):
            h *= 0.2
            rejected = True
            continue
        fac11 = err**EXPO1
        if err <= 1.0:
            t_new = t1 if last else t + hs
            if halt is not None:
                code = halt(t_new, y1, k7)
                if code:
                    return _pack(ts, ys, coef, code, t_new, y1)
            ydiff = y1 - y
            bspl = hs * k1 - ydiff
            coef.append((
                y, ydiff, bspl, ydiff - hs * k7 - bspl,
                hs * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
            ))
            fac = fac11 / facold**BETA
            fac = max(1.0 / FAC_MAX, min(1.0 / FAC_MIN, fac / SAFE))
            facold = max(err, 1e-4)
            t, y, k1 = t_new, y1, k7
            ts.append(t)
            ys.append(y)
            if last:
                return _pack(ts, ys, coef, END, t_bad, y_bad)
            hnew = min(h / fac, h_max)
            if rejected:
                hnew = min(hnew, h)
            rejected = False
            h = hnew
        else:
            h = h / min(1.0 / FAC_MIN, fac11 / SAFE)
            rejected = True


def _pack(ts, ys, coef, status, t_bad, y_bad):
    return (
        np.asarray(ts, dtype=float),
        np.asarray(ys, dtype=float),
        np.asarray(coef, dtype=float).reshape(-1, 5),
        int(status),
        float(t_bad),
        float(y_bad),
    )


def _terms_value(coeffs, powers, rates, y):
    s = 0.0
    for c, p, m in zip(coeffs, powers, rates):
        v = c
        if p != 0.0:
            v *= y**p if y > 0.0 or float(p).is_integer() else math.nan
        if m != 0.0:
            v *= math.exp(m * y)
        s += v
    return s


def dopri_terms(coeffs, powers, rates, t0, y0, t1, rtol, atol, y_lo, y_hi,
                eps_stop=1e-10, max_steps=200000, h_max=math.inf):
    """``dy/dt = psi(y)`` for an exp-Laurent ``psi`` with positivity events.

    Stops with EVENT when ``psi < eps_stop * max(psi)`` or ``y < 1e-12`` and
    with RANGE when ``y`` leaves ``(y_lo, y_hi)``.
    """
    coeffs = [float(c) for c in coeffs]
    powers = [float(p) for p in powers]
    rates = [float(m) for m in rates]
    psimax = [0.0]

    def fun(t, y):
        try:
            return _terms_value(coeffs, powers, rates, y)
        except (OverflowError, ZeroDivisionError):
            return math.nan

    def halt(t, y, f):
        if not (y_lo < y < y_hi) or y > Y_BIG:
            return RANGE
        if y < 1e-12 or f <= eps_stop * psimax[0]:
            return EVENT
        if f > psimax[0]:
            psimax[0] = f
        return 0

    return dopri5(fun, t0, y0, t1, rtol, atol, halt, max_steps, h_max=h_max)


def kcsck_sigma(n, k, a_k, b_k, y):
    rad = a_k + b_k / y**n
    if rad < 0.0:
        return math.nan
    return n - y * rad ** (1.0 / k)


def dopri_kcsck(n, k, a_k, b_k, y0, psi0, y1, rtol, atol, max_steps=200000,
                h_max=math.inf):
    """``dpsi/dy = sigma(y) - (n-1) psi / y`` with ``sigma`` of constant ``rho_k``.

    Stops with EVENT when ``psi`` stops being positive.
    """
    n = int(n)
    k = int(k)

    def fun(y, psi):
        if y <= 0.0:
            return math.nan
        return kcsck_sigma(n, k, a_k, b_k, y) - (n - 1) * psi / y

    def halt(y, psi, f):
        return EVENT if psi <= 0.0 else 0

    return dopri5(fun, y0, psi0, y1, rtol, atol, halt, max_steps, h_max=h_max)
