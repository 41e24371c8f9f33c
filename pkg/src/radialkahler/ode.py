"""Integration of the profile ODEs and reconstruction of the potential.

``dy/dt = psi(y)`` with ``r = e^t`` recovers ``y(r)`` and then
``f'(r) = y / r``.  The k-generalized cscK condition gives a Cauchy
problem ``dpsi/dy = sigma(y) - (n-1) psi / y`` solved with the same
Dormand-Prince 5(4) controller.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson

from . import kernels
from .errors import DomainError, StepFailure
from .expr import ExpLaurentExpr
from .geometry import NumericProfile, RadialMetric

_STATUS = {
    kernels.END: "end",
    kernels.EVENT: "event",
    kernels.RANGE: "range",
    kernels.STEP_FAILURE: "step_failure",
    kernels.MAX_STEPS: "max_steps",
}


class DenseSolution:
    """Piecewise quartic continuous extension over accepted steps.

    Built from one or two kernel runs leaving the same initial point
    (backward and forward).  Evaluation outside the covered interval
    returns NaN.
    """

    def __init__(self, *runs):
        starts, steps, coefs = [], [], []
        for ts, _, coef, *_ in runs:
            if len(ts) < 2:
                continue
            starts.append(ts[:-1])
            steps.append(np.diff(ts))
            coefs.append(coef)
        if not starts:
            t0 = runs[0][0][0]
            y0 = runs[0][1][0]
            self.lo = np.array([t0])
            self.hi = np.array([t0])
            self.start = np.array([t0])
            self.h = np.array([0.0])
            self.coef = np.array([[y0, 0, 0, 0, 0]], dtype=float)
        else:
            start = np.concatenate(starts)
            h = np.concatenate(steps)
            coef = np.concatenate(coefs)
            lo = np.minimum(start, start + h)
            order = np.argsort(lo, kind="stable")
            self.start, self.h, self.coef = start[order], h[order], coef[order]
            self.lo = lo[order]
            self.hi = np.maximum(self.start, self.start + self.h)
        self.t_min = float(self.lo[0])
        self.t_max = float(self.hi[-1])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        idx = np.clip(np.searchsorted(self.lo, flat, side="right") - 1, 0, len(self.lo) - 1)
        h = self.h[idx]
        with np.errstate(invalid="ignore", divide="ignore"):
            theta = np.where(h != 0.0, (flat - self.start[idx]) / np.where(h != 0.0, h, 1.0), 0.0)
        th1 = 1.0 - theta
        c = self.coef[idx]
        val = c[:, 0] + theta * (c[:, 1] + th1 * (c[:, 2] + theta * (c[:, 3] + th1 * c[:, 4])))
        val = np.where((flat >= self.t_min) & (flat <= self.t_max), val, np.nan)
        return val.reshape(t.shape) if t.ndim else float(val[0])


@dataclass(frozen=True)
class PotentialTable:
    """Rows ``(t, r, y, f, f_prime)`` sampled on a uniform ``t`` grid."""

    t: np.ndarray
    r: np.ndarray
    y: np.ndarray
    f: np.ndarray | None
    f_prime: np.ndarray | None
    t0: float
    y0: float
    y_inf: float
    y_sup: float
    stop_backward: str = "end"
    stop_forward: str = "end"
    solution: DenseSolution | None = None

    @property
    def i0(self) -> int:
        return int(np.argmin(np.abs(self.t - self.t0)))

    def rows(self):
        f = self.f if self.f is not None else np.full_like(self.t, np.nan)
        fp = self.f_prime if self.f_prime is not None else np.full_like(self.t, np.nan)
        return list(zip(self.t, self.r, self.y, f, fp))

    def header(self):
        return ["t", "r", "y", "f", "f_prime"]


BLOWUP_FACTOR = 1e6


def _tol_pair(tol, scale):
    return tol, tol * 1e-12 * max(1.0, abs(scale))


def _run_y(m: RadialMetric, t0, y0, t1, tol):
    rtol, atol = _tol_pair(tol, y0)
    lo, hi = m.y_range
    if m.symbolic:
        terms = m.profile.terms
        c, p, r = (np.array(col, dtype=float) for col in zip(*terms)) if terms else ([], [], [])
        return kernels.dopri_terms(c, p, r, t0, y0, t1, rtol, atol, lo, hi)
    psi = m.profile
    psimax = [0.0]

    def fun(t, y):
        return float(psi(y))

    def halt(t, y, f):
        if not (lo < y < hi):
            return kernels.RANGE
        if y < 1e-12 or f <= 1e-10 * psimax[0]:
            return kernels.EVENT
        psimax[0] = max(psimax[0], f)
        return 0

    return kernels.dopri5(fun, t0, y0, t1, rtol, atol, halt)


def _check(run, what):
    ts, ys, _, status, *_ = run
    if status in (kernels.STEP_FAILURE, kernels.MAX_STEPS):
        raise StepFailure(f"{what}: {_STATUS[status]} at t={ts[-1]:.17g}", (float(ts[-1]), float(ys[-1])))


def _uniform_rows(a, b, t0, samples):
    n_back = int(round((samples - 1) * (t0 - a) / (b - a))) if b > a else 0
    n_back = min(max(n_back, 1 if t0 > a else 0), samples - 1)
    n_fwd = samples - 1 - n_back
    if n_fwd == 0 and b > t0:
        n_fwd, n_back = 1, n_back - 1
    back = np.linspace(a, t0, n_back + 1) if n_back else np.array([t0])
    fwd = np.linspace(t0, b, n_fwd + 1)[1:] if n_fwd else np.array([])
    return np.concatenate([back, fwd])


def integrate_y(m: RadialMetric, t0: float, y0: float, t_span: tuple[float, float],
                tol: float = 1e-10, samples: int = 2049) -> PotentialTable:
    """Solve ``dy/dt = psi(y)`` through ``(t0, y0)`` over ``t_span``.

    Integration in either direction stops early where ``psi`` loses
    positivity or ``y`` leaves ``m.y_range``.  The table samples the dense
    solution on a uniform ``t`` grid that contains ``t0``; ``y_inf`` and
    ``y_sup`` are the ends of the positivity interval through ``y0``.
    """
    t_lo, t_hi = (float(v) for v in t_span)
    if not (t_lo <= t0 <= t_hi):
        raise ValueError("t0 must lie in t_span")
    if not m.contains(y0):
        raise DomainError(f"y0={y0} outside y_range {m.y_range}")
    back = _run_y(m, t0, y0, t_lo, tol)
    fwd = _run_y(m, t0, y0, t_hi, tol)
    stops = [_STATUS[back[3]], _STATUS[fwd[3]]]
    # y -> +inf in finite t: the step shrinks below the resolution of t
    # while y grows without bound; that is the end of the domain, not a failure
    if fwd[3] == kernels.STEP_FAILURE and math.isinf(m.y_range[1]) and fwd[1][-1] > BLOWUP_FACTOR * max(1.0, abs(y0)):
        stops[1] = "blowup"
    else:
        _check(fwd, "forward")
    _check(back, "backward")
    sol = DenseSolution(back, fwd)
    t = _uniform_rows(sol.t_min, sol.t_max, t0, samples)
    y = sol(t)
    y[t == t0] = y0
    y_inf, y_sup = domain_probe(m, y0)
    return PotentialTable(
        t=t, r=np.exp(t), y=y, f=None, f_prime=None, t0=float(t0), y0=float(y0),
        y_inf=y_inf, y_sup=y_sup,
        stop_backward=stops[0], stop_forward=stops[1], solution=sol,
    )


def reconstruct_potential(table: PotentialTable) -> PotentialTable:
    """Fill ``f_prime = y/r`` and ``f`` by cumulative Simpson in ``r``, ``f(r0) = 0``."""
    fp = table.y / table.r
    f = cumulative_simpson(fp, x=table.r, initial=0.0)
    f = f - f[table.i0]
    return replace(table, f=f, f_prime=fp)


def local_y(m: RadialMetric, r0: float, y0: float, r, tol: float = 1e-13):
    """``y(r)`` near ``r0`` by re-integrating from ``(log r0, y0)``."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    t0 = math.log(r0)
    t = np.log(r)
    tab = integrate_y(m, t0, y0, (min(t.min(), t0), max(t.max(), t0)), tol=tol, samples=3)
    y = tab.solution(t)
    y[t == t0] = y0
    return y


# Cauchy problem for psi ----------------------------------------------------

# Profiles are differentiated twice by central differences; the derivative
# error of the continuous extension scales like h^4, so steps are capped,
# more tightly near small y where the (n-1) psi / y term varies fastest.
PROFILE_STEPS = 2000
PROFILE_REL_STEP = 1.0 / 1000


def _profile_h_max(a, b):
    return min((b - a) / PROFILE_STEPS, a * PROFILE_REL_STEP)


def _profile_from_runs(back, fwd, source):
    _check(back, "backward")
    _check(fwd, "forward")
    sol = DenseSolution(back, fwd)
    return NumericProfile(sol, (sol.t_min, sol.t_max), source)


def psi_from_sigma_numeric(sigma: Callable, n: int, y0: float, psi0: float,
                           y_span: tuple[float, float], tol: float = 1e-12) -> NumericProfile:
    """Solve ``dpsi/dy = sigma(y) - (n-1) psi / y`` from ``psi(y0) = psi0``.

    The result covers the part of ``y_span`` reachable with ``psi > 0``.
    """
    if not (psi0 > 0.0 and y0 > 0.0):
        raise DomainError("need y0 > 0 and psi0 > 0")
    a, b = (float(v) for v in y_span)
    if not (0.0 < a <= y0 <= b):
        raise DomainError("y0 must lie in y_span with y_span[0] > 0")
    rtol, atol = tol, tol * 1e-3 * abs(psi0)

    def fun(y, psi):
        if y <= 0.0:
            return math.nan
        return float(sigma(y)) - (n - 1) * psi / y

    def halt(y, psi, f):
        return kernels.EVENT if psi <= 0.0 else 0

    h_max = _profile_h_max(a, b)
    back = kernels.dopri5(fun, y0, psi0, a, rtol, atol, halt, h_max=h_max)
    fwd = kernels.dopri5(fun, y0, psi0, b, rtol, atol, halt, h_max=h_max)
    return _profile_from_runs(back, fwd, "sigma Cauchy problem")


def kcsck_profile(n: int, k: int, a_k: float, b_k: float, y0: float, psi0: float,
                  y_span: tuple[float, float], tol: float = 1e-12) -> NumericProfile:
    """Profile with constant ``rho_k``: ``sigma = n - y (A_k + B_k y^-n)^(1/k)``."""
    a, b = (float(v) for v in y_span)
    rtol, atol = tol, tol * 1e-3 * abs(psi0)
    h_max = _profile_h_max(a, b)
    back = kernels.dopri_kcsck(n, k, a_k, b_k, y0, psi0, a, rtol, atol, h_max=h_max)
    fwd = kernels.dopri_kcsck(n, k, a_k, b_k, y0, psi0, b, rtol, atol, h_max=h_max)
    return _profile_from_runs(back, fwd, f"k-cscK n={n} k={k} A={a_k:g} B={b_k:g}")


# validity interval ---------------------------------------------------------

def _positive(psi, y):
    try:
        v = np.asarray(psi(y), dtype=float)
    except (DomainError, OverflowError):
        # unrepresentable psi counts as invalid, which keeps the interval conservative
        return np.zeros(np.shape(y), dtype=bool)
    with np.errstate(invalid="ignore"):
        return v > 0.0


def _bisect_edge(psi, good, bad):
    for _ in range(200):
        mid = 0.5 * (good + bad)
        if mid in (good, bad) or abs(bad - good) <= 1e-12 * abs(mid):
            break
        if _positive(psi, mid):
            good = mid
        else:
            bad = mid
    return 0.5 * (good + bad)


def probe_interval(psi, y_seed: float, lo: float = 0.0, hi: float = math.inf) -> tuple[float, float]:
    """Maximal interval around ``y_seed`` inside ``(lo, hi)`` with ``psi > 0``."""
    if not _positive(psi, y_seed):
        raise DomainError(f"psi is not positive at the seed y={y_seed}")
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if math.isinf(hi):
            up = y_seed * 1.01 ** np.arange(1, 1 + int(math.log(1e12) / math.log(1.01)))
        else:
            up = hi - (hi - y_seed) * 0.98 ** np.arange(1, 1500)
        up = up[(up > y_seed) & (up < hi)]
        ok = _positive(psi, up)
        if ok.all():
            y_sup = hi
        else:
            j = int(np.argmin(ok))
            y_sup = _bisect_edge(psi, float(up[j - 1]) if j else y_seed, float(up[j]))
        down = lo + (y_seed - lo) * 0.99 ** np.arange(1, 2800)
        down = down[(down > lo) & (down < y_seed)]
        ok = _positive(psi, down)
        if ok.all():
            y_inf = lo
        else:
            j = int(np.argmin(ok))
            y_inf = _bisect_edge(psi, float(down[j - 1]) if j else y_seed, float(down[j]))
    return float(y_inf), float(y_sup)


def domain_probe(m: RadialMetric, y_seed: float) -> tuple[float, float]:
    """Maximal sub-interval of ``m.y_range`` around ``y_seed`` with ``psi > 0``."""
    return probe_interval(m.psi, y_seed, *m.y_range)


def infer_y_range(psi: ExpLaurentExpr, y_seed: float | None = None) -> tuple[float, float]:
    """Positivity interval of a symbolic profile around ``y_seed``.

    Without a seed, the point of ``logspace(-3, 3)`` closest to 1 with
    ``psi > 0`` is used.
    """
    if y_seed is None:
        cand = np.logspace(-3, 3, 601)
        ok = _positive(psi, cand)
        if not ok.any():
            raise DomainError("psi is not positive anywhere on [1e-3, 1e3]; pass y_range or y_seed")
        good = cand[ok]
        y_seed = float(good[np.argmin(np.abs(np.log(good)))])
    return probe_interval(psi, y_seed)
