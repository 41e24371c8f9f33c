"""Curvature of radial Kahler metrics in momentum-profile form.

A radial metric with potential ``f(r)``, ``r = |z|^2``, is encoded by the
momentum ``y = r f'(r)`` and the profile ``psi(y) = dy/dt`` with
``r = e^t``.  Everything here is a pointwise formula in ``(y, psi)`` and
its derivatives; the caller supplies ``y(r)`` when a site in ``C^n`` is
involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegreeRangeError, DomainError
from .expr import ExpLaurentExpr, Y, parse

FD_STEP_1 = 1e-6
FD_STEP_2 = 1e-4


class NumericProfile:
    """Tabulated profile ``y -> psi(y)`` backed by a vectorized callable.

    Values outside ``y_range`` are NaN.
    """

    def __init__(self, func: Callable, y_range: tuple[float, float], source: str = ""):
        self.func = func
        self.y_range = (float(y_range[0]), float(y_range[1]))
        self.source = source

    def __call__(self, y):
        return self.func(y)

    def __repr__(self):
        lo, hi = self.y_range
        return f"NumericProfile({self.source or 'callable'}, y in ({lo:g}, {hi:g}))"


@dataclass(frozen=True)
class RadialMetric:
    """Complex dimension ``dim`` plus a momentum profile valid on ``y_range``.

    ``profile`` may be an ExpLaurentExpr (or its text) or a NumericProfile.
    When ``y_range`` is omitted it is the maximal positivity interval of
    ``psi`` around ``y_seed`` (default: a point near 1 where psi > 0).
    """

    dim: int
    profile: ExpLaurentExpr | NumericProfile
    y_range: tuple[float, float] | None = None
    y_seed: float | None = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        if isinstance(self.profile, str):
            object.__setattr__(self, "profile", parse(self.profile))
        if self.y_range is None:
            if isinstance(self.profile, NumericProfile):
                rng = self.profile.y_range
            else:
                from .ode import infer_y_range

                rng = infer_y_range(self.profile, self.y_seed)
            object.__setattr__(self, "y_range", rng)
        lo, hi = (float(v) for v in self.y_range)
        if not lo >= 0.0 or not hi > lo:
            raise DomainError(f"invalid y_range ({lo}, {hi})")
        object.__setattr__(self, "y_range", (lo, hi))
        grid = default_grid(self.y_range)
        vals = np.asarray(self.psi(grid), dtype=float)
        if not np.all(vals > 0.0):
            bad = grid[~(vals > 0.0)][0]
            raise DomainError(f"psi is not positive at y={bad:.6g} inside y_range")

    @property
    def symbolic(self) -> bool:
        return isinstance(self.profile, ExpLaurentExpr)

    def psi(self, y):
        return self.profile(y)

    def contains(self, y: float) -> bool:
        lo, hi = self.y_range
        return lo < y < hi

    def grid(self, samples: int = 256) -> np.ndarray:
        return default_grid(self.y_range, samples)


def default_grid(y_range, samples: int = 256) -> np.ndarray:
    """Log-spaced points over the central 90% (in log y) of ``y_range``.

    A zero lower end is replaced by ``hi/100`` and an infinite upper end by
    ``max(10, 10*lo)`` (``[0.1, 10]`` when both are open).
    """
    lo, hi = y_range
    if math.isinf(hi):
        hi = max(10.0, 10.0 * lo)
        if lo == 0.0:
            lo = 0.1
    if lo == 0.0:
        lo = hi / 100.0
    a, b = math.log(lo), math.log(hi)
    pad = 0.05 * (b - a)
    return np.exp(np.linspace(a + pad, b - pad, samples))


# derivatives ----------------------------------------------------------------

class Derivatives:
    """``psi, psi', psi'', sigma, sigma'`` as vectorized callables.

    Symbolic profiles differentiate exactly; numeric ones use central
    differences with relative steps 1e-6 (first order) and 1e-4 (second).
    """

    def __init__(self, m: RadialMetric):
        self.n = m.dim
        if m.symbolic:
            psi = m.profile
            d1 = psi.diff()
            s = sigma_from_psi(m)
            self.psi, self.dpsi, self.ddpsi = psi, d1, d1.diff()
            self.sigma, self.dsigma = s, s.diff()
        else:
            f = m.profile
            n = self.n

            def dpsi(y):
                y = np.asarray(y, dtype=float)
                h = y * FD_STEP_1
                return (f(y + h) - f(y - h)) / (2 * h)

            def ddpsi(y):
                y = np.asarray(y, dtype=float)
                h = y * FD_STEP_2
                return (f(y + h) - 2 * f(y) + f(y - h)) / (h * h)

            # sigma = y^(1-n) d/dy (y^(n-1) psi): differencing w = y^(n-1) psi
            # avoids the cancellation between psi' and (n-1) psi / y when psi
            # grows like y^(1-n)
            def w(y):
                return y ** (n - 1) * f(y)

            def sigma(y):
                y = np.asarray(y, dtype=float)
                h = y * FD_STEP_1
                return (w(y + h) - w(y - h)) / (2 * h) / y ** (n - 1)

            def dsigma(y):
                y = np.asarray(y, dtype=float)
                h = y * FD_STEP_2
                dw = (w(y + h) - w(y - h)) / (2 * h)
                ddw = (w(y + h) - 2 * w(y) + w(y - h)) / (h * h)
                return ddw / y ** (n - 1) - (n - 1) * dw / y**n

            self.psi, self.dpsi, self.ddpsi = f, dpsi, ddpsi
            self.sigma, self.dsigma = sigma, dsigma


def sigma_from_psi(m: RadialMetric):
    """``sigma = psi' + (n-1) psi / y``, in the representation of the input."""
    n = m.dim
    if m.symbolic:
        psi = m.profile
        return psi.diff() + (n - 1) * psi * ExpLaurentExpr.monomial(1.0, -1.0)
    return Derivatives(m).sigma


def rho_k(m: RadialMetric, k: int):
    """k-th generalized scalar curvature as a function of ``y``.

    ``rho_k = u^(k-1) [C(n-1,k) u - C(n-1,k-1) sigma']`` with
    ``u = (n - sigma)/y``; integer powers only, so sign changes of ``u``
    are harmless.
    """
    n = m.dim
    if not (isinstance(k, (int, np.integer)) and 1 <= k <= n):
        raise DegreeRangeError(f"k={k} outside 1..{n}")
    k = int(k)
    hi, lo = math.comb(n - 1, k), math.comb(n - 1, k - 1)
    if m.symbolic:
        sigma = sigma_from_psi(m)
        u = (n - sigma) * ExpLaurentExpr.monomial(1.0, -1.0)
        return u ** (k - 1) * (hi * u - lo * sigma.diff())
    d = Derivatives(m)

    def rho(y):
        y = np.asarray(y, dtype=float)
        u = (n - d.sigma(y)) / y
        return u ** (k - 1) * (hi * u - lo * d.dsigma(y))

    return rho


def rho_all(m: RadialMetric, y) -> np.ndarray:
    """Array of ``rho_1..rho_n`` evaluated at ``y`` (shape ``(n,) + y.shape``)."""
    return np.array([np.asarray(rho_k(m, k)(y), dtype=float) for k in range(1, m.dim + 1)])


# component matrices -------------------------------------------------------

def _site(m: RadialMetric, z):
    z = np.asarray(z, dtype=complex).ravel()
    if z.size != m.dim:
        raise ValueError(f"expected {m.dim} coordinates, got {z.size}")
    r = float(np.sum(np.abs(z) ** 2))
    if r <= 0.0:
        raise DomainError("r = |z|^2 must be positive")
    return z, r


def _radial_matrix(z, r, delta_coef, outer_coef):
    return outer_coef / (r * r) * np.outer(np.conj(z), z) + delta_coef / r * np.eye(z.size)


def metric_components(m: RadialMetric, z, y_at: float) -> np.ndarray:
    """Hermitian ``g[i, j] = (psi-y)/r^2 conj(z_i) z_j + (y/r) delta_ij``."""
    z, r = _site(m, z)
    psi = float(m.psi(y_at))
    return _radial_matrix(z, r, y_at, psi - y_at)


def ricci_components(m: RadialMetric, z, y_at: float) -> np.ndarray:
    """``Ric[i, j] = (-sigma' psi + sigma - n)/r^2 conj(z_i) z_j + (n-sigma)/r delta_ij``."""
    z, r = _site(m, z)
    d = Derivatives(m)
    n = m.dim
    psi, s, ds = (float(f(y_at)) for f in (d.psi, d.sigma, d.dsigma))
    return _radial_matrix(z, r, n - s, -ds * psi + s - n)


# Riemann tensor on the axis -------------------------------------------------

def _axis_values(m, r, y_at):
    if not r > 0.0:
        raise DomainError("r must be positive")
    if not m.contains(y_at):
        raise DomainError(f"y={y_at} outside y_range {m.y_range}")
    d = Derivatives(m)
    return float(d.psi(y_at)), float(d.dpsi(y_at)), float(d.ddpsi(y_at))


def riemann_axis(m: RadialMetric, r: float, y_at: float) -> tuple[float, float, float]:
    """Nonzero Riemann components at ``(z1, 0, ..., 0)`` with ``|z1|^2 = r``.

    Returns ``(R_1111, R_11ii, R_iiii)``; ``R_iijj = R_iiii / 2``.
    """
    psi, dpsi, ddpsi = _axis_values(m, r, y_at)
    r2 = r * r
    return (
        ddpsi * psi * psi / r2,
        (dpsi * y_at - psi) / (y_at * r2),
        2.0 * (psi - y_at) / r2,
    )


def hsc(m: RadialMetric, r: float, y_at: float, xi) -> float:
    """``R(Z, Zbar, Z, Zbar)`` at an axis point, not normalized by ``|Z|^4``.

    Sums over transverse directions run over indices ``i >= 2``; the
    double sum is over ordered pairs ``i != j``.
    """
    xi = np.asarray(xi, dtype=complex).ravel()
    if xi.size != m.dim:
        raise ValueError(f"expected {m.dim} components, got {xi.size}")
    if not np.any(xi):
        raise ValueError("direction must be nonzero")
    r1111, r11ii, riiii = riemann_axis(m, r, y_at)
    a = xi.real**2 + xi.imag**2
    a1, rest = a[0], a[1:]
    s1 = rest.sum()
    s2 = float(np.sum(rest**2))
    cross = s1 * s1 - s2
    return float(r1111 * (a1 * a1) + r11ii * a1 * s1 + 0.5 * riiii * cross + riiii * s2)


@dataclass(frozen=True)
class SignChange:
    lo: float
    hi: float
    root: float
    psi_at_root: float

    @property
    def psi_positive(self) -> bool:
        return self.psi_at_root > 0.0

    def to_dict(self):
        return {
            "lo": self.lo,
            "hi": self.hi,
            "root": self.root,
            "psi_at_root": self.psi_at_root,
            "psi_positive": self.psi_positive,
        }


def hsc_sign_scan(m: RadialMetric, y_lo: float, y_hi: float, samples: int = 256) -> list[SignChange]:
    """Sign changes of ``psi''`` on a uniform grid, each bisected to full precision."""
    if samples < 8:
        raise ValueError("samples must be >= 8")
    lo_r, hi_r = m.y_range
    if not (lo_r <= y_lo < y_hi <= hi_r):
        raise DomainError(f"[{y_lo}, {y_hi}] not inside y_range {m.y_range}")
    ddpsi = Derivatives(m).ddpsi
    ys = np.linspace(y_lo, y_hi, samples)
    signs = np.sign(np.asarray(ddpsi(ys), dtype=float))
    keep = np.flatnonzero(signs != 0)
    out = []
    for a, b in zip(keep[:-1], keep[1:]):
        if signs[a] * signs[b] > 0:
            continue
        lo, hi = float(ys[a]), float(ys[b])
        s_lo = signs[a]
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            s = np.sign(float(ddpsi(mid)))
            if s == 0:
                lo = hi = mid
                break
            if s == s_lo:
                lo = mid
            else:
                hi = mid
        root = 0.5 * (lo + hi)
        out.append(SignChange(lo, hi, root, float(m.psi(root))))
    return out


@dataclass
class CurvatureSample:
    point: np.ndarray
    y: float
    g: np.ndarray
    ric: np.ndarray
    riemann_axis: tuple[float, float, float] | None = None
    hsc: float | None = None
    xi: np.ndarray | None = None

    def to_dict(self):
        def cmat(a):
            return {"re": np.real(a).tolist(), "im": np.imag(a).tolist()}

        out = {
            "point": cmat(self.point),
            "y": self.y,
            "g": cmat(self.g),
            "ric": cmat(self.ric),
        }
        if self.riemann_axis is not None:
            out["riemann_axis"] = dict(zip(("R1111", "R11ii", "Riiii"), self.riemann_axis))
        if self.hsc is not None:
            out["hsc"] = self.hsc
            out["xi"] = cmat(self.xi)
        return out


def curvature_sample(m: RadialMetric, z, y_at: float, xi=None) -> CurvatureSample:
    """Metric, Ricci and (on the axis) Riemann/HSC data at one site."""
    z, r = _site(m, z)
    sample = CurvatureSample(z, float(y_at), metric_components(m, z, y_at), ricci_components(m, z, y_at))
    if m.dim == 1 or not np.any(z[1:]):
        sample.riemann_axis = riemann_axis(m, r, y_at)
        if xi is not None:
            sample.xi = np.asarray(xi, dtype=complex).ravel()
            sample.hsc = hsc(m, r, y_at, sample.xi)
    return sample
