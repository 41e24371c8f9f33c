"""Brute-force cross-checks of the closed-form curvature formulas.

Each oracle recomputes a quantity from its definition with no shared
shortcuts: ``rho_k`` from the characteristic polynomial of ``g^-1 Ric``
sampled through determinants, the Ricci potential derivative from finite
differences of ``log det g`` along a potential table, and the axis
Riemann component from finite differences of the metric itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, SingularMatrix, StencilOutOfDomain, StepFailure
from .geometry import (
    Derivatives,
    RadialMetric,
    metric_components,
    rho_k,
    ricci_components,
    riemann_axis,
)
from .ode import PotentialTable, integrate_y, local_y

RHO_THRESHOLD = 1e-8
RICCI_THRESHOLD = 1e-5
RIEMANN_THRESHOLD = 1e-4
VANDERMONDE_COND_MAX = 1e6


@dataclass
class OracleReport:
    """Closed form against brute force at a list of sites."""

    quantity: str
    points: list
    reference: list
    oracle: list
    max_rel_err: float
    threshold: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.max_rel_err = float(self.max_rel_err)
        self.passed = bool(self.max_rel_err <= self.threshold)

    def to_dict(self):
        return {
            "quantity": self.quantity,
            "points": self.points,
            "reference": self.reference,
            "oracle": self.oracle,
            "max_rel_err": self.max_rel_err,
            "threshold": self.threshold,
            "pass": self.passed,
        }


# rho_k from the determinant expansion ----------------------------------------

def _poly_coeffs(g, ric, det_g, nodes, h):
    """Coefficients of ``P(s) = det(g + s Ric)/det g`` from samples at ``s = h*nodes``."""
    n = g.shape[0]
    vals = np.array([(np.linalg.det(g + (h * u) * ric) / det_g).real for u in nodes])
    V = np.vander(nodes, n + 1, increasing=True)
    cond = np.linalg.cond(V)
    c = np.linalg.solve(V, vals)
    return c / h ** np.arange(n + 1), cond


def rho_det_oracle(m: RadialMetric, z, y_at: float) -> np.ndarray:
    """``rho_1..rho_n`` at the site ``z`` as coefficients of ``det(g + s Ric)/det g``.

    ``y_at`` is the momentum at ``r = |z|^2``.  The polynomial is sampled
    at ``s_j = j h``, ``j = 0..n``, with ``h`` scaled by the spectral
    radius of ``g^-1 Ric``; an ill-conditioned Vandermonde system is
    retried once on nodes centred at ``s = 0``.
    """
    g = metric_components(m, z, y_at)
    ric = ricci_components(m, z, y_at)
    det_g = np.linalg.det(g).real
    if not (det_g > 0.0 and np.all(np.linalg.eigvalsh(g) > 0.0)):
        raise SingularMatrix(f"metric not positive definite at y={y_at!r}")
    n = m.dim
    spec = float(np.max(np.abs(np.linalg.eigvals(np.linalg.solve(g, ric)))))
    h = 0.5 / max(1.0, spec)
    nodes = np.arange(n + 1, dtype=float)
    c, cond = _poly_coeffs(g, ric, det_g, nodes, h)
    if cond > VANDERMONDE_COND_MAX:
        c, cond = _poly_coeffs(g, ric, det_g, nodes - n / 2.0, h)
        if cond > VANDERMONDE_COND_MAX:
            raise SingularMatrix(f"Vandermonde condition {cond:.3g} after rescaling")
    return c[1:]


def rho_det_check(m: RadialMetric, sites, threshold: float = RHO_THRESHOLD) -> OracleReport:
    """Compare ``rho_det_oracle`` with ``geometry.rho_k`` at ``(z, y_at)`` sites.

    The error of each ``rho_k`` is scaled by ``max(1, |rho_k|)``.
    """
    n = m.dim
    fns = [rho_k(m, k) for k in range(1, n + 1)]
    points, ref, ora = [], [], []
    worst = 0.0
    for z, y_at in sites:
        exact = np.array([float(f(y_at)) for f in fns])
        brute = rho_det_oracle(m, z, y_at)
        err = np.abs(brute - exact) / np.maximum(1.0, np.abs(exact))
        worst = max(worst, float(np.max(err)))
        points.append({"z": [[float(v.real), float(v.imag)] for v in np.atleast_1d(z)], "y": float(y_at)})
        ref.append(exact.tolist())
        ora.append(brute.tolist())
    return OracleReport("rho_k", points, ref, ora, worst, threshold)


# Ricci potential -------------------------------------------------------------

def _d_uniform(v, dt):
    """Fourth-order central first derivative on a uniform grid; NaN at the two ends."""
    out = np.full_like(v, np.nan)
    out[2:-2] = (v[:-4] - 8.0 * v[1:-3] + 8.0 * v[3:-1] - v[4:]) / (12.0 * dt)
    return out


def ricci_fd_oracle(m: RadialMetric, table: PotentialTable,
                    threshold: float = RICCI_THRESHOLD) -> OracleReport:
    """``L'(r)`` by finite differences of ``L = -log det g`` against ``(n - sigma)/r``.

    ``L = -(n-1) log y - log psi + n log r`` rowwise.  Compared on the
    interior 80% of the rows; the error is scaled by
    ``max(|reference|, (n + |sigma|)/r)`` so that flat rows are measured
    against the size of the terms that cancel.
    """
    t, r, y = table.t, table.r, table.y
    if len(t) < 32:
        raise ValueError("ricci_fd_oracle needs at least 32 rows")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0.0):
        raise ValueError("table rows must be uniform in t")
    n = m.dim
    d = Derivatives(m)
    psi = np.asarray(d.psi(y), dtype=float)
    L = -(n - 1) * np.log(y) - np.log(psi) + n * t
    dL = _d_uniform(L, dt[0]) / r
    sigma = np.asarray(d.sigma(y), dtype=float)
    ref = (n - sigma) / r
    cut = max(2, int(round(0.1 * len(t))))
    sl = slice(cut, len(t) - cut)
    scale = np.maximum(np.abs(ref[sl]), (n + np.abs(sigma[sl])) / r[sl])
    err = np.abs(dL[sl] - ref[sl]) / scale
    return OracleReport(
        "ricci_potential_derivative",
        r[sl].tolist(),
        ref[sl].tolist(),
        dL[sl].tolist(),
        float(np.max(err)),
        threshold,
    )


# Riemann component on the axis --------------------------------------------------

_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def _stencil_metrics(m, r, y_at, h):
    """``g`` at ``z1 = sqrt(r) + h (a + i b)``, ``a, b = -2..2``, other coordinates zero."""
    n = m.dim
    off = np.arange(-2, 3, dtype=float)
    z1 = math.sqrt(r) + h * (off[:, None] + 1j * off[None, :])
    rr = np.abs(z1) ** 2
    uniq, inv = np.unique(rr.ravel(), return_inverse=True)
    try:
        ys = local_y(m, r, y_at, uniq)
    except (StepFailure, DomainError) as exc:
        raise StencilOutOfDomain(f"stencil around r={r!r} left the domain: {exc}") from exc
    lo, hi = m.y_range
    if not np.all(np.isfinite(ys)) or np.any(ys <= lo) or np.any(ys >= hi):
        raise StencilOutOfDomain(f"stencil around r={r!r} leaves y_range {m.y_range}")
    ys = ys[inv].reshape(rr.shape)
    g = np.empty((5, 5, n, n), dtype=complex)
    z = np.zeros(n, dtype=complex)
    for a in range(5):
        for b in range(5):
            z[0] = z1[a, b]
            g[a, b] = metric_components(m, z, float(ys[a, b]))
    return g


def riemann_fd_oracle(m: RadialMetric, r: float, y_at: float,
                      threshold: float = RIEMANN_THRESHOLD) -> OracleReport:
    """``R_{1 1bar 1 1bar}`` at ``(sqrt(r), 0, ..., 0)`` from differences of ``g``.

    ``-d d-bar g_{1 1bar} + g^{m p} (d g_{1 m}) (d-bar g_{p 1})`` with
    Wirtinger derivatives in ``z1`` taken by five-point central
    differences along Re z1 and Im z1 (step ``1e-4 sqrt(r)``).  The
    closed forms in ``geometry.riemann_axis`` use the opposite overall
    sign (positive ``psi''`` means positive ``R_1111``), so the brute-force
    value is negated before comparison.  Off-axis
    values of ``y`` come from re-integrating ``dy/dt = psi`` from
    ``(r, y_at)``.  The error is scaled by ``max(|reference|, g_{1 1bar}^2)``.
    """
    if not r > 0.0:
        raise DomainError("r must be positive")
    h = 1e-4 * math.sqrt(r)
    g = _stencil_metrics(m, r, y_at, h)
    gx, gy = g[:, 2], g[2, :]
    dx = np.tensordot(_D1, gx, axes=1) / h
    dy = np.tensordot(_D1, gy, axes=1) / h
    lap = (np.tensordot(_D2, gx, axes=1) + np.tensordot(_D2, gy, axes=1)) / (h * h)
    d_z = 0.5 * (dx - 1j * dy)
    d_zbar = 0.5 * (dx + 1j * dy)
    g0 = g[2, 2]
    ginv = np.linalg.inv(g0)
    standard = -0.25 * lap[0, 0] + np.einsum("mp,m,p->", ginv, d_z[0, :], d_zbar[:, 0])
    brute = -float(standard.real)
    ref = riemann_axis(m, r, y_at)[0]
    scale = max(abs(ref), abs(g0[0, 0].real) ** 2)
    err = abs(brute - ref) / scale
    return OracleReport(
        "riemann_1111",
        [{"r": float(r), "y": float(y_at)}],
        [ref],
        [brute],
        err,
        threshold,
    )


# all three at once ---------------------------------------------------------------

def random_sites(m: RadialMetric, rng, count: int = 16, samples: int = 256):
    """``(z, y)`` pairs: ``y`` from the default grid, ``|z|^2`` in ``[0.5, 2]``."""
    grid = m.grid(samples)
    sites = []
    for _ in range(count):
        y_at = float(rng.choice(grid))
        z = rng.normal(size=m.dim) + 1j * rng.normal(size=m.dim)
        z *= math.sqrt(rng.uniform(0.5, 2.0)) / np.linalg.norm(z)
        sites.append((z, y_at))
    return sites


def _inner_table(m, y_mid, samples, rows):
    grid = m.grid(samples)
    # a finite range keeps blowup ends out of the comparison
    inner = RadialMetric(m.dim, m.profile, (float(grid[0]), float(grid[-1])))
    span = math.log(grid[-1] / grid[0])
    return integrate_y(inner, 0.0, y_mid, (-span, span), tol=1e-12, samples=rows)


def ricci_table(m: RadialMetric, y_mid: float, samples: int = 256, rows: int = 513) -> PotentialTable:
    """Uniform-``t`` table through ``(0, y_mid)`` that stays inside the default grid."""
    table = _inner_table(m, y_mid, samples, rows)
    # rows are uniform only on a span symmetric about t0
    half = min(-table.t[0], table.t[-1])
    t = np.linspace(-half, half, rows)
    y = table.solution(t)
    y[rows // 2] = y_mid
    return replace(table, t=t, r=np.exp(t), y=y)


def riemann_site(m: RadialMetric, y_mid: float, samples: int = 256) -> float:
    """``y`` halfway in ``t`` across the grid, as far as possible from either end.

    A profile can reach a domain end within a tiny ``t`` interval, so the
    midpoint in ``y`` may sit a few stencil widths from a singularity.
    """
    table = _inner_table(m, y_mid, samples, 65)
    return float(table.solution(0.5 * (table.t[0] + table.t[-1])))


def run_oracles(m: RadialMetric, rng, y_mid: float | None = None, r: float = 1.0,
                sites: int = 16, samples: int = 256) -> list[OracleReport]:
    """The three cross-checks on one metric.

    ``y_mid`` defaults to the grid midpoint, and the Riemann site then
    defaults to the ``t`` midpoint of the grid span.
    """
    grid = m.grid(samples)
    if y_mid is None:
        y_mid = float(grid[len(grid) // 2])
        y_riem = riemann_site(m, y_mid, samples)
    else:
        y_riem = y_mid
    return [
        rho_det_check(m, random_sites(m, rng, sites, samples)),
        ricci_fd_oracle(m, ricci_table(m, y_mid, samples)),
        riemann_fd_oracle(m, r, y_riem),
    ]
