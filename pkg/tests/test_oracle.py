import math
from dataclasses import replace

import numpy as np
import pytest

from radialkahler.classify import construct_family
from radialkahler.errors import SingularMatrix, StencilOutOfDomain
from radialkahler.expr import ExpLaurentExpr
from radialkahler.geometry import RadialMetric, rho_k
from radialkahler.ode import integrate_y
from radialkahler.oracle import (
    RHO_THRESHOLD,
    OracleReport,
    rho_det_check,
    rho_det_oracle,
    ricci_fd_oracle,
    ricci_table,
    riemann_fd_oracle,
    riemann_site,
    random_sites,
    run_oracles,
)
from radialkahler.properties import draw_exp_laurent, suite_oracle_equivalence

EX31 = "y - y^2 + y^3"


def _site(n, seed=0):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    return z / np.linalg.norm(z)


# report ----------------------------------------------------------------------------

def test_report_pass_flag_follows_threshold():
    assert OracleReport("q", [], [], [], 1e-9, 1e-8).passed
    assert not OracleReport("q", [], [], [], 2e-8, 1e-8).passed
    d = OracleReport("q", [], [], [], 0.0, 1e-8).to_dict()
    assert set(d) == {"quantity", "points", "reference", "oracle", "max_rel_err", "threshold", "pass"}


# rho_k ------------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_rho_det_flat(n):
    assert np.max(np.abs(rho_det_oracle(RadialMetric(n, "y"), _site(n), 1.3))) <= 1e-10


def test_rho_det_constant_scalar_curvature():
    # n = 1, psi = y - C y^2 has scalar curvature 2C
    rho = rho_det_oracle(RadialMetric(1, "y - 0.7*y^2"), _site(1), 0.5)
    assert rho[0] == pytest.approx(1.4, rel=1e-10)


def test_rho_det_constant_sigma_profile():
    n, c, d = 3, 1.0, 0.2
    m = RadialMetric(n, ExpLaurentExpr([(c / n, 1.0, 0.0), (d, 1.0 - n, 0.0)]))
    y = 1.3
    rho = rho_det_oracle(m, _site(n, 1), y)
    assert abs(rho[2]) <= 1e-10
    assert rho[0] == pytest.approx((n - 1) * (n - c) / y, rel=1e-10)


def test_rho_det_matches_sympy_values():
    # det(g + s Ric)/det g expanded exactly in sympy for this profile
    m = RadialMetric(3, EX31)
    assert rho_det_oracle(m, _site(3, 2), 0.3) == pytest.approx([6.0, 11.25, 6.25], rel=1e-10)


def test_rho_det_check_agrees_with_closed_form():
    m = RadialMetric(4, "y + 0.5*y^2*exp(-1*y)")
    rep = rho_det_check(m, random_sites(m, np.random.default_rng(3)))
    assert rep.passed and rep.threshold == RHO_THRESHOLD
    assert len(rep.points) == 16
    exact = [float(rho_k(m, k)(rep.points[0]["y"])) for k in range(1, 5)]
    assert rep.reference[0] == exact


def test_rho_det_rejects_invalid_site():
    with pytest.raises(SingularMatrix):
        rho_det_oracle(RadialMetric(2, "y - y^2"), np.array([1.0, 0.0j]), 1.5)


def test_random_sites_lie_in_the_grid():
    m = RadialMetric(2, EX31)
    grid = m.grid(256)
    for z, y in random_sites(m, np.random.default_rng(0)):
        assert y in grid
        assert 0.5 - 1e-12 <= np.linalg.norm(z) ** 2 <= 2.0 + 1e-12


# Ricci potential ---------------------------------------------------------------

def test_ricci_flat():
    tab = integrate_y(RadialMetric(2, "y"), 0.0, 1.0, (-1.0, 1.0), samples=257)
    rep = ricci_fd_oracle(RadialMetric(2, "y"), tab)
    assert rep.passed
    assert np.max(np.abs(rep.reference)) == 0.0
    # integration noise divided by dt, against terms of size n/r
    assert np.max(np.abs(rep.oracle)) <= 1e-8


@pytest.mark.parametrize("n", [2, 3])
def test_ricci_ke_half_y_over_r(n):
    # lambda = 1 means C = 1/(2(n+1))
    m = construct_family("ke", n, C=1.0 / (2 * (n + 1)), y_seed=0.5)
    tab = integrate_y(m, 0.0, 0.5, (-1.0, 1.0), tol=1e-12, samples=513)
    rep = ricci_fd_oracle(m, tab)
    assert rep.passed
    sl = slice(51, 513 - 51)
    assert np.allclose(rep.reference, tab.y[sl] / (2 * tab.r[sl]), rtol=1e-12)


def test_ricci_example_profile():
    m = RadialMetric(2, EX31)
    rep = ricci_fd_oracle(m, ricci_table(m, 0.5))
    assert rep.max_rel_err <= 1e-5


def test_ricci_rejects_short_or_uneven_tables():
    m = RadialMetric(2, "y")
    with pytest.raises(ValueError):
        ricci_fd_oracle(m, integrate_y(m, 0.0, 1.0, (-1.0, 1.0), samples=16))
    tab = integrate_y(m, 0.0, 1.0, (-1.0, 1.0), samples=64)
    t = tab.t.copy()
    t[10] += 1e-3
    with pytest.raises(ValueError):
        ricci_fd_oracle(m, replace(tab, t=t))


def test_ricci_table_is_uniform_and_centred():
    m = RadialMetric(3, EX31)
    tab = ricci_table(m, 0.4)
    assert np.allclose(np.diff(tab.t), tab.t[1] - tab.t[0], rtol=1e-9)
    assert tab.t[len(tab.t) // 2] == 0.0 and tab.y[len(tab.t) // 2] == 0.4


# Riemann ----------------------------------------------------------------------

def test_riemann_flat():
    rep = riemann_fd_oracle(RadialMetric(2, "y"), 1.0, 1.0)
    assert rep.reference == [0.0] and rep.passed


@pytest.mark.parametrize("n", [2, 3])
def test_riemann_example_at_half(n):
    # psi(1/2) = 3/8 and psi''(1/2) = 1
    rep = riemann_fd_oracle(RadialMetric(n, EX31), 1.0, 0.5)
    assert rep.reference[0] == pytest.approx((3 / 8) ** 2, rel=1e-14)
    assert rep.passed


@pytest.mark.parametrize("r", [0.25, 4.0])
def test_riemann_ke(r):
    m = construct_family("ke", 2, C=0.05, y_seed=1.0)
    assert riemann_fd_oracle(m, r, 1.0).max_rel_err <= 1e-4


def test_riemann_stencil_out_of_domain():
    with pytest.raises(StencilOutOfDomain):
        riemann_fd_oracle(RadialMetric(2, "y", (0.5, 2.0)), 1.0, 2.0 - 1e-7)


def test_riemann_site_avoids_a_nearby_singular_end():
    # psi ~ 0.5/y^2 near 0 reaches y = 0 within a tiny t interval
    psi = "0.499*y^-2*exp(-1*y) + y - 0.324*y^2 - 0.345*y^3*exp(0.5*y)"
    m = RadialMetric(4, psi)
    grid = m.grid(256)
    y_mid = float(grid[128])
    y_r = riemann_site(m, y_mid)
    assert grid[0] < y_r < grid[-1]
    assert riemann_fd_oracle(m, 1.0, y_r).passed


# all together -------------------------------------------------------------------

def test_run_oracles_example():
    reps = run_oracles(RadialMetric(2, EX31), np.random.default_rng(0))
    assert [r.quantity for r in reps] == ["rho_k", "ricci_potential_derivative", "riemann_1111"]
    assert all(r.passed for r in reps)


def test_exp_laurent_draws_are_valid_and_conditioned():
    rng = np.random.default_rng(5)
    for _ in range(10):
        p, m = draw_exp_laurent(rng)
        assert 1 <= p["n"] <= 4
        y = m.grid(256)
        ratio = m.psi(y) / y
        assert np.all(ratio > 0) and np.max(np.maximum(ratio, 1 / ratio)) <= 1e5


def test_oracle_equivalence_small_suite():
    res = suite_oracle_equivalence(np.random.default_rng(11), profiles=8)
    assert res["profiles"] == 8
    assert all(v["passed"] == 8 for v in res["oracles"].values()), res["failures"]
    assert math.isfinite(res["oracles"]["rho_k"]["max_rel_err"])
