"""Acceptance criteria, one printed PASS/FAIL line each.

Run with ``pytest -v tests/test_acceptance.py``; the lines are written
straight to the terminal so they appear even when the test passes.
"""
import math
import time

import numpy as np
import pytest

from radialkahler import kernels
from radialkahler.classify import (
    classify_extremal,
    classify_ke,
    classify_krs,
    construct_family,
    krs_sigma_discrepancy,
    verify_theorem,
)
from radialkahler.expr import ExpLaurentExpr, evaluate, parse
from radialkahler.geometry import (
    RadialMetric,
    hsc_sign_scan,
    metric_components,
    rho_k,
    ricci_components,
)
from radialkahler.ode import integrate_y, reconstruct_potential
from radialkahler.oracle import rho_det_oracle
from radialkahler.properties import run_theorem_suites, suite_oracle_equivalence

SUITE_BUDGET = 60.0


@pytest.fixture
def report(capsys):
    start = time.perf_counter()

    def emit(number, ok, detail):
        took = time.perf_counter() - start
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'} ({took:.1f} s) {detail}")
        return ok

    return emit


def _site(n, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    return z / np.linalg.norm(z)


def test_criterion_1_example_profile(report):
    m = RadialMetric(2, parse("y - y^2 + y^3"))
    e = classify_extremal(m)
    params = (e.A, e.B, e.C, e.D)
    found = hsc_sign_scan(m, 0.05, 1.0)
    ok = params == (0.0, 0.0, 1.0, -1.0) and len(found) == 1
    root_err = psi_err = math.inf
    if found:
        root_err = abs(found[0].root - 1 / 3)
        psi_err = abs(found[0].psi_at_root - 7 / 27)
        ok = ok and root_err <= 1e-9 and psi_err <= 1e-12
    detail = (f"(A,B,C,D)={params} sign changes={len(found)} root err={root_err:.2g} (<=1e-9) "
              f"psi err={psi_err:.2g} (<=1e-12)")
    assert report(1, ok, detail)


def test_criterion_2_soliton_example(report):
    m = construct_family("krs", 3, mu=-1.0, lam=1.0, nu=0.0, y_seed=3.0)
    val_err = abs(evaluate(m.profile, 3.0) - 1 / 3)
    # the validity interval ends near y = 3.59
    found = hsc_sign_scan(m, 2.0, 3.5)
    root_err = min((abs(s.root - 3.0) for s in found), default=math.inf)
    bracketed = any(s.lo <= 3.0 <= s.hi for s in found)
    p = classify_krs(m)
    par_err = math.inf if p is None else max(abs(p.mu + 1.0), abs(p.lam - 1.0), abs(p.nu))
    ok = val_err <= 1e-12 and bracketed and root_err <= 1e-9 and par_err <= 1e-9
    detail = (f"psi(3) err={val_err:.2g} (<=1e-12) root err={root_err:.2g} (<=1e-9) "
              f"(mu,lam,nu) err={par_err:.2g} (<=1e-9)")
    assert report(2, ok, detail)


def test_criterion_3_scalar_curvature(report):
    worst = 0.0
    for i, C in enumerate((0.3, 0.7, 1.1)):
        m = RadialMetric(1, ExpLaurentExpr([(1.0, 1.0, 0.0), (-C, 2.0, 0.0)]))
        y = m.grid(16)
        closed = np.asarray(rho_k(m, 1)(y), dtype=float)
        worst = max(worst, float(np.max(np.abs(closed - 2 * C))))
        for j, yy in enumerate(y[::5]):
            worst = max(worst, abs(rho_det_oracle(m, _site(1, 10 * i + j), float(yy))[0] - 2 * C))
    assert report(3, worst <= 1e-9, f"max |rho_1 - 2C| = {worst:.2g} (<=1e-9)")


def test_criterion_4_ke_coherence(report):
    ke_err = ric_err = sol_err = 0.0
    trivial = True
    for C in (0.2, 0.5):
        for n in (2, 3, 4):
            m = construct_family("ke", n, C=C, y_seed=0.5)
            lam = 2 * C * (n + 1)
            ke = classify_ke(m)
            ke_err = max(ke_err, math.inf if ke is None else abs(ke.einstein_constant - lam))
            for j, y in enumerate(m.grid(8)):
                z = _site(n, j)
                diff = ricci_components(m, z, y) - lam / 2 * metric_components(m, z, y)
                ric_err = max(ric_err, float(np.max(np.abs(diff))))
            p = classify_krs(m)
            if p is None:
                sol_err, trivial = math.inf, False
            else:
                sol_err = max(sol_err, abs(p.lam - lam / 2))
                trivial = trivial and p.trivial
    ok = ke_err <= 1e-10 and ric_err <= 1e-10 and sol_err <= 1e-10 and trivial
    detail = (f"lambda_KE err={ke_err:.2g} Ric-(lambda/2)g err={ric_err:.2g} "
              f"solitonic err={sol_err:.2g} (all <=1e-10) trivial={trivial}")
    assert report(4, ok, detail)


def test_criterion_5_constant_sigma_profile(report):
    n, c, d = 3, 1.0, 0.2
    m = RadialMetric(n, ExpLaurentExpr([(c / n, 1.0, 0.0), (d, 1.0 - n, 0.0)]))
    y = m.grid(256)
    rho3 = float(np.max(np.abs(np.asarray(rho_k(m, 3)(y), dtype=float))))
    rho1 = np.asarray(rho_k(m, 1)(y), dtype=float)
    spread = float(np.ptp(rho1))
    flat = RadialMetric(n, ExpLaurentExpr([(c / n, 1.0, 0.0)]))
    tab = reconstruct_potential(integrate_y(flat, 0.0, 1.0, (-2.0, 2.0)))
    beta = n / c
    ref = beta * tab.r ** (c / n)
    pot_err = float(np.max(np.abs(tab.f - (ref - beta)) / ref))
    ok = rho3 <= 1e-10 and spread > 1e-6 and pot_err <= 1e-7
    detail = f"max|rho_3|={rho3:.2g} (<=1e-10) rho_1 spread={spread:.3g} potential err={pot_err:.2g} (<=1e-7)"
    assert report(5, ok, detail)


def test_criterion_6_oracle_equivalence(report):
    start = time.perf_counter()
    res = suite_oracle_equivalence(np.random.default_rng(0), profiles=50, max_dim=4)
    took = time.perf_counter() - start
    o = res["oracles"]
    limits = {"rho_k": 1e-8, "ricci_potential_derivative": 1e-5, "riemann_1111": 1e-4}
    ok = all(o[q]["max_rel_err"] <= lim and o[q]["passed"] == 50 for q, lim in limits.items())
    ok = ok and took <= SUITE_BUDGET
    detail = "; ".join(f"{q} max={o[q]['max_rel_err']:.2g} (<={lim:g}) {o[q]['passed']}/50"
                       for q, lim in limits.items())
    assert report(6, ok, detail), res["failures"]


def test_criterion_7_theorem_suites(report):
    start = time.perf_counter()
    out = run_theorem_suites(draws=100, seed=0)
    took = time.perf_counter() - start
    counts = {k: len(v.violations) for k, v in out.items()}
    ok = all(v == 0 for v in counts.values()) and all(v.draws == 100 for v in out.values())
    ok = ok and took <= SUITE_BUDGET
    assert report(7, ok, f"violations per suite {counts} (all 0 required), 100 draws each")


def _terminal_error(psi, exact, y0, span, tol=None):
    kw = {} if tol is None else {"tol": tol}
    tab = integrate_y(RadialMetric(2, psi), 0.0, y0, span, **kw)
    return max(abs(tab.y[0] - exact(span[0])) / exact(span[0]),
               abs(tab.y[-1] - exact(span[1])) / exact(span[1]))


def test_criterion_8_ode_accuracy(report):
    cases = [
        ("y", math.exp, 1.0, (-2.0, 2.0)),
        ("y - y^2", lambda t: 1.0 / (1.0 + math.exp(-t)), 0.5, (-5.0, 5.0)),
    ]
    acc = max(_terminal_error(p, f, y0, sp) for p, f, y0, sp in cases)
    tol = 1e-8
    ratios = [_terminal_error(p, f, y0, sp, tol) / _terminal_error(p, f, y0, sp, tol / 2)
              for p, f, y0, sp in cases]
    # informational: fixed steps show the method order
    fixed = [abs(kernels.dopri5(lambda t, y: y, 0.0, 1.0, 1.0, 1e12, 1e12, h_init=h, h_max=h)[1][-1]
                 - math.e) for h in (0.1, 0.05)]
    ok = acc <= 1e-9 and min(ratios) >= 8.0
    detail = (f"span-end err={acc:.2g} (<=1e-9); halving tol gains {min(ratios):.2f}x (>=8x required); "
              f"halving a fixed step gains {fixed[0] / fixed[1]:.1f}x")
    assert report(8, ok, detail)


def test_criterion_9_sigma_discrepancy(report):
    d = krs_sigma_discrepancy(3, -1.0, 1.0, 0.5)
    res = d["derived"]["ode_residual"]
    rep = verify_theorem(construct_family("krs", 3, mu=-1.0, lam=1.0, nu=0.5, y_seed=1.0))
    documented = any("y^(j-n)" in s for s in rep["notes"])
    ok = res <= 1e-12 and documented
    detail = (f"derived sigma residual={res:.2g} (<=1e-12); printed closed form residual="
              f"{d['flipped_exponent']['ode_residual']:.2g} (informational); note present={documented}")
    assert report(9, ok, detail)
