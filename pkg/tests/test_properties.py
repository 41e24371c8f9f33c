import numpy as np
import pytest

from radialkahler.classify import classify_kcsck, classify_ke
from radialkahler.properties import (
    PARAM_BOUND,
    THEOREM_SUITES,
    SuiteResult,
    draw_extremal,
    draw_kcsck,
    draw_ke,
    draw_krs,
    run_theorem_suites,
    suite_roundtrip,
    suite_scale_coherence,
)


# draws --------------------------------------------------------------------------

def test_extremal_draw_respects_bounds():
    rng = np.random.default_rng(0)
    for _ in range(20):
        p, m = draw_extremal(rng, min_bd=0.1)
        assert abs(p["B"]) + abs(p["D"]) > 0.1
        assert all(abs(p[k]) <= PARAM_BOUND for k in "ABCD")
        assert 1 <= p["n"] <= 5 and m.dim == p["n"]
        lo, hi = m.y_range
        assert lo < hi


def test_krs_draw_nontrivial():
    rng = np.random.default_rng(1)
    for _ in range(20):
        p, m = draw_krs(rng, nontrivial=True)
        assert abs(p["mu"]) >= 0.1
        if p["n"] == 1:
            assert abs(p["nu"]) >= 0.1
        else:
            assert abs(p["nu"]) >= 0.1 or abs(p["lam"] - p["mu"]) >= 0.1


def test_kcsck_draw_radicand():
    rng = np.random.default_rng(2)
    for _ in range(10):
        p, m = draw_kcsck(rng, min_b=0.1)
        assert abs(p["B_k"]) >= 0.1
        y = m.grid(64)
        assert np.all(p["A_k"] + p["B_k"] / y ** p["n"] >= 0)
        assert classify_kcsck(m, p["k"], tol=1e-6) is not None


def test_draws_are_reproducible():
    a = [draw_ke(np.random.default_rng(7))[0] for _ in range(2)]
    assert a[0] == a[1]


def test_ke_draw_recognized():
    p, m = draw_ke(np.random.default_rng(3), n=3)
    assert classify_ke(m) is not None


# suites ---------------------------------------------------------------------------

@pytest.mark.parametrize("family", ["extremal", "ke", "krs", "kcsck"])
def test_roundtrip(family):
    res = suite_roundtrip(np.random.default_rng(0), family)
    assert res.draws == 200
    assert res.passed, res.violations[:3]
    assert res.max_error <= 1e-7


@pytest.mark.parametrize("family", ["extremal", "ke", "krs"])
def test_symbolic_roundtrip_is_rounding_exact(family):
    res = suite_roundtrip(np.random.default_rng(1), family, draws=50, regrid=False)
    assert res.max_error <= 1e-9


def test_scale_coherence():
    res = suite_scale_coherence(np.random.default_rng(0))
    assert res.passed and res.max_error <= 1e-9


def test_theorem_suites_small():
    out = run_theorem_suites(draws=20, seed=4)
    assert set(out) == set(THEOREM_SUITES)
    assert all(r.passed for r in out.values())


def test_theorem_suites_are_seeded():
    a = run_theorem_suites(draws=5, seed=9)
    b = run_theorem_suites(draws=5, seed=9)
    assert {k: v.to_dict() for k, v in a.items()} == {k: v.to_dict() for k, v in b.items()}


def test_suite_result_dict():
    r = SuiteResult("x", 3, violations=[{"draw": 0}])
    assert not r.passed
    assert r.to_dict()["passed"] is False


def test_unknown_family():
    with pytest.raises(ValueError):
        suite_roundtrip(np.random.default_rng(0), "nope", draws=1)
