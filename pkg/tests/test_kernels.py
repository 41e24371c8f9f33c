import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radialkahler import _pykernels, kernels

BACKENDS = kernels.backends()
compiled = pytest.mark.skipif("compiled" not in BACKENDS, reason="extension not built")

EX31 = ([1.0, -1.0, 1.0], [1.0, 2.0, 3.0], [0.0, 0.0, 0.0])


def _same(a, b, rtol=1e-13):
    ta, ya, ca, sa, tba, yba = a
    tb, yb, cb, sb, tbb, ybb = b
    assert sa == sb
    assert len(ta) == len(tb)
    assert np.allclose(ta, tb, rtol=rtol, atol=1e-15)
    assert np.allclose(ya, yb, rtol=rtol, atol=1e-15)
    assert np.allclose(ca, cb, rtol=1e-10, atol=1e-13)


def test_backend_flag():
    assert kernels.BACKEND in ("compiled", "python")
    assert "python" in BACKENDS


def test_pure_switch_selects_python():
    code = "from radialkahler import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, RADIALKAHLER_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"


@compiled
@settings(max_examples=50)
@given(st.lists(st.tuples(st.floats(-5, 5), st.integers(-3, 3), st.sampled_from([0.0, 0.5, -1.0])),
                min_size=1, max_size=4),
       st.lists(st.floats(0.1, 5.0), min_size=1, max_size=20))
def test_eval_terms_parity(ts, ys):
    c, p, m = (np.array([float(t[i]) for t in ts]) for i in range(3))
    ys = np.array(ys)
    a = BACKENDS["python"].eval_terms(c, p, m, ys)
    b = BACKENDS["compiled"].eval_terms(c, p, m, ys)
    assert np.allclose(a, b, rtol=1e-14, atol=1e-14 * np.max(np.abs(a), initial=1.0))


@compiled
@pytest.mark.parametrize("t1,y_hi", [(2.0, math.inf), (-3.0, math.inf), (3.0, 8.0)])
def test_dopri_terms_parity(t1, y_hi):
    args = (*EX31, 0.0, 0.4, t1, 1e-10, 1e-12, 1e-12, y_hi)
    _same(BACKENDS["python"].dopri_terms(*args), BACKENDS["compiled"].dopri_terms(*args))


@compiled
def test_dopri_terms_parity_with_step_cap():
    args = (*EX31, 0.0, 0.4, 1.0, 1e-10, 1e-12, 1e-12, 5.0)
    a = BACKENDS["python"].dopri_terms(*args, h_max=0.01)
    b = BACKENDS["compiled"].dopri_terms(*args, h_max=0.01)
    _same(a, b)
    assert np.max(np.diff(a[0])) <= 0.01 * (1 + 1e-12)


@compiled
@pytest.mark.parametrize("n,k,a_k,b_k", [(2, 2, 0.0, 1.0), (3, 2, 0.5, 0.8), (1, 1, 2.0, 0.0)])
def test_dopri_kcsck_parity(n, k, a_k, b_k):
    for y1 in (0.5, 3.0):
        args = (n, k, a_k, b_k, 1.0, 0.7, y1, 1e-10, 1e-12)
        _same(BACKENDS["python"].dopri_kcsck(*args), BACKENDS["compiled"].dopri_kcsck(*args))


@compiled
def test_kcsck_sigma_parity():
    for y in (0.3, 1.0, 2.5):
        a = BACKENDS["python"].kcsck_sigma(3, 2, 0.5, 0.8, y)
        b = BACKENDS["compiled"].kcsck_sigma(3, 2, 0.5, 0.8, y)
        assert a == pytest.approx(b, rel=1e-15)
    assert math.isnan(BACKENDS["compiled"].kcsck_sigma(2, 2, -1.0, 0.5, 2.0))


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_endpoint_equal_to_previous_end(name):
    # integrating again to a previous run's last time must end cleanly
    mod = BACKENDS[name]
    first = mod.dopri_terms(*EX31, 0.0, 1.0, 3.0, 1e-12, 1e-14, 0.125, 8.0)
    again = mod.dopri_terms(*EX31, 0.0, 1.0, float(first[0][-1]), 1e-12, 1e-14, 0.125, 8.0)
    assert again[3] == kernels.END


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_positivity_event(name):
    # psi = y - y^2 vanishes at y = 1, which is only approached
    out = BACKENDS[name].dopri_terms([1.0, -1.0], [1.0, 2.0], [0.0, 0.0], 0.0, 0.5, 60.0,
                                     1e-10, 1e-12, 0.0, math.inf)
    assert out[3] in (kernels.EVENT, kernels.END)
    assert out[1][-1] < 1.0


@pytest.mark.parametrize("name", sorted(BACKENDS))
def test_dense_output_reproduces_nodes(name):
    ts, ys, coef, status, _, _ = BACKENDS[name].dopri_terms(*EX31, 0.0, 0.4, 1.0, 1e-10, 1e-12,
                                                            1e-12, 8.0)
    assert status == kernels.END
    # coef rows start from the left node of each step
    assert np.allclose(coef[:, 0], ys[:-1], rtol=1e-15)


def test_python_dopri5_exponential():
    out = _pykernels.dopri5(lambda t, y: -y, 0.0, 1.0, 2.0, 1e-10, 1e-12)
    assert out[3] == kernels.END
    assert out[1][-1] == pytest.approx(math.exp(-2.0), rel=1e-9)
