import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fdsp import kernels
from fdsp.kernels import compiled_available, get_backend

BACKENDS = ["python"] + (["compiled"] if compiled_available() else [])


def _arrays(seed, n):
    r = np.random.default_rng(seed)
    return (r.normal(size=n) + 1j * r.normal(size=n), r.normal(size=n) * 10,
            (r.uniform(size=n) > 0.3).astype(float), r.normal(size=n))


@pytest.mark.parametrize("name", BACKENDS)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 300), t=st.floats(-1e3, 1e3))
def test_rotate_matches_definition(name, seed, n, t):
    c, om, mask, _ = _arrays(seed, n)
    k = get_backend(name)
    assert np.allclose(k.rotate(c, om, t, None), c * np.exp(1j * t * om), rtol=1e-13, atol=1e-13)
    assert np.allclose(k.rotate(c, om, t, mask), mask * c * np.exp(1j * t * om),
                       rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("name", BACKENDS)
@given(seed=st.integers(0, 2 ** 31), n=st.integers(1, 300))
def test_cubes(name, seed, n):
    c, _, _, u = _arrays(seed, n)
    k = get_backend(name)
    assert np.allclose(k.cube_real(u), u ** 3, rtol=1e-15, atol=0)
    assert np.allclose(k.cube_abs(c), np.abs(c) ** 2 * c, rtol=1e-14, atol=0)


@pytest.mark.parametrize("name", BACKENDS)
def test_log_trapezoid_in_place(name):
    c, _, _, _ = _arrays(1, 50)
    integral = np.ones(50)
    last = np.full(50, 2.0)
    get_backend(name).log_trapezoid_update(integral, last, c, 0.1)
    assert np.allclose(integral, 1.0 + 0.05 * (2.0 + np.abs(c) ** 2), rtol=1e-15)
    assert np.allclose(last, np.abs(c) ** 2, rtol=1e-15)


def naive_trilinear(m, f, g, h):
    n = f.size
    K = n // 2
    tot = 0j
    for a in range(n):
        for b in range(n):
            c = 3 * K - a - b          # index of -(eta + sigma) on the centred lattice
            if 0 <= c < n:
                tot += m[a, b] * f[a] * g[b] * h[c]
    return tot


@pytest.mark.parametrize("name", BACKENDS)
@given(seed=st.integers(0, 2 ** 31), K=st.integers(0, 8))
def test_trilinear_sum_against_loops(name, seed, K):
    n = 2 * K + 1
    r = np.random.default_rng(seed)
    m = r.normal(size=(n, n)) + 1j * r.normal(size=(n, n))
    f, g, h = (r.normal(size=n) + 1j * r.normal(size=n) for _ in range(3))
    got = get_backend(name).trilinear_sum(m, f, g, h)
    assert abs(got - naive_trilinear(m, f, g, h)) < 1e-12 * max(1.0, np.abs(m).sum())


@pytest.mark.skipif(not compiled_available(), reason="compiled kernels not built")
def test_backends_bitwise_close():
    c, om, mask, u = _arrays(7, 4096)
    py, cc = get_backend("python"), get_backend("compiled")
    assert np.max(np.abs(py.rotate(c, om, 3.3, mask) - cc.rotate(c, om, 3.3, mask))) < 1e-14
    assert np.array_equal(py.cube_real(u), cc.cube_real(u))


def test_wrappers_coerce_inputs():
    out = kernels.rotate([1, 2, 3], [0, 0, 0], 1.0)
    assert out.dtype == np.complex128 and np.array_equal(out, [1, 2, 3])
    assert kernels.cube_real(np.arange(3, dtype=np.int32)).tolist() == [0, 1, 8]


def test_unknown_backend():
    with pytest.raises(ValueError):
        get_backend("fortran")


def test_env_forces_python_backend():
    env = dict(os.environ, FDSP_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import fdsp; print(fdsp.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
