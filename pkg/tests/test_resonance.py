import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from fdsp import EquationSpec
from fdsp.quadrature import QuadratureError, gk15, integrate
from fdsp.resonance import (MODEL_CONSTANT, cutoff_transform, flat_profile, model_error_exact,
                            model_value_quadrature, phase_inequality_check,
                            phase_inequality_ratio, resonant_asymptotic_check, resonant_constant,
                            resonant_window, stationary_phase_model_check)
from fdsp.spectral import ValidationError, cutoff


def _phi_mp(u):
    a = abs(u)
    if a <= 1:
        return mp.mpf(1)
    if a < 2:
        return mp.cos(mp.pi / 2 * (a - 1)) ** 2
    return mp.mpf(0)


# -- quadrature ----------------------------------------------------------------

def test_gk15_degrees_of_exactness():
    a, b = np.array([0.0]), np.array([1.0])
    k, e = gk15(lambda x: 23.0 * x ** 22, a, b)
    assert abs(k[0] - 1.0) < 1e-14
    assert e[0] > 1e-8                          # the embedded Gauss rule stops at degree 13
    _, e = gk15(lambda x: 14.0 * x ** 13, a, b)
    assert e[0] < 1e-14


def test_integrate_oscillatory_complex():
    w = 37.0
    val, err = integrate(lambda x: np.exp(1j * w * x), [0.0, 3.0, 10.0], tol=1e-12)
    ref = (np.exp(1j * w * 10.0) - 1.0) / (1j * w)
    assert abs(val - ref) < 1e-11 and err < 1e-11


def test_integrate_budget_and_validation():
    with pytest.raises(QuadratureError):
        integrate(lambda x: np.sin(1e4 * x ** 2), [0.0, 10.0], tol=1e-14, max_intervals=50)
    with pytest.raises(ValueError):
        integrate(np.sin, [1.0, 0.0])


# -- model integral --------------------------------------------------------------

@pytest.mark.parametrize("v", [0.0, 0.3, 1.0, math.pi, 2 * math.pi, 7.7, 40.0])
def test_cutoff_transform_against_mpmath(v):
    ref = mp.quad(lambda u: _phi_mp(u) * mp.cos(u * v), [-2, -1, 1, 2])
    assert abs(cutoff_transform(v) - float(ref)) < 1e-13


def _brute_model(N, p=400):
    """Direct 2D Gauss-Legendre evaluation of int int e^{-ixy} phi(x/N) phi(y/N)."""
    x, w = np.polynomial.legendre.leggauss(p)
    nodes, weights = [], []
    for lo, hi in ((-2 * N, -N), (-N, N), (N, 2 * N)):
        nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * w)
    e = np.concatenate(nodes)
    we = np.concatenate(weights) * cutoff(e / N)
    return float(np.real(we @ np.exp(-1j * np.outer(e, e)) @ we))


@pytest.mark.parametrize("N", [1.0, 2.0, 3.0])
def test_model_exact_matches_brute_force(N):
    exact = 2 * math.pi + float(model_error_exact(N))
    assert abs(_brute_model(N) - exact) < 1e-12
    assert abs(model_value_quadrature(N)[0] - exact) < 1e-12


def test_model_errors_frozen():
    # mpmath reference, 50 digits; the error decays faster than any power
    ref = {25: 7.5e-13, 100: 7.2e-19, 1600: 5.9e-31}
    for N, e in ref.items():
        got = float(model_error_exact(N))
        assert abs(got - e) < 0.05 * e, (N, got)
    assert abs(float(model_error_exact(400))) < 1e-25


def test_model_check_report():
    r = stationary_phase_model_check(4.0)
    assert r["within"] and r["C"] == MODEL_CONSTANT
    assert r["bound"] == pytest.approx(MODEL_CONSTANT / 2)
    q = stationary_phase_model_check(4.0, method="quadrature")
    assert abs(q["value"] - r["value"]) < 1e-12
    with pytest.raises(ValidationError):
        stationary_phase_model_check(0.5)
    with pytest.raises(ValidationError):
        stationary_phase_model_check(4.0, method="simpson")


# -- resonant window ---------------------------------------------------------------

def test_window_indices_by_hand():
    # k = 0, m = floor(log2 1001) = 9, lbar = ceil(-4.41) = -4
    assert resonant_window(1.0, 1e3, 0.5) == (0, 9, -4, 1 / 16)
    # k = 2, m = 13, lbar = ceil(1.5 * 2 / 2 - 6.37) = ceil(-4.87) = -4
    assert resonant_window(-5.0, 1e4, -0.5) == (2, 13, -4, 1 / 16)
    assert resonant_constant(1.0, 1e3, 0.5) == pytest.approx(2 * math.pi / 750.0, rel=1e-15)


def _midpoint_oracle(xi, s, spec, W, m=3000):
    h = 4.0 * W / m
    e = -2 * W + h * (np.arange(m) + 0.5)
    E, S = np.meshgrid(e, e, indexing="ij")
    om = spec.linear_frequency
    ph = om(xi) - om(xi + E) - om(xi + S) + om(xi + E + S)
    return h * h * np.sum(np.exp(-1j * s * ph) * cutoff(E / W) * cutoff(S / W))


@pytest.mark.parametrize("kind,alpha", [("fNLS", 0.5), ("fKdV", -0.5)])
def test_resonant_integral_against_midpoint_rule(kind, alpha):
    spec = EquationSpec(kind, alpha, 1)
    r = resonant_asymptotic_check(flat_profile(), 1.0, 1e3, spec)
    ref = _midpoint_oracle(1.0, 1e3, spec, r["W"])
    assert abs(complex(*r["J"]) - ref) < 1e-7 * abs(ref)
    assert r["quadrature_error"] < 1e-10
    assert r["deviation"] == pytest.approx(abs(complex(*r["J"]) - complex(*r["asymptotic"]))
                                           / abs(complex(*r["asymptotic"])))


def test_resonant_validation():
    spec = EquationSpec("fNLS", 0.5, 1)
    with pytest.raises(ValidationError):
        resonant_asymptotic_check(flat_profile(), 1.0, 50.0, spec)
    with pytest.raises(ValidationError):
        resonant_asymptotic_check(flat_profile(), 0.0, 1e3, spec)
    with pytest.raises(ValidationError):
        resonant_asymptotic_check(flat_profile(), 1.0, 1e3, spec, band=(0.9, 1.1))


# -- phase inequalities ---------------------------------------------------------------

alphas = st.floats(-0.95, 0.95).filter(lambda a: abs(a) > 0.02)
mags = st.floats(1e-3, 1e3)


@given(alphas, mags, mags, mags)
def test_phase_ratio_positive(alpha, x, y, z):
    a, b, c = sorted((x, y, z), reverse=True)
    assert phase_inequality_ratio(a, b, c, alpha) > 0


@given(alphas, mags, mags, mags, st.floats(1e-2, 1e2))
def test_phase_ratio_scale_invariant(alpha, x, y, z, lam):
    a, b, c = sorted((x, y, z), reverse=True)
    r0 = phase_inequality_ratio(a, b, c, alpha)
    r1 = phase_inequality_ratio(lam * a, lam * b, lam * c, alpha)
    assert r1 == pytest.approx(r0, rel=1e-9, abs=1e-14)


@given(alphas, st.floats(0.1, 10.0), st.floats(0.1, 1.0), st.floats(0.1, 1.0))
def test_phase_ratio_direct_formula(alpha, a, rb, rc):
    b = a * rb
    c = b * rc
    assume(b >= c)
    p = alpha + 1
    if alpha > 0:
        ref = ((a + b + c) ** p - a ** p - b ** p - c ** p) / (b * a ** alpha)
    else:
        ref = (a ** p + b ** p + c ** p - (a + b + c) ** p) / a ** p
    assert phase_inequality_ratio(a, b, c, alpha) == pytest.approx(ref, rel=1e-9, abs=1e-13)


def test_spot_values():
    assert abs(phase_inequality_ratio(1.0, 1.0, 1.0, 0.5) - (3 * math.sqrt(3) - 3)) < 1e-12
    assert abs(phase_inequality_ratio(1.0, 1.0, 1.0, -0.5) - (3 - math.sqrt(3))) < 1e-12


def test_inequality_check_deterministic_and_validated():
    a = phase_inequality_check(0.5, 10 ** 4, seed=3, chunk=3000)
    b = phase_inequality_check(0.5, 10 ** 4, seed=3)
    assert a["min_ratio"] == b["min_ratio"] and a["positive"]
    for bad in (0.0, 1.0, -1.0):
        with pytest.raises(ValidationError):
            phase_inequality_check(bad, 10)
