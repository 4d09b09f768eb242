import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fdsp import EquationSpec, Grid, SpectralField, to_spectral
from fdsp.evolution import SolverConfig, make_initial_data, run
from fdsp.scattering import (DegenerateWindow, PhaseAccumulator, accumulate_phase,
                             admissible_p0, convergence_report, corrected_profile, decay_fit,
                             dominant_frequency, frequency_mask, phase_coefficient,
                             phase_correction, phase_drift_report, total_variation)
from fdsp.spectral import ValidationError, profile_weight


def _field(values, n=8):
    g = Grid(n, 2 * np.pi)
    return SpectralField(g, np.broadcast_to(np.asarray(values, complex), (n,)).copy())


def _accumulate(amp2, times):
    f0 = _field(np.sqrt(amp2(times[0])))
    acc = PhaseAccumulator.start(f0, times[0])
    for t in times[1:]:
        acc.update(_field(np.sqrt(amp2(t))), t)
    return acc


@given(st.floats(1e-6, 10.0), st.floats(1.01, 1e4), st.integers(2, 50))
def test_constant_integrand_exact(A, t_end, n):
    acc = _accumulate(lambda s: A, np.geomspace(1.0, t_end, n))
    assert np.allclose(acc.integral, A * math.log(t_end), rtol=1e-12)


def test_zero_length_update():
    acc = _accumulate(lambda s: 2.0, [1.0, 1.0])
    assert np.all(acc.integral == 0.0) and acc.t_last == 1.0


def test_inverse_time_integrand_leading_error():
    """|f^|^2 = 1/s: exact value 1 - 1/t. The log-trapezoid error is
    h^2/12 [g'(log t) - g'(0)] + O(h^4) with g(x) = e^-x."""
    t_end = 10.0
    for n_upd in (100, 1000):
        times = np.geomspace(1.0, t_end, n_upd + 1)
        acc = _accumulate(lambda s: 1.0 / s, times)
        err = acc.integral[0] - (1.0 - 1.0 / t_end)
        h = math.log(t_end) / n_upd
        lead = h ** 2 / 12 * (1.0 - 1.0 / t_end)
        assert abs(err / lead - 1.0) < 1e-3
    # 1000 updates reach the 1e-6 level
    assert abs(err) < 1e-6


@given(st.integers(0, 2 ** 31))
def test_integral_nonnegative_nondecreasing(seed):
    r = np.random.default_rng(seed)
    g = Grid(16, 10.0)
    f = SpectralField(g, r.normal(size=16) + 1j * r.normal(size=16))
    acc = PhaseAccumulator.start(f)
    prev = acc.integral.copy()
    for t in np.sort(r.uniform(1, 100, size=10)):
        acc = accumulate_phase(acc, f.with_coeffs(r.normal(size=16) + 0j), t)
        assert np.all(acc.integral >= prev)
        prev = acc.integral.copy()


def test_accumulate_phase_is_pure_and_monotone():
    f = _field(1.0)
    a = PhaseAccumulator.start(f)
    b = accumulate_phase(a, f, 2.0)
    assert a.t_last == 1.0 and np.all(a.integral == 0) and b.t_last == 2.0
    with pytest.raises(ValidationError):
        accumulate_phase(b, f, 1.5)
    with pytest.raises(ValidationError):
        PhaseAccumulator.start(f, 0.5)


@pytest.mark.parametrize("kind,xi,expected", [
    ("fKdV", 1.0, 4 / 3), ("fNLS", -1.0, -4 / 3), ("fKdV", -1.0, -4 / 3), ("fNLS", 1.0, -4 / 3),
    ("fKdV", 2.0, 2.0 * 2.0 ** 0.5 / 0.75)])
def test_phase_correction_values(kind, xi, expected):
    spec = EquationSpec(kind, 0.5, 1)
    assert math.isclose(phase_correction(xi, 1.0, spec), expected, rel_tol=1e-14)


@given(st.floats(-0.99, 0.99).filter(lambda a: abs(a) > 1e-3), st.floats(-50, 50))
def test_phase_coefficient_symmetry(alpha, xi):
    kdv = EquationSpec("fKdV", alpha, 1)
    nls = EquationSpec("fNLS", alpha, -1)
    assert phase_coefficient(-xi, kdv) == -phase_coefficient(xi, kdv)
    assert phase_coefficient(-xi, nls) == phase_coefficient(xi, nls)
    assert phase_coefficient(xi, EquationSpec("fNLS", alpha, 1)) == -phase_coefficient(xi, nls)


@given(st.integers(0, 2 ** 31), st.sampled_from(["fKdV", "fNLS"]))
def test_corrected_profile_unimodular(seed, kind):
    r = np.random.default_rng(seed)
    g = Grid(32, 10.0)
    spec = EquationSpec(kind, 0.5, 1)
    f = SpectralField(g, r.normal(size=32) + 1j * r.normal(size=32))
    acc = PhaseAccumulator(g, 3.0, r.uniform(0, 10, 32), np.zeros(32))
    w = corrected_profile(f, acc, spec, t=3.0)
    assert np.allclose(np.abs(w.values), profile_weight(g.xi, 0.5) * np.abs(f.coeffs),
                       rtol=1e-14, atol=0)


def test_corrected_profile_at_start_and_time_mismatch():
    g = Grid(32, 10.0)
    spec = EquationSpec("fNLS", -0.5, 1)
    f = to_spectral(np.exp(-g.x ** 2) + 0j, g)
    acc = PhaseAccumulator.start(f)
    w = corrected_profile(f, acc, spec, t=1.0)
    assert np.array_equal(w.values, profile_weight(g.xi, -0.5) * f.coeffs)
    with pytest.raises(ValidationError):
        corrected_profile(f, acc, spec, t=2.0)


def test_convergence_report_linear_run_is_flat():
    g = Grid(256, 64.0)
    spec = EquationSpec("fNLS", 0.5, 1)
    u0, _ = make_initial_data("gaussian", 0.1, g, 0.5)
    times = [2.0 ** k for k in range(8)]
    tr = run(spec, u0, 128.0, SolverConfig(nonlinear=False, group_speed="ignore"), g,
             profile_times=times)
    series = [profile_weight(g.xi, 0.5) * tr.profiles[t][0] for t in times]
    rep = convergence_report(times, series, 5e-4)
    assert all(d == 0.0 for d in rep["D"])


def test_convergence_report_synthetic_rate():
    times = [2.0 ** k for k in range(9)]
    series = [np.array([1.0 - t ** -0.5]) for t in times]
    rep = convergence_report(times, series, 0.4)
    assert abs(rep["slope"] + 0.5) < 1e-12 and rep["passed"] and rep["decreasing_last4"]


def test_convergence_report_validation():
    with pytest.raises(DegenerateWindow):
        convergence_report([1, 2], [np.zeros(1)] * 2, 1e-4)
    with pytest.raises(ValidationError):
        convergence_report([1, 3, 9, 27, 81, 243], [np.zeros(1)] * 6, 1e-4)
    with pytest.raises(DegenerateWindow):
        convergence_report([1, 2, 4, 8, 16], [np.zeros(1)] * 5, 1e-4)


def test_decay_fit_synthetic():
    t = np.geomspace(1, 200, 20)
    assert abs(decay_fit(t, 3 * t ** -0.5)[0] + 0.5) < 1e-14
    assert abs(decay_fit(t, np.full(20, 2.0))[0]) < 1e-14
    with pytest.raises(DegenerateWindow):
        decay_fit(t[:5], t[:5] ** -0.5)
    with pytest.raises(DegenerateWindow):
        decay_fit(np.linspace(1, 20, 20), np.ones(20))


def test_admissible_p0():
    assert admissible_p0(0.5) == (0.0, 5e-4)
    assert admissible_p0(-0.5) == (0.0, 5e-4)
    assert admissible_p0(-0.1)[1] == pytest.approx(1e-4)


def test_phase_drift_report_pure_rotation():
    spec = EquationSpec("fNLS", 0.5, 1)
    xi0 = 1.0
    t = np.geomspace(10, 500, 30)
    A = 0.3
    acc = A ** 2 * np.log(t)
    # the profile rotates exactly opposite to the correction
    c = A * np.exp(-1j * phase_correction(xi0, acc, spec))
    rep = phase_drift_report(xi0, t, c, acc, spec)
    assert rep["corrected_variation"] < 1e-12 and rep["ratio"] < 1e-10
    with pytest.raises(ValidationError):
        phase_drift_report(xi0, t, np.zeros(30), acc, spec)


def test_total_variation():
    assert total_variation([0, 1, 0, 2]) == 4.0


def test_dominant_frequency_and_mask():
    g = Grid(64, 20.0)
    spec = EquationSpec("fNLS", 0.5, 1)
    c = np.zeros(64, complex)
    c[5] = 1.0
    c[9] = 0.5
    f = SpectralField(g, c)
    assert dominant_frequency(f, spec) == g.xi[5]
    # the |xi|^10 weight makes mode 9 dominate by a factor ~180
    assert frequency_mask(f, 0.5, rel=0.1).sum() == 1
    m = frequency_mask(f, 0.5, rel=1e-3)
    assert m[5] and m[9] and m.sum() == 2
