import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from fdsp import EquationSpec, Grid, to_physical, to_spectral
from fdsp.linear import (band_bump, bench_grid, dispersive_bench, evolve_linear, fit_loglog,
                         gaussian_multiplier, group_speed_margin, l1_interp_check,
                         l1_interp_corpus, linf_oversampled, random_packet, trilinear_check,
                         whole_line_oracle)
from fdsp.spectral import ValidationError, band_symbol

SPECS = [EquationSpec(k, a, 1) for k in ("fKdV", "fNLS") for a in (-0.5, 0.5)]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: f"{s.kind}{s.alpha:+}")
def test_linear_flow_matches_whole_line_quadrature(spec):
    # the raised-cosine bump is C^1, so its x-tail decays like |x|^-3 and
    # a long box is needed before periodization drops below 1e-9
    g = Grid(16384, 4000.0)
    u = to_physical(evolve_linear(band_bump(g, 0), 20.0, spec))
    dens = lambda s: band_symbol(s, 0)
    for m in (8192, 8195, 8250, 8000):
        x = g.x[m]
        ref = (whole_line_oracle(dens, x, 20.0, spec, (-2.0, -0.5))
               + whole_line_oracle(dens, x, 20.0, spec, (0.5, 2.0)))
        assert abs(u[m] - ref) < 1e-9


def test_whole_line_oracle_against_mpmath():
    spec = EquationSpec("fNLS", 0.5, 1)
    dens = lambda s: np.exp(-(s - 1.0) ** 2 * 8.0)
    got, err = whole_line_oracle(dens, 3.0, 5.0, spec, (-2.0, 4.0), tol=1e-12, full_output=True)
    w = lambda s: mp.exp(-(s - 1) ** 2 * 8) * mp.expj(3 * s - 5 * abs(s) ** 1.5)
    ref = mp.quad(w, [-2, 0, 1, 4]) / mp.sqrt(2 * mp.pi)
    assert abs(got - complex(ref)) < 1e-11 and err < 1e-10


def test_oracle_validation():
    spec = EquationSpec("fNLS", 0.5, 1)
    with pytest.raises(ValidationError):
        whole_line_oracle(np.ones_like, 0.0, -1.0, spec, (0, 1))
    with pytest.raises(ValidationError):
        whole_line_oracle(np.ones_like, 0.0, 1.0, spec, (1, 0))


@given(st.sampled_from(SPECS), st.floats(0.0, 1e4))
def test_linear_flow_is_unitary(spec, t):
    g = Grid(64, 10.0)
    f = to_spectral(np.exp(-g.x ** 2), g, real_valued=spec.is_kdv)
    v = evolve_linear(f, t, spec)
    assert np.allclose(np.abs(v.coeffs), np.abs(f.coeffs), rtol=1e-13, atol=0)
    assert v.real_valued == spec.is_kdv


def test_group_property():
    spec = EquationSpec("fKdV", -0.5, 1)
    g = Grid(128, 50.0)
    f = band_bump(g, 0)
    a = evolve_linear(evolve_linear(f, 3.0, spec), 4.5, spec).coeffs
    b = evolve_linear(f, 7.5, spec).coeffs
    assert np.max(np.abs(a - b)) < 1e-13


def test_oversampled_linf_of_cosine():
    g = Grid(16, 2 * np.pi)
    f = to_spectral(np.cos(g.x + 0.1), g)
    assert abs(linf_oversampled(f, 8) - 1.0) < 1e-3


def test_fit_loglog_exact_power():
    t = np.geomspace(1, 100, 9)
    slope, se = fit_loglog(t, 3.0 * t ** -0.5)
    assert abs(slope + 0.5) < 1e-14 and se < 1e-12


def test_bench_grid_respects_group_speed():
    for spec in SPECS:
        g = bench_grid(spec, 0, 256.0)
        assert group_speed_margin(spec, 0.5, 2.0, 256.0, g.box_length) <= 1.0


def test_bench_rejects_small_box():
    with pytest.raises(ValidationError):
        dispersive_bench(SPECS[0], 0, [1.0, 100.0], grid=Grid(256, 64.0))


@pytest.mark.parametrize("spec", [EquationSpec("fNLS", 0.5, 1), EquationSpec("fKdV", -0.5, 1)],
                         ids=["fNLS+0.5", "fKdV-0.5"])
def test_asymptotic_decay_rate(spec):
    """Beyond the pre-asymptotic window the local decay rate settles at -1/2."""
    r = dispersive_bench(spec, 0, np.geomspace(1024.0, 8192.0, 7))
    assert -0.55 <= r.fitted_slope <= -0.45
    assert r.fitted_constant < 10.0


def test_l1_interp_scale_invariance():
    r = np.random.default_rng(3)
    g0 = Grid(4096, 256.0)
    u = random_packet(g0, 0, r)
    x = to_physical(u)
    # u(2x) sampled on a box half as long carries the same data at band 1
    g1 = Grid(4096, 128.0)
    v = to_spectral(x, g1, real_valued=False)
    a, b = l1_interp_check(u, 0), l1_interp_check(v, 1)
    assert np.isclose(a["ratio"], b["ratio"], rtol=1e-10)
    assert np.isclose(b["lhs"], a["lhs"] / 2, rtol=1e-10)


def test_l1_interp_corpus_deterministic():
    g = Grid(1024, 128.0)
    a = l1_interp_corpus(0, 5, 7, g)
    b = l1_interp_corpus(0, 5, 7, g)
    assert a["ratios"] == b["ratios"] and 0 < a["max_ratio"] < 10


@given(st.integers(0, 2 ** 31), st.floats(0.5, 8.0))
def test_trilinear_bound(seed, scale):
    g = Grid(64, 32.0)
    r = np.random.default_rng(seed)
    m, l1 = gaussian_multiplier(scale)
    f, gg, h = (random_packet(g, 0, r) for _ in range(3))
    out = trilinear_check(m, l1, f, gg, h)
    assert out["ratio"] <= out["bound"] * (1 + 1e-12)


def test_gaussian_multiplier_l1_norm():
    # ||F^{-1} m||_{L1} with F^{-1} m(x, y) = (2 pi)^{-1} int m e^{i(x eta + y sigma)}
    s = 1.7
    m, l1 = gaussian_multiplier(s)
    kernel_mass = (s ** 2) * 2 * np.pi / (2 * np.pi) * 2 * np.pi  # Gaussian of total mass
    assert np.isclose(l1, kernel_mass / s ** 2, rtol=1e-15)
    assert m(0.0, 0.0) == 1.0


def test_trilinear_exponent_validation():
    g = Grid(16, 8.0)
    f = band_bump(g, 0)
    m, l1 = gaussian_multiplier(1.0)
    with pytest.raises(ValidationError):
        trilinear_check(m, l1, f, f, f, exponents=(2, 2, 2))
    with pytest.raises(ValidationError):
        trilinear_check(m, None, f, f, f)
