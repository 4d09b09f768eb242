"""Free evolution, a whole-line quadrature oracle and linear estimate benches."""
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .quadrature import integrate
from .spectral import (SQRT_2PI, Grid, SpectralField, ValidationError,
                       band_symbol, lp_project, to_physical, to_spectral)


def evolve_linear(field, t, spec):
    """Apply the free propagator for time ``t`` to a spectral field.

    fKdV multiplies by ``exp(i t xi|xi|^alpha)``, fNLS by
    ``exp(-i t |xi|^(alpha+1))``.
    """
    om = spec.linear_frequency(field.grid.xi)
    return SpectralField(field.grid, kernels.rotate(field.coeffs, om, t),
                         field.real_valued and spec.is_kdv)


def linf_oversampled(field, factor=8):
    """Sup norm of the trigonometric interpolant sampled ``factor`` times finer."""
    g = field.grid
    n = g.n_points
    c = np.fft.fftshift(field.coeffs * g._parity)
    pad = np.zeros(n * factor, dtype=np.complex128)
    lo = (n * factor - n) // 2
    pad[lo:lo + n] = c
    u = np.fft.ifft(np.fft.ifftshift(pad)) * (factor * SQRT_2PI / g.dx)
    return float(np.max(np.abs(u)))


def group_speed_margin(spec, xi_lo, xi_hi, t_end, box_length):
    """Ratio ``max speed * t_end / (L/4)`` over ``xi_lo <= |xi| <= xi_hi``.

    Values above 1 mean waves can reach the box edge.
    """
    s = spec.group_speed(np.array([xi_lo, xi_hi], dtype=float))
    return float(np.max(s) * t_end / (0.25 * box_length))


# ---------------------------------------------------------------------------
# Whole-line oracle
# ---------------------------------------------------------------------------

def _panel_breaks(a, b, phase_rate, max_phase=4.0):
    """Dyadic panels on ``[a, b]`` split so each carries a bounded phase change."""
    pts = {a, b}
    if a < 0 < b:
        pts.add(0.0)
    top = max(abs(a), abs(b))
    j = int(np.floor(np.log2(top))) if top > 0 else 0
    for e in range(j - 40, j + 1):
        for p in (2.0 ** e, -2.0 ** e):
            if a < p < b:
                pts.add(p)
    base = np.array(sorted(pts))
    out = [base[0]]
    for lo, hi in zip(base[:-1], base[1:]):
        s = np.linspace(lo, hi, 33)
        rate = np.max(np.abs(phase_rate(s)))
        m = max(1, int(np.ceil(rate * (hi - lo) / max_phase)))
        out.extend(np.linspace(lo, hi, m + 1)[1:])
    return np.array(out)


def whole_line_oracle(density, x, t, spec, support, tol=1e-9, full_output=False,
                      max_intervals=400000):
    """Free solution on the real line at one point via adaptive quadrature.

    Computes ``(2 pi)^{-1/2} int exp(i(x xi + t omega(xi))) g^(xi) dxi``
    independently of any periodic grid.

    Parameters
    ----------
    density : callable
        Vectorized ``g^(xi)``, assumed supported in ``support``.
    x, t : float
    spec : EquationSpec
    support : (float, float)
    tol : float
        Absolute error target.
    full_output : bool
        Also return the error estimate.
    """
    if t < 0:
        raise ValidationError("t must be nonnegative")
    a, b = map(float, support)
    if not b > a:
        raise ValidationError("support must be a nonempty interval")
    alpha = spec.alpha

    def rate(s):
        with np.errstate(divide="ignore"):
            d = (alpha + 1.0) * np.abs(s) ** alpha
        d = np.where(np.isfinite(d), d, 0.0)
        return x + t * (d if spec.is_kdv else -np.sign(s) * d)

    def theta(s):
        return x * s + t * spec.linear_frequency(s)

    def integrand(s):
        # s has shape (intervals, 15); the middle node is the panel centre
        c = s[:, 7:8]
        rot = np.exp(1j * (x * (s - c) + t * (spec.linear_frequency(s) - spec.linear_frequency(c))))
        return density(s) * rot * np.exp(1j * theta(c))

    breaks = _panel_breaks(a, b, rate)
    val, err = integrate(integrand, breaks, tol=tol * SQRT_2PI, max_intervals=max_intervals)
    val = complex(val) / SQRT_2PI
    err = err / SQRT_2PI
    return (val, err) if full_output else val


# ---------------------------------------------------------------------------
# Dispersive estimate bench
# ---------------------------------------------------------------------------

@dataclass
class BenchReport:
    alpha: float
    kind: str
    band: int
    times: list
    lhs: list
    rhs_terms: list
    fitted_constant: float
    fitted_slope: float
    slope_stderr: float = float("nan")
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)


def fit_loglog(t, y):
    """Least-squares slope and its standard error of ``log y`` against ``log t``."""
    lt = np.log(np.asarray(t, dtype=float))
    ly = np.log(np.asarray(y, dtype=float))
    if lt.size < 2:
        raise ValidationError("need at least two points")
    A = np.vstack([lt, np.ones_like(lt)]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    if lt.size > 2:
        resid = ly - A @ coef
        s2 = float(resid @ resid) / (lt.size - 2)
        se = float(np.sqrt(s2 / np.sum((lt - lt.mean()) ** 2)))
    else:
        se = float("nan")
    return float(coef[0]), se


def bench_grid(spec, k, t_max, oversample=4):
    """Smallest power-of-two grid resolving band ``k`` and satisfying the speed bound."""
    dx = np.pi / (oversample * 2.0 ** (k + 1))
    v = float(np.max(spec.group_speed(np.array([2.0 ** (k - 1), 2.0 ** (k + 1)]))))
    L_min = max(4.0 * v * t_max * 1.25, 64.0 * 2.0 ** -k)
    n = 1 << int(np.ceil(np.log2(L_min / dx)))
    return Grid(max(n, 8), n * dx)


def band_bump(grid, k, amplitude=1.0, real_valued=True):
    """Raised-cosine spectral bump ``amplitude * psi_k(xi)``."""
    return SpectralField(grid, amplitude * band_symbol(grid.xi, k) + 0j, real_valued)


def _xi_derivative_l2(field):
    # ||d/dxi g^||_{L2} = ||x g||_{L2}
    g = field.grid
    u = to_physical(field)
    return float(np.sqrt(g.dx * np.sum(np.abs(g.x * u) ** 2)))


def _l2(field):
    return float(np.sqrt(np.sum(np.abs(field.coeffs) ** 2) * field.grid.dxi))


def dispersive_bench(spec, k, times, grid=None, data=None, oversample=8):
    """Measure ``||e^{tL} P_k g||_inf`` against the two-term dispersive bound.

    Parameters
    ----------
    spec : EquationSpec
    k : int
        Dyadic band.
    times : sequence of float
        Sorted times in ``[1, inf)``.
    grid : Grid, optional
        Defaults to :func:`bench_grid`. A grid that violates the group-speed
        bound raises :class:`ValidationError`.
    data : SpectralField, optional
        Test data; defaults to the raised-cosine bump on band ``k``. It is
        projected onto the band before use.
    """
    times = np.asarray(times, dtype=float)
    if times.size < 2 or np.any(np.diff(times) <= 0) or times[0] < 1.0:
        raise ValidationError("times must be sorted, distinct and >= 1")
    t_max = float(times[-1])
    if grid is None:
        grid = data.grid if data is not None else bench_grid(spec, k, t_max)
    margin = group_speed_margin(spec, 2.0 ** (k - 1), 2.0 ** (k + 1), t_max, grid.box_length)
    if margin > 1.0:
        raise ValidationError(
            f"box too small: group-speed bound exceeded by factor {margin:.2f} at t={t_max}")
    if data is None:
        data = band_bump(grid, k, real_valued=True)
    g = lp_project(data, k)
    ghat_inf = float(np.max(np.abs(g.coeffs)))
    gl2 = _l2(g)
    dgl2 = _xi_derivative_l2(g)
    lhs, terms = [], []
    a = spec.alpha
    for t in times:
        lhs.append(linf_oversampled(evolve_linear(g, t, spec), oversample))
        t1 = t ** -0.5 * 2.0 ** ((1 - a) * k / 2) * ghat_inf
        t2 = t ** -0.75 * 2.0 ** (-(1 + 3 * a) * k / 4) * (gl2 + 2.0 ** k * dgl2)
        terms.append([t1, t2])
    lhs = np.array(lhs)
    rhs = np.sum(np.array(terms), axis=1)
    slope, se = fit_loglog(times, lhs)
    extra = {"grid": grid.to_dict(), "group_speed_margin": margin}
    late = times >= 16.0
    if np.count_nonzero(late) >= 3:
        extra["late_slope"] = fit_loglog(times[late], lhs[late])[0]
    return BenchReport(alpha=a, kind=spec.kind, band=int(k), times=times.tolist(),
                       lhs=lhs.tolist(), rhs_terms=terms,
                       fitted_constant=float(np.max(lhs / rhs)), fitted_slope=slope,
                       slope_stderr=se, extra=extra)


# ---------------------------------------------------------------------------
# L1 interpolation bound
# ---------------------------------------------------------------------------

def l1_interp_check(g, k):
    """Compare ``||P_k g||_{L1}`` with ``2^{-k/2} A^{1/2} (A + 2^k B)^{1/2}``.

    ``A = ||P_k g^||_{L2}`` and ``B = ||d/dxi P_k g^||_{L2}`` use the
    band-projected function. Returns a dict with ``lhs``, ``rhs``, ``ratio``.
    """
    p = lp_project(g, k)
    grid = g.grid
    lhs = float(grid.dx * np.sum(np.abs(to_physical(p))))
    A = _l2(p)
    B = _xi_derivative_l2(p)
    rhs = float(2.0 ** (-k / 2) * np.sqrt(A) * np.sqrt(A + 2.0 ** k * B))
    ratio = 0.0 if rhs == 0 else lhs / rhs
    return {"lhs": lhs, "rhs": rhs, "ratio": ratio, "band": int(k)}


def random_packet(grid, k, rng, n_packets=3):
    """Random superposition of Gaussian wave packets centred in band ``k``."""
    x = grid.x
    u = np.zeros(grid.n_points, dtype=np.complex128)
    for _ in range(n_packets):
        amp = rng.normal() + 1j * rng.normal()
        x0 = rng.uniform(-4.0, 4.0) * 2.0 ** -k
        w = rng.uniform(1.0, 6.0) * 2.0 ** -k
        xi0 = rng.choice([-1.0, 1.0]) * rng.uniform(0.75, 1.5) * 2.0 ** k
        u += amp * np.exp(-0.5 * ((x - x0) / w) ** 2 + 1j * xi0 * x)
    return to_spectral(u, grid, real_valued=False)


def l1_interp_corpus(k, n_trials, seed, grid):
    """Max ratio of :func:`l1_interp_check` over a seeded random corpus."""
    ss = np.random.SeedSequence(seed)
    ratios = []
    for child in ss.spawn(n_trials):
        rng = np.random.default_rng(child)
        ratios.append(l1_interp_check(random_packet(grid, k, rng), k)["ratio"])
    return {"seed": seed, "n_trials": n_trials, "max_ratio": float(np.max(ratios)),
            "ratios": ratios}


# ---------------------------------------------------------------------------
# Trilinear bound
# ---------------------------------------------------------------------------

def gaussian_multiplier(scale):
    """``m(eta, sigma) = exp(-(eta^2 + sigma^2) / (2 scale^2))`` and its ``||F^{-1} m||_{L1} = 2 pi``."""
    def m(eta, sigma):
        return np.exp(-(eta ** 2 + sigma ** 2) / (2.0 * scale ** 2))
    return m, 2.0 * np.pi


def _lp(u, dx, p):
    a = np.abs(u)
    if np.isinf(p):
        return float(np.max(a))
    return float((dx * np.sum(a ** p)) ** (1.0 / p))


def _centred(field):
    # increasing-frequency lattice without the Nyquist mode: j = -K..K
    xi, c = field.ordered()
    return xi[1:], c[1:]


def trilinear_check(m, m_l1_norm, f, g, h, exponents=(2.0, 2.0, np.inf)):
    """Direct lattice evaluation of the trilinear form against its Hoelder bound.

    LHS is ``|sum_{eta,sigma} m(eta,sigma) f^(eta) g^(sigma) h^(-eta-sigma)| dxi^2``,
    RHS is ``m_l1_norm * ||f||_p ||g||_q ||h||_r``. With this transform
    convention the exact inequality holds with constant ``(2 pi)^{-1/2}``.
    """
    if m_l1_norm is None or not np.isfinite(m_l1_norm) or m_l1_norm <= 0:
        raise ValidationError("a positive, finite ||F^{-1} m||_{L1} must be supplied")
    p, q, r = exponents
    if not np.isclose(sum(1.0 / e for e in exponents), 1.0):
        raise ValidationError("exponents must satisfy 1/p + 1/q + 1/r = 1")
    grid = f.grid
    xi, fc = _centred(f)
    _, gc = _centred(g)
    _, hc = _centred(h)
    M = np.asarray(m(xi[:, None], xi[None, :]), dtype=np.complex128)
    s = kernels.trilinear_sum(M, fc, gc, hc) * grid.dxi ** 2
    lhs = abs(s)
    rhs = m_l1_norm
    for fld, e in zip((f, g, h), (p, q, r)):
        rhs *= _lp(to_physical(fld), grid.dx, e)
    return {"lhs": float(lhs), "rhs": float(rhs), "ratio": 0.0 if rhs == 0 else float(lhs / rhs),
            "bound": 1.0 / SQRT_2PI}
