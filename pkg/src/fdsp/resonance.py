"""Numeric checks of the stationary-phase inputs used in the resonant analysis.

* the model double integral ``int int exp(-ixy) phi(x/N) phi(y/N) dx dy``,
* the windowed resonant integral against its asymptotic constant,
* scalar lower bounds for the four-wave phase.
"""
import numpy as np
import mpmath as mp

from .quadrature import integrate
from .spectral import ValidationError, cutoff

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# Model integral
# ---------------------------------------------------------------------------

def cutoff_transform(v):
    """``int phi(u) exp(-iuv) du`` for the raised-cosine cutoff (real, even).

    Closed form ``pi^2 (sin v + sin 2v) / (v (pi^2 - v^2))`` rewritten with
    ``sinc`` factors so that ``v = 0`` and ``v = pi`` are evaluated without
    cancellation.
    """
    a = np.abs(np.asarray(v, dtype=float))
    return (1.5 * np.pi ** 2 * np.sinc(1.5 * a / np.pi) * np.sinc((np.pi - a) / TWO_PI)
            / (np.pi + a))


def _shifted_sine(a, c, X, Y):
    # int_X^Y sin(a v) / (v - c) dv (principal value), a != 0, Y may be inf
    if a < 0:
        return -_shifted_sine(-a, c, X, Y)
    Xp = X - c
    if Y == mp.inf:
        si = mp.pi / 2 - mp.si(a * Xp)
        ci = -mp.ci(a * abs(Xp))
    else:
        Yp = Y - c
        si = mp.si(a * Yp) - mp.si(a * Xp)
        ci = mp.ci(a * abs(Yp)) - mp.ci(a * abs(Xp))
    return mp.cos(a * c) * si + mp.sin(a * c) * ci


def _sine_times_kernel(a, X, Y):
    # int_X^Y sin(a v) pi^2 / (v (pi^2 - v^2)) dv via partial fractions
    if a == 0:
        return mp.mpf(0)
    return (_shifted_sine(a, 0, X, Y) - _shifted_sine(a, mp.pi, X, Y) / 2
            - _shifted_sine(a, -mp.pi, X, Y) / 2)


def model_error_exact(N, dps=50):
    """``value(N) - 2 pi`` from a closed-form reduction, in ``dps`` digits.

    Uses ``value(N) = int cutoff_transform(v) phi(v/N^2) dv`` and evaluates
    the remainder with sine and cosine integrals.
    """
    with mp.workdps(dps):
        N = mp.mpf(N)
        X, Y = N ** 2, 2 * N ** 2
        b = mp.pi / N ** 2
        tot = mp.mpf(0)
        for a in (1, 2):
            tot += (_sine_times_kernel(a, X, Y) / 2
                    + (_sine_times_kernel(a + b, X, Y) + _sine_times_kernel(a - b, X, Y)) / 4
                    + _sine_times_kernel(a, Y, mp.inf))
        return -2 * tot


def model_value_quadrature(N, tol=1e-13):
    """Double-precision ``value(N)`` by adaptive quadrature of the reduced integral."""
    top = 2.0 * N * N
    n_pan = max(4, int(np.ceil(top / np.pi)) * 2)
    bp = np.unique(np.concatenate([np.linspace(0.0, top, n_pan + 1), [N * N]]))
    val, err = integrate(lambda v: cutoff_transform(v) * cutoff(v / (N * N)), bp, tol=tol)
    return 2.0 * float(val), 2.0 * err


MODEL_CONSTANT = float(abs(model_error_exact(1.0)))


def stationary_phase_model_check(N, method="exact"):
    """Compare the model double integral with ``2 pi`` and the ``C N^{-1/2}`` bound.

    Parameters
    ----------
    N : float
        Scale, ``>= 1``.
    method : {'exact', 'quadrature'}
        ``exact`` uses multiprecision special functions; ``quadrature`` is a
        double-precision cross-check, meaningful while ``|error| >> 1e-13``.

    Returns
    -------
    dict with ``value``, ``error`` (value - 2 pi), ``bound`` and ``within``.
    """
    if not N >= 1:
        raise ValidationError("N must be >= 1")
    if method == "exact":
        e = model_error_exact(N)
        err = float(e)
        val = float(2 * mp.pi + e)
    elif method == "quadrature":
        val, _ = model_value_quadrature(N)
        err = val - TWO_PI
    else:
        raise ValidationError(f"unknown method {method!r}")
    bound = MODEL_CONSTANT * N ** -0.5
    return {"N": float(N), "value": val, "error": err, "bound": bound, "C": MODEL_CONSTANT,
            "within": bool(abs(err) <= bound), "method": method}


# ---------------------------------------------------------------------------
# Resonant asymptotics
# ---------------------------------------------------------------------------

def resonant_window(xi, s, alpha):
    """Dyadic indices and window: ``k = floor log2|xi|``, ``m = floor log2(s+1)``,
    ``lbar = ceil((1-alpha)k/2 - 49m/100)``, ``W = 2^lbar``."""
    k = int(np.floor(np.log2(abs(xi))))
    m = int(np.floor(np.log2(s + 1.0)))
    lbar = int(np.ceil((1.0 - alpha) * k / 2.0 - 49.0 * m / 100.0))
    return k, m, lbar, 2.0 ** lbar


def resonant_constant(xi, s, alpha):
    """``2 pi |xi|^(1-alpha) / (s |alpha| (alpha+1))``."""
    return TWO_PI * abs(xi) ** (1.0 - alpha) / (s * abs(alpha) * (alpha + 1.0))


def _gl_panels(W, p):
    x, w = np.polynomial.legendre.leggauss(p)
    nodes, weights = [], []
    for lo, hi in ((-2 * W, -W), (-W, W), (W, 2 * W)):
        nodes.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _resonant_integral(profile, xi, s, spec, W, p):
    e, we = _gl_panels(W, p)
    E, S = np.meshgrid(e, e, indexing="ij")
    WW = np.outer(we, we)
    om = spec.linear_frequency
    win = cutoff(E / W) * cutoff(S / W)
    if spec.is_kdv:
        ph = om(xi) - om(xi + E) - om(xi + S) + om(xi + E + S)
        amp = profile(xi + E) * profile(xi + S) * profile(-xi - E - S)
        return np.sum(WW * np.exp(-1j * s * ph) * amp * win)
    ph = om(xi) - om(xi + E) - om(xi + S) + om(xi + E + S)
    amp = profile(xi + E) * profile(xi + S) * np.conj(profile(xi + E + S))
    return np.sum(WW * np.exp(-1j * s * ph) * amp * win)


def resonant_asymptotic_check(profile, xi, s, spec, band=None, nodes=None):
    """Windowed resonant integral versus its stationary-phase prediction.

    Parameters
    ----------
    profile : callable
        Frozen, smooth ``f^(xi)`` (vectorized).
    xi : float
        Output frequency, nonzero.
    s : float
        Time, ``>= 100``.
    spec : EquationSpec
    band : (float, float), optional
        Interval of ``|xi|`` on which the profile is defined; the window
        ``xi +- 4W`` must fit inside it.
    nodes : int, optional
        Gauss-Legendre nodes per panel and axis (default from the phase size).

    Returns
    -------
    dict with the integral ``J``, the prediction ``asymptotic``, their
    relative ``deviation`` and the window data.
    """
    if s < 100:
        raise ValidationError("s must be >= 100")
    if xi == 0:
        raise ValidationError("xi must be nonzero")
    a = spec.alpha
    k, m, lbar, W = resonant_window(xi, s, a)
    if band is not None:
        lo, hi = band
        if abs(xi) - 4 * W < lo or abs(xi) + 4 * W > hi:
            raise ValidationError(f"window W={W} around xi={xi} exceeds the band {band}")
    lam = s * abs(a) * (a + 1.0) * abs(xi) ** (a - 1.0)
    if nodes is None:
        cycles = lam * (2 * W) ** 2 / TWO_PI
        nodes = int(min(1500, 48 + 24 * np.ceil(cycles)))
    J = _resonant_integral(profile, xi, s, spec, W, nodes)
    J2 = _resonant_integral(profile, xi, s, spec, W, nodes + nodes // 2)
    C = resonant_constant(xi, s, a)
    f0 = complex(profile(np.array([xi]))[0])
    if spec.is_kdv:
        prod = f0 * f0 * complex(profile(np.array([-xi]))[0])
    else:
        prod = f0 * f0 * np.conj(f0)
    asym = C * prod
    dev = 0.0 if asym == 0 and J2 == 0 else abs(J2 - asym) / abs(asym) if asym != 0 else np.inf
    return {"xi": float(xi), "s": float(s), "k": k, "m": m, "lbar": lbar, "W": W,
            "effective_N": float(W * np.sqrt(lam)), "J": [J2.real, J2.imag],
            "asymptotic": [asym.real, asym.imag], "constant": C, "deviation": float(dev),
            "quadrature_error": float(abs(J2 - J)), "nodes": nodes}


def flat_profile(value=1.0 + 0j):
    """Constant (unimodular by default) frozen profile."""
    return lambda x: np.full(np.shape(x), value, dtype=np.complex128)


# ---------------------------------------------------------------------------
# Phase inequalities
# ---------------------------------------------------------------------------

def phase_inequality_ratio(a, b, c, alpha):
    """Normalized four-wave phase for ``a >= b >= c > 0``.

    alpha > 0: ``[(a+b+c)^p - a^p - b^p - c^p] / (b a^alpha)``;
    alpha < 0: ``[a^p + b^p + c^p - (a+b+c)^p] / a^p``, with ``p = alpha+1``.
    Evaluated through ``r = b/a``, ``q = c/a`` with ``expm1``/``log1p``.
    """
    a = np.asarray(a, dtype=float)
    r = np.asarray(b, dtype=float) / a
    q = np.asarray(c, dtype=float) / a
    return _ratio_rq(r, q, alpha)


def _ratio_rq(r, q, alpha):
    p = alpha + 1.0
    grow = np.expm1(p * np.log1p(r + q))
    if alpha > 0:
        return (grow - r ** p - q ** p) / r
    return r ** p + q ** p - grow


def phase_inequality_check(alpha, n_samples=10 ** 6, seed=0, lo=1e-4, hi=1e4, chunk=250_000):
    """Minimum normalized phase over log-uniform samples in ``[lo, hi]^3``."""
    if not (-1 < alpha < 1) or alpha == 0:
        raise ValidationError("alpha must lie in (-1, 1) minus {0}")
    rng = np.random.default_rng(seed)
    best = np.inf
    arg = None
    left = int(n_samples)
    llo, lhi = np.log(lo), np.log(hi)
    while left > 0:
        m = min(chunk, left)
        L = np.sort(rng.uniform(llo, lhi, size=(m, 3)), axis=1)[:, ::-1]
        r = np.exp(L[:, 1] - L[:, 0])
        q = np.exp(L[:, 2] - L[:, 0])
        val = _ratio_rq(r, q, alpha)
        i = int(np.argmin(val))
        if val[i] < best:
            best = float(val[i])
            arg = np.exp(L[i]).tolist()
        left -= m
    return {"alpha": float(alpha), "n_samples": int(n_samples), "seed": seed,
            "min_ratio": best, "argmin_abc": arg, "positive": bool(best > 0),
            "orientation": "phase-consistent (superadditive form for alpha > 0)"}
