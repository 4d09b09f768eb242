"""Logarithmic phase correction and convergence diagnostics for the profile."""
import json
from dataclasses import dataclass

import numpy as np

from . import kernels
from .linear import fit_loglog
from .spectral import SpectralField, ValidationError, profile_weight


class DegenerateWindow(ValidationError):
    """Too few points or too short a time span for a fit."""


# ---------------------------------------------------------------------------
# Accumulator
# ---------------------------------------------------------------------------

@dataclass
class PhaseAccumulator:
    """Running ``int_1^t |f^(xi, s)|^2 ds / s`` per frequency (FFT order).

    ``last_sq`` holds ``|f^|^2`` at ``t_last`` for the next trapezoid step.
    """
    grid: object
    t_last: float
    integral: np.ndarray
    last_sq: np.ndarray

    @classmethod
    def start(cls, profile, t=1.0):
        """Empty accumulator anchored at ``t`` (normally 1)."""
        if t < 1.0:
            raise ValidationError("the phase integral starts at t >= 1")
        c = profile.coeffs if isinstance(profile, SpectralField) else np.asarray(profile)
        grid = profile.grid if isinstance(profile, SpectralField) else None
        return cls(grid, float(t), np.zeros(c.shape[0]), (np.abs(c) ** 2).astype(np.float64))

    def copy(self):
        return PhaseAccumulator(self.grid, self.t_last, self.integral.copy(), self.last_sq.copy())

    def update(self, coeffs, t):
        """In-place trapezoid step in ``log s`` from ``t_last`` to ``t``."""
        if isinstance(coeffs, SpectralField):
            coeffs = coeffs.coeffs
        if t < self.t_last:
            raise ValidationError(f"nonmonotone time: {t} < {self.t_last}")
        if t == self.t_last:
            return self
        kernels.log_trapezoid_update(self.integral, self.last_sq, coeffs,
                                     np.log(t) - np.log(self.t_last))
        self.t_last = float(t)
        return self


def accumulate_phase(acc, profile, t):
    """Return a new accumulator advanced to time ``t`` with the given profile."""
    return acc.copy().update(profile, t)


# ---------------------------------------------------------------------------
# Corrections
# ---------------------------------------------------------------------------

def phase_coefficient(xi, spec):
    """Factor multiplying the accumulated integral in the phase correction.

    fKdV: ``xi|xi|^(1-alpha) / (|alpha|(alpha+1))``; fNLS:
    ``-|xi|^(1-alpha) / (|alpha|(alpha+1))``; both times the nonlinearity
    sign (``+1`` focusing).
    """
    xi = np.asarray(xi, dtype=float)
    a = spec.alpha
    base = np.abs(xi) ** (1.0 - a) / (abs(a) * (a + 1.0))
    base = xi * base if spec.is_kdv else -base
    return spec.sign * base


def phase_correction(xi, acc_value, spec):
    """Phase ``theta(xi, t)`` given the accumulated integral value(s)."""
    return phase_coefficient(xi, spec) * np.asarray(acc_value, dtype=float)


@dataclass
class CorrectedProfile:
    grid: object
    t: float
    values: np.ndarray


def corrected_profile(profile, acc, spec, t=None):
    """``w = exp(i theta) (|xi|^((1-alpha)/4) + |xi|^10) f^``.

    ``t`` is the profile time; it must equal ``acc.t_last`` when given.
    """
    if t is not None and not np.isclose(t, acc.t_last, rtol=0, atol=1e-12 * max(1.0, t)):
        raise ValidationError(f"profile time {t} does not match accumulator time {acc.t_last}")
    g = profile.grid
    th = phase_correction(g.xi, acc.integral, spec)
    w = np.exp(1j * th) * profile_weight(g.xi, spec.alpha) * profile.coeffs
    return CorrectedProfile(g, acc.t_last, w)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def frequency_mask(profile, alpha, rel=1e-3, band=None):
    """Frequencies with ``weight * |f^| >= rel * Z`` (optionally within a band mask)."""
    wf = profile_weight(profile.grid.xi, alpha) * np.abs(profile.coeffs)
    z = wf.max()
    m = wf >= rel * z if z > 0 else np.zeros(wf.shape, bool)
    if band is not None:
        m &= band.astype(bool)
    return m


def admissible_p0(alpha):
    """Interval ``(0, p_max]`` of admissible convergence rates for ``alpha``."""
    return (0.0, -1e-3 * alpha) if alpha < 0 else (0.0, 1e-3 * (1.0 - alpha))


def convergence_report(times, series, p0, mask=None, margin=0.0):
    """Dyadic differences ``D_i = sup |w(t_{i+1}) - w(t_i)|`` and their decay.

    Parameters
    ----------
    times : sequence of float
        Dyadic times ``t_i`` (ratio 2), spanning at least two decades.
    series : sequence of arrays
        ``w`` (or any profile-like quantity) at each time.
    p0 : float
    mask : bool array, optional
        Frequencies included in the sup.
    margin : float
        Pass when ``slope <= -p0 + margin``.
    """
    t = np.asarray(times, dtype=float)
    if t.size < 3:
        raise DegenerateWindow("need at least three dyadic times")
    if not np.allclose(t[1:] / t[:-1], 2.0):
        raise ValidationError("times must be dyadic (ratio 2)")
    if t[-1] / t[0] < 100.0:
        raise DegenerateWindow("dyadic times must span at least two decades")
    D = []
    for a, b in zip(series[:-1], series[1:]):
        d = np.abs(np.asarray(b) - np.asarray(a))
        if mask is not None:
            d = d[mask]
        D.append(float(d.max()) if d.size else 0.0)
    D = np.array(D)
    pos = D > 0
    slope = fit_loglog(t[:-1][pos], D[pos])[0] if np.count_nonzero(pos) >= 2 else float("-inf")
    last = D[-4:]
    return {"times": t.tolist(), "D": D.tolist(), "slope": slope, "p0": p0,
            "passed": bool(slope <= -p0 + margin),
            "decreasing_last4": bool(np.all(np.diff(last) < 0)),
            "w_inf_error_bar": float(D[-1])}


def decay_fit(times, linf, window=None):
    """Least-squares slope of ``log ||u||_inf`` against ``log t``.

    Returns ``(slope, stderr)``. Requires at least 8 points spanning 1.5
    decades inside ``window``.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(linf, dtype=float)
    sel = (t > 0) & (y > 0)
    if window is not None:
        sel &= (t >= window[0]) & (t <= window[1])
    t, y = t[sel], y[sel]
    if t.size < 8 or np.log10(t.max() / t.min()) < 1.5 - 1e-12:
        raise DegenerateWindow("need >= 8 points spanning >= 1.5 decades")
    return fit_loglog(t, y)


def total_variation(x):
    return float(np.sum(np.abs(np.diff(np.asarray(x, dtype=float)))))


def phase_drift_report(xi0, times, coeffs, acc_values, spec, min_modulus=1e-12):
    """Total variation of ``arg f^(xi0)`` with and without the phase correction.

    Parameters
    ----------
    xi0 : float
    times, coeffs, acc_values : sequences
        Profile coefficient and accumulated integral at ``xi0`` per time.
    """
    c = np.asarray(coeffs, dtype=np.complex128)
    if np.min(np.abs(c)) < min_modulus:
        raise ValidationError("profile modulus too small: phase undefined")
    raw = np.unwrap(np.angle(c))
    th = phase_correction(xi0, np.asarray(acc_values, dtype=float), spec)
    corr = np.unwrap(np.angle(np.exp(1j * th) * c))
    tv_raw = total_variation(raw)
    tv_corr = total_variation(corr)
    return {"xi0": float(xi0), "t0": float(times[0]), "t1": float(times[-1]),
            "uncorrected_variation": tv_raw, "corrected_variation": tv_corr,
            "ratio": tv_corr / tv_raw if tv_raw > 0 else float("inf"),
            "uncorrected_net": float(raw[-1] - raw[0]), "corrected_net": float(corr[-1] - corr[0])}


def dominant_frequency(profile, spec, band=None):
    """Frequency where the phase rotation rate ``|coef(xi)| |f^|^2`` is largest."""
    xi = profile.grid.xi
    r = np.abs(phase_coefficient(xi, spec)) * np.abs(profile.coeffs) ** 2
    if band is not None:
        r = np.where(band.astype(bool), r, 0.0)
    return float(xi[int(np.argmax(r))])


def to_json(report, **kw):
    return json.dumps(report, **kw)
