"""Profile-frame time integration of the fKdV and fNLS equations.

The unknown is the profile ``f^(xi, t) = exp(-i t omega(xi)) u^(xi, t)``, so
the linear part is solved exactly and only the cubic term is integrated.
The cubic term is evaluated pseudospectrally with the 1/2 rule (modes with
``|j| < n/4`` retained), which makes the semi-discrete system an exact
Galerkin truncation.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .spectral import (SQRT_2PI, NormKind, NumericalError, SpectralField, ValidationError,
                       band_symbol, compute_norm, sobolev_norm, to_physical, to_spectral)

N0 = 100
DIAGNOSTIC_FIELDS = ("t", "mass", "hamiltonian", "linf_u", "linf_ux", "hN0", "h11", "znorm")


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------

@dataclass
class SolverConfig:
    """Integrator settings.

    ``dealias_fraction`` is the retained fraction of the spectrum; modes with
    ``|j| < dealias_fraction * n / 2`` are kept, so 0.5 keeps ``|j| < n/4``.
    """
    dt_initial: float = 0.05
    dt_safety: float = 0.9
    dealias_fraction: float = 0.5
    rtol: float = 1e-10
    atol: float = 1e-16
    snapshot_times: tuple = ()
    dt_min: float = 1e-8
    dt_max: float = 0.5
    adaptive: bool = True
    nonlinear: bool = True
    blowup_factor: float = 1e3
    group_speed: str = "warn"
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not self.dt_initial > 0:
            raise ValidationError("dt_initial must be positive")
        if not 0 < self.dt_safety <= 1:
            raise ValidationError("dt_safety must lie in (0, 1]")
        if not 0 < self.dealias_fraction <= 0.5:
            raise ValidationError("dealias_fraction must lie in (0, 1/2] for a cubic term")
        if not (self.rtol > 0 and self.atol >= 0):
            raise ValidationError("rtol must be positive and atol nonnegative")
        if not 0 < self.dt_min <= self.dt_max:
            raise ValidationError("need 0 < dt_min <= dt_max")
        if self.group_speed not in ("warn", "error", "ignore"):
            raise ValidationError("group_speed must be 'warn', 'error' or 'ignore'")
        self.snapshot_times = tuple(sorted(float(t) for t in self.snapshot_times))


@dataclass
class EvolutionState:
    t: float
    profile: SpectralField
    spec: object

    def validate(self):
        c = self.profile.coeffs
        if not np.all(np.isfinite(c)):
            raise NumericalError(f"non-finite profile coefficients at t={self.t}")
        if self.spec.is_kdv and self.profile.hermitian_defect() > 1e-13:
            raise ValidationError("fKdV profile is not Hermitian-symmetric")
        return self

    def solution(self):
        """Spectral field of ``u(t)``."""
        om = self.spec.linear_frequency(self.profile.grid.xi)
        return SpectralField(self.profile.grid, kernels.rotate(self.profile.coeffs, om, self.t),
                             self.profile.real_valued)


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    hamiltonian: float
    linf_u: float
    linf_ux: float
    hN0: float
    h11: float
    znorm: float

    def as_row(self):
        return [getattr(self, k) for k in DIAGNOSTIC_FIELDS]


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------

def smallness_report(samples, grid, alpha=None):
    """The three norms entering the smallness assumption and their sum."""
    f = to_spectral(samples, grid)
    hN = sobolev_norm(f, N0)
    h11 = compute_norm(samples, NormKind.weighted_h11(), grid)
    rep = {"hN0": hN, "h11": h11, "N0": N0, "hN0_truncation_xi": grid.xi_max}
    if alpha is not None:
        rep["z"] = compute_norm(f, NormKind.z(alpha))
        rep["eps0"] = hN + h11 + rep["z"]
    return rep


def make_initial_data(kind, epsilon, grid, alpha=None, **params):
    """Initial samples and their smallness report.

    Parameters
    ----------
    kind : {'gaussian', 'band_bump', 'custom_samples'}
        ``gaussian``: ``eps * exp(-((x - center)/width)^2)``;
        ``band_bump``: ``eps * psi_k`` in frequency (param ``k``, default 0);
        ``custom_samples``: ``eps * samples``.
    epsilon : float
        Amplitude, ``>= 0``.
    grid : Grid
    alpha : float, optional
        Needed for the Z-norm entry of the report.
    """
    if not epsilon >= 0:
        raise ValidationError("epsilon must be nonnegative")
    x = grid.x
    if kind == "gaussian":
        w = float(params.get("width", 1.0))
        c = float(params.get("center", 0.0))
        u = epsilon * np.exp(-((x - c) / w) ** 2)
    elif kind == "band_bump":
        k = int(params.get("k", 0))
        u = to_physical(SpectralField(grid, epsilon * band_symbol(grid.xi, k) + 0j, True))
    elif kind == "custom_samples":
        s = np.asarray(params["samples"])
        if s.shape != (grid.n_points,):
            raise ValidationError("custom samples do not match the grid")
        u = epsilon * s
    else:
        raise ValidationError(f"unknown initial data kind {kind!r}")
    return u, smallness_report(u, grid, alpha)


# ---------------------------------------------------------------------------
# Right-hand side
# ---------------------------------------------------------------------------

class ProfileRHS:
    """``d f^/dt`` for the profile; also records ``max|u|`` of the last call."""

    def __init__(self, spec, grid, dealias_fraction=0.5, nonlinear=True):
        self.spec = spec
        self.grid = grid
        self.nonlinear = nonlinear
        self.mask = grid.band_mask(dealias_fraction)
        self.omega = spec.linear_frequency(grid.xi)
        xi = grid.xi
        if spec.is_kdv:
            # conservative form: -sign * (1/3) d/dx (u^3)
            coef = -spec.sign * 1j * xi / 3.0
        else:
            coef = 1j * spec.sign * np.ones_like(xi)
        self.coef = coef * self.mask
        self._fwd = grid._parity * (grid.dx / SQRT_2PI)
        self._inv = grid._parity * (SQRT_2PI / grid.dx)
        self.linf = 0.0
        self.n_calls = 0

    def physical(self, t, f):
        """Samples of ``u`` at time ``t`` from profile coefficients ``f``."""
        g = kernels.rotate(f, self.omega, t, self.mask) * self._inv
        n = self.grid.n_points
        if self.spec.is_kdv:
            return np.fft.irfft(g[: n // 2 + 1], n)
        return np.fft.ifft(g)

    def _forward(self, v):
        n = self.grid.n_points
        if self.spec.is_kdv:
            half = np.fft.rfft(v)
            full = np.empty(n, dtype=np.complex128)
            full[: n // 2 + 1] = half
            full[n // 2 + 1:] = np.conj(half[1: n // 2][::-1])
            return full * self._fwd
        return np.fft.fft(v) * self._fwd

    def __call__(self, t, f):
        self.n_calls += 1
        if not self.nonlinear:
            return np.zeros_like(f)
        u = self.physical(t, f)
        self.linf = float(np.max(np.abs(u)))
        if not math.isfinite(self.linf):
            raise NumericalError(f"non-finite samples at t={t}")
        nl = kernels.cube_real(u) if self.spec.is_kdv else kernels.cube_abs(u)
        return kernels.rotate(self._forward(nl) * self.coef, self.omega, -t)


def nonlinear_term(state, config=None):
    """Spectral field of ``d f^/dt`` at the given state."""
    config = config or SolverConfig()
    rhs = ProfileRHS(state.spec, state.profile.grid, config.dealias_fraction, True)
    return SpectralField(state.profile.grid, rhs(state.t, state.profile.coeffs),
                         state.spec.is_kdv)


def _rk4(rhs, t, f, h, k1=None):
    if k1 is None:
        k1 = rhs(t, f)
    k2 = rhs(t + 0.5 * h, f + (0.5 * h) * k1)
    k3 = rhs(t + 0.5 * h, f + (0.5 * h) * k2)
    k4 = rhs(t + h, f + h * k3)
    return f + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(state, dt, config=None, rhs=None):
    """One classical RK4 step of the profile ODE."""
    if not dt > 0:
        raise ValidationError("dt must be positive")
    config = config or SolverConfig()
    if rhs is None:
        rhs = ProfileRHS(state.spec, state.profile.grid, config.dealias_fraction, config.nonlinear)
    f = _rk4(rhs, state.t, state.profile.coeffs, dt)
    if not np.all(np.isfinite(f)):
        raise NumericalError(f"non-finite profile after step at t={state.t}")
    return EvolutionState(state.t + dt, state.profile.with_coeffs(f), state.spec)


# ---------------------------------------------------------------------------
# Conserved quantities and diagnostics
# ---------------------------------------------------------------------------

def mass_and_hamiltonian(u_coeffs, grid, kind, alpha, sign):
    """Mass and Hamiltonian of ``u`` from its calibrated coefficients.

    No range check on ``alpha`` (so e.g. ``alpha = 1`` can be evaluated).
    The quartic term is a grid quadrature, exact for band-limited ``u``
    with ``|j| < n/4``.
    """
    c2 = np.abs(u_coeffs) ** 2
    mass = float(np.sum(c2) * grid.dxi)
    u = np.fft.ifft(u_coeffs * grid._parity) * (SQRT_2PI / grid.dx)
    a = np.abs(grid.xi)
    if kind == "fKdV":
        u = u.real
        with np.errstate(divide="ignore"):
            w = np.where(a > 0, a ** alpha, 0.0)
        kin = 0.5 * float(np.sum(w * c2) * grid.dxi)
        pot = sign / 12.0 * float(grid.dx * np.sum(u ** 4))
    else:
        kin = 0.5 * float(np.sum(a ** (alpha + 1.0) * c2) * grid.dxi)
        pot = sign / 4.0 * float(grid.dx * np.sum(np.abs(u) ** 4))
    return mass, kin - pot


def conserved_quantities(state):
    """``{'mass': ..., 'hamiltonian': ...}`` of the solution at ``state.t``."""
    s = state.spec
    m, h = mass_and_hamiltonian(state.solution().coeffs, state.profile.grid, s.kind,
                                s.alpha, s.sign)
    return {"mass": m, "hamiltonian": h}


def diagnostics(state):
    """Full :class:`DiagnosticsRecord` of a state."""
    g = state.profile.grid
    s = state.spec
    u_field = state.solution()
    mass, ham = mass_and_hamiltonian(u_field.coeffs, g, s.kind, s.alpha, s.sign)
    u = np.fft.ifft(u_field.coeffs * g._parity) * (SQRT_2PI / g.dx)
    ux = np.fft.ifft(1j * g.xi * u_field.coeffs * g._parity) * (SQRT_2PI / g.dx)
    if s.is_kdv:
        u, ux = u.real, ux.real
    prof = state.profile
    rec = DiagnosticsRecord(
        t=float(state.t), mass=mass, hamiltonian=ham,
        linf_u=float(np.max(np.abs(u))), linf_ux=float(np.max(np.abs(ux))),
        hN0=sobolev_norm(prof, N0),
        h11=compute_norm(prof, NormKind.weighted_h11()),
        znorm=compute_norm(prof, NormKind.z(s.alpha)))
    return rec


def blowup_monitor(history, linf_ref, factor=1e3, dt_underflow=False):
    """Blow-up flag from a ``(t, ||u||_inf)`` history.

    Flags when the last value exceeds ``factor * linf_ref`` or when the step
    size underflowed. When flagged, ``t_star`` is the flag time and
    ``growth_exponent`` the slope ``-d log||u|| / d log(t_star - t)`` over
    the earlier history; otherwise it is the slope against ``log t``.
    """
    h = np.asarray(history, dtype=float).reshape(-1, 2)
    out = {"flag": False, "reason": None, "t_star": None, "growth_exponent": None}
    if h.size == 0:
        return out
    t, y = h[:, 0], h[:, 1]
    big = linf_ref > 0 and y[-1] > factor * linf_ref
    if big or dt_underflow:
        out.update(flag=True, reason="amplitude" if big else "dt_underflow", t_star=float(t[-1]))
        sel = (t < t[-1]) & (y > 0)
        if np.count_nonzero(sel) >= 3:
            A = np.vstack([np.log(t[-1] - t[sel]), np.ones(np.count_nonzero(sel))]).T
            out["growth_exponent"] = float(-np.linalg.lstsq(A, np.log(y[sel]), rcond=None)[0][0])
        return out
    sel = (t > 0) & (y > 0)
    if np.count_nonzero(sel) >= 3:
        A = np.vstack([np.log(t[sel]), np.ones(np.count_nonzero(sel))]).T
        out["growth_exponent"] = float(np.linalg.lstsq(A, np.log(y[sel]), rcond=None)[0][0])
    return out


def group_speed_check(state, t_end, mode="warn", rel_threshold=1e-6):
    """Check that waves carried by the profile stay within the central half of the box.

    Uses frequencies with ``|f^| >= rel_threshold * max|f^|``. Returns the
    ratio ``max speed * t_end / (L/4)``.
    """
    g = state.profile.grid
    a = np.abs(state.profile.coeffs)
    if a.max() == 0:
        return 0.0
    xi = np.abs(g.xi[(a >= rel_threshold * a.max()) & (g.xi != 0)])
    if xi.size == 0:
        return 0.0
    sp = state.spec.group_speed(xi)
    ratio = float(np.max(sp) * t_end / (0.25 * g.box_length))
    if ratio > 1.0 and mode != "ignore":
        msg = f"group-speed bound exceeded by factor {ratio:.2f} for t_end={t_end}"
        if mode == "error":
            raise ValidationError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=3)
    return ratio


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------

@dataclass
class Trajectory:
    spec: object
    grid: object
    config: SolverConfig
    records: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    profiles: dict = field(default_factory=dict)
    per_xi: list = field(default_factory=list)
    linf_history: list = field(default_factory=list)
    accumulator: object = None
    blowup: dict = field(default_factory=dict)
    n_steps: int = 0
    n_rejected: int = 0
    dt_next: float = None
    linf_ref: float = None
    final_state: EvolutionState = None
    status: str = "ok"

    def series(self, name):
        return np.array([getattr(r, name) for r in self.records])


class Integrator:
    """Adaptive RK4 (step doubling with local extrapolation) on the profile ODE.

    The integrator owns its state. It also maintains the log-time phase
    integral once ``t >= 1``.
    """

    def __init__(self, state, config, accumulator=None, dt_next=None, linf_ref=None):
        from .scattering import PhaseAccumulator
        self.config = config
        self.state = state.validate()
        self.rhs = ProfileRHS(state.spec, state.profile.grid, config.dealias_fraction,
                              config.nonlinear)
        f = state.profile.coeffs * self.rhs.mask
        if self.state.spec.is_kdv:
            f = _hermitian(f, state.profile.grid)
        self.state = EvolutionState(state.t, state.profile.with_coeffs(f), state.spec)
        self.acc = accumulator
        if self.acc is None and self.state.t >= 1.0 and self.state.t == 1.0:
            self.acc = PhaseAccumulator.start(self.state.profile, 1.0)
        self.dt = float(dt_next if dt_next is not None else min(config.dt_initial, config.dt_max))
        if linf_ref is None:
            linf_ref = float(np.max(np.abs(self.rhs.physical(self.state.t, self.state.profile.coeffs))))
        self.linf_ref = linf_ref
        self.n_steps = 0
        self.n_rejected = 0
        self.underflow = False

    def _attempt(self, t, f, h):
        k1 = self.rhs(t, f)
        y1 = _rk4(self.rhs, t, f, h, k1)
        half = _rk4(self.rhs, t, f, 0.5 * h, k1)
        y2 = _rk4(self.rhs, t + 0.5 * h, half, 0.5 * h)
        diff = y2 - y1
        scale = self.config.atol + self.config.rtol * max(np.max(np.abs(f)), np.max(np.abs(y2)))
        err = float(np.max(np.abs(diff))) / 15.0 / scale if scale > 0 else 0.0
        return y2 + diff / 15.0, err

    def _accept(self, t_new, f_new):
        from .scattering import PhaseAccumulator
        t_old = self.state.t
        self.state = EvolutionState(t_new, self.state.profile.with_coeffs(f_new), self.state.spec)
        if self.acc is not None:
            self.acc.update(f_new, t_new)
        elif t_old < 1.0 <= t_new and t_new == 1.0:
            self.acc = PhaseAccumulator.start(self.state.profile, 1.0)
        self.n_steps += 1

    def advance_to(self, t_stop):
        """Integrate up to exactly ``t_stop``. Returns False if blow-up was detected."""
        cfg = self.config
        while self.state.t < t_stop:
            if self.n_steps >= cfg.max_steps:
                raise NumericalError("step budget exhausted")
            t, f = self.state.t, self.state.profile.coeffs
            h_prop = self.dt
            h = h_prop
            clipped = False
            if t + 1.01 * h >= t_stop:
                h, clipped = t_stop - t, True
            if not cfg.adaptive:
                f_new = _rk4(self.rhs, t, f, h)
                if not np.all(np.isfinite(f_new)):
                    raise NumericalError(f"non-finite profile at t={t}")
                self._accept(t_stop if clipped else t + h, f_new)
                if self.rhs.linf > cfg.blowup_factor * self.linf_ref > 0:
                    return False
                continue
            f_new, err = self._attempt(t, f, h)
            if not math.isfinite(err):
                err = math.inf
            fac = 5.0 if err == 0 else min(5.0, max(0.2, cfg.dt_safety * err ** -0.2))
            if err <= 1.0:
                if not np.all(np.isfinite(f_new)):
                    raise NumericalError(f"non-finite profile at t={t}")
                self._accept(t_stop if clipped else t + h, f_new)
                h_next = h * fac
                if clipped and h < h_prop:
                    h_next = h_prop if fac >= 1.0 else min(h_prop, h_next)
                self.dt = min(cfg.dt_max, max(cfg.dt_min, h_next))
                if self.rhs.linf > cfg.blowup_factor * self.linf_ref > 0:
                    return False
            else:
                self.n_rejected += 1
                if h <= cfg.dt_min * (1 + 1e-12):
                    self.underflow = True
                    return False
                self.dt = max(cfg.dt_min, h * fac)
        return True


def _hermitian(f, grid):
    n = grid.n_points
    mirror = np.conj(f[(-grid.index) % n])
    out = 0.5 * (f + mirror)
    out[n // 2] = out[n // 2].real
    return out


def _stop_times(t0, t_end, *lists):
    pts = {float(t_end)}
    for lst in lists:
        for t in lst:
            if t0 < t <= t_end:
                pts.add(float(t))
    if t0 < 1.0 < t_end:
        pts.add(1.0)
    return sorted(pts)


def run(spec, u0, t_end, config=None, grid=None, callbacks=(), sample_times=None,
        profile_times=None, tracked_xi=None, state=None, accumulator=None, dt_next=None,
        linf_ref=None):
    """Integrate from ``u0`` (at ``t = 0``) or from a given ``state`` to ``t_end``.

    Parameters
    ----------
    spec : EquationSpec
    u0 : array_like or None
        Initial samples on ``grid``; ignored when ``state`` is given.
    t_end : float
    config : SolverConfig
    grid : Grid
    callbacks : sequence of callables ``cb(state, record)``
        Called at every sample time; must not mutate the state.
    sample_times : sequence of float
        Times at which diagnostics are recorded (the start and ``t_end``
        are always included).
    profile_times : sequence of float
        Times at which profile coefficients are kept in memory.
    tracked_xi : sequence of float
        Frequencies (snapped to the lattice) for the per-frequency series.
    state, accumulator, dt_next, linf_ref
        Resume data; see :mod:`fdsp.io`.

    Returns
    -------
    Trajectory
    """
    from .scattering import phase_correction
    config = config or SolverConfig()
    if state is None:
        if grid is None:
            raise ValidationError("grid is required")
        prof = to_spectral(np.asarray(u0), grid, real_valued=spec.is_kdv)
        if spec.is_kdv:
            prof = SpectralField(grid, prof.coeffs, True)
        state = EvolutionState(0.0, prof, spec)
    grid = state.profile.grid
    if not t_end > state.t:
        raise ValidationError("t_end must exceed the initial time")
    group_speed_check(state, t_end, config.group_speed)
    integ = Integrator(state, config, accumulator, dt_next, linf_ref)
    traj = Trajectory(spec, grid, config, linf_ref=integ.linf_ref)
    tracked = []
    for xv in (() if tracked_xi is None else tracked_xi):
        tracked.append(int(np.argmin(np.abs(grid.xi - xv))))
    weight = None
    if tracked:
        from .spectral import profile_weight
        weight = profile_weight(grid.xi[tracked], spec.alpha)

    samples = set(float(t) for t in (() if sample_times is None else sample_times))
    samples.add(float(t_end))
    snaps = set(config.snapshot_times)
    profs = set(float(t) for t in (() if profile_times is None else profile_times))

    def record(st):
        rec = diagnostics(st)
        traj.records.append(rec)
        traj.linf_history.append((rec.t, rec.linf_u))
        if tracked:
            c = st.profile.coeffs[tracked]
            acc = integ.acc.integral[tracked] if integ.acc is not None else np.zeros(len(tracked))
            th = phase_correction(grid.xi[tracked], acc, spec)
            w = np.exp(1j * th) * weight * c
            for i, ix in enumerate(tracked):
                traj.per_xi.append((st.t, grid.xi[ix], abs(c[i]), float(np.angle(c[i])),
                                    acc[i], th[i], w[i].real, w[i].imag))
        for cb in callbacks:
            cb(st, rec)

    record(integ.state)
    def keep_profile(st):
        acc = None if integ.acc is None else integ.acc.integral.copy()
        traj.profiles[st.t] = (st.profile.coeffs.copy(), acc)

    if integ.state.t in profs:
        keep_profile(integ.state)
    ok = True
    for ts in _stop_times(state.t, t_end, samples, snaps, profs):
        ok = integ.advance_to(ts)
        st = integ.state
        if not ok:
            traj.status = "blowup"
            record(st)
            break
        if ts in samples:
            record(st)
        if ts in snaps:
            traj.snapshots[ts] = {"state": EvolutionState(st.t, st.profile.copy(), spec),
                                  "accumulator": integ.acc.copy() if integ.acc else None,
                                  "dt_next": integ.dt, "linf_ref": integ.linf_ref}
        if ts in profs:
            keep_profile(st)
    traj.blowup = blowup_monitor(traj.linf_history, integ.linf_ref, config.blowup_factor,
                                 integ.underflow)
    if not ok and not traj.blowup["flag"]:
        traj.blowup.update(flag=True, reason="amplitude", t_star=float(integ.state.t))
    traj.accumulator = integ.acc
    traj.n_steps = integ.n_steps
    traj.n_rejected = integ.n_rejected
    traj.dt_next = integ.dt
    traj.final_state = integ.state
    return traj
