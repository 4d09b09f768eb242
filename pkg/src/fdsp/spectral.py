"""Periodic grids, continuum-calibrated transforms, multipliers and norms.

Coefficient arrays are stored in NumPy FFT order (``j = 0, 1, ..., n/2-1,
-n/2, ..., -1``). Use :meth:`SpectralField.ordered` for increasing-frequency
order. The transform is calibrated so that the discrete coefficients
approximate the continuum transform
``f^(xi) = (2 pi)^{-1/2} int f(x) exp(-i x xi) dx``, i.e.

    coeffs_j = dx / sqrt(2 pi) * sum_m f(x_m) exp(-i x_m xi_j),

with ``x_m = -L/2 + m dx``.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np

SQRT_2PI = np.sqrt(2.0 * np.pi)


class ValidationError(ValueError):
    """Invalid parameters or inputs."""


class NumericalError(ArithmeticError):
    """NaN/inf produced or a numerical procedure failed."""


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """Uniform periodic lattice on ``[-L/2, L/2)`` and its frequency lattice.

    Parameters
    ----------
    n_points : int
        Number of samples, a power of two ``>= 8``.
    box_length : float
        Period ``L``.
    """
    n_points: int
    box_length: float

    def __post_init__(self):
        n = self.n_points
        if isinstance(n, bool) or int(n) != n:
            raise ValidationError(f"n_points must be an integer, got {n!r}")
        n = int(n)
        if n < 8 or n & (n - 1):
            raise ValidationError(f"n_points must be a power of two >= 8, got {n}")
        L = float(self.box_length)
        if not np.isfinite(L) or L <= 0:
            raise ValidationError(f"box_length must be positive, got {self.box_length!r}")
        object.__setattr__(self, "n_points", n)
        object.__setattr__(self, "box_length", L)

    @property
    def dx(self):
        return self.box_length / self.n_points

    @property
    def dxi(self):
        """Frequency spacing ``2 pi / L``."""
        return 2.0 * np.pi / self.box_length

    @cached_property
    def x(self):
        return -0.5 * self.box_length + self.dx * np.arange(self.n_points)

    @cached_property
    def index(self):
        """Integer frequency index ``j`` in FFT order."""
        return np.fft.fftfreq(self.n_points, 1.0 / self.n_points).astype(np.int64)

    @cached_property
    def xi(self):
        """Frequencies ``2 pi j / L`` in FFT order."""
        return self.dxi * self.index

    @cached_property
    def _parity(self):
        # exp(-i x_0 xi_j) = exp(i pi j) = (-1)^j
        return np.where(self.index % 2 == 0, 1.0, -1.0)

    @property
    def xi_max(self):
        return self.dxi * (self.n_points // 2)

    def band_mask(self, fraction=0.5):
        """Real 0/1 mask keeping ``|j| < fraction * n / 2``."""
        return (np.abs(self.index) < fraction * self.n_points / 2).astype(np.float64)

    def to_dict(self):
        return {"n_points": self.n_points, "box_length": self.box_length}


def make_grid(n_points, box_length):
    """Build a :class:`Grid`; see the class for the validation rules."""
    return Grid(n_points, box_length)


# ---------------------------------------------------------------------------
# Equation description
# ---------------------------------------------------------------------------

_KINDS = {"fkdv": "fKdV", "fnls": "fNLS"}
_SIGNS = {"focusing": 1, "+": 1, "+1": 1, "defocusing": -1, "-": -1, "-1": -1}


@dataclass(frozen=True)
class EquationSpec:
    """Equation kind, dispersion exponent and nonlinearity sign.

    ``kind='fKdV'``: ``u_t - |D|^alpha u_x + sign * u^2 u_x = 0`` (real u).
    ``kind='fNLS'``: ``i u_t - |D|^(alpha+1) u + sign * |u|^2 u = 0``.
    ``sign=+1`` is focusing.
    """
    kind: str
    alpha: float
    sign: int = 1

    def __post_init__(self):
        kind = _KINDS.get(str(self.kind).lower())
        if kind is None:
            raise ValidationError(f"kind must be 'fKdV' or 'fNLS', got {self.kind!r}")
        a = float(self.alpha)
        if not (-1.0 < a < 1.0) or a == 0.0:
            raise ValidationError(f"alpha must lie in (-1, 1) minus {{0}}, got {self.alpha!r}")
        s = self.sign
        if isinstance(s, str):
            s = _SIGNS.get(s.strip().lower())
        if s not in (1, -1):
            raise ValidationError(f"sign must be +1/-1 or focusing/defocusing, got {self.sign!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "sign", int(s))

    @property
    def is_kdv(self):
        return self.kind == "fKdV"

    @property
    def real_valued(self):
        return self.is_kdv

    def linear_frequency(self, xi):
        """``omega(xi)`` with ``u^(t) = exp(i t omega) f^(t)`` for the free flow.

        fKdV: ``sign(xi)|xi|^(alpha+1)``; fNLS: ``-|xi|^(alpha+1)``.
        """
        xi = np.asarray(xi, dtype=float)
        p = np.abs(xi) ** (self.alpha + 1.0)
        return np.sign(xi) * p if self.is_kdv else -p

    def group_speed(self, xi):
        """Magnitude ``(alpha+1)|xi|^alpha`` of the group velocity."""
        xi = np.asarray(xi, dtype=float)
        with np.errstate(divide="ignore"):
            return (self.alpha + 1.0) * np.abs(xi) ** self.alpha

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha, "sign": self.sign}


# ---------------------------------------------------------------------------
# Spectral fields and transforms
# ---------------------------------------------------------------------------

@dataclass
class SpectralField:
    """Calibrated Fourier coefficients on a grid (FFT order)."""
    grid: Grid
    coeffs: np.ndarray
    real_valued: bool = False

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n_points,):
            raise ValidationError(
                f"coefficient count {c.shape} does not match grid size {self.grid.n_points}")
        self.coeffs = c

    def copy(self):
        return SpectralField(self.grid, self.coeffs.copy(), self.real_valued)

    def with_coeffs(self, coeffs, real_valued=None):
        rv = self.real_valued if real_valued is None else real_valued
        return SpectralField(self.grid, coeffs, rv)

    def ordered(self):
        """Return ``(xi, coeffs)`` in increasing-frequency order."""
        return np.fft.fftshift(self.grid.xi), np.fft.fftshift(self.coeffs)

    def hermitian_defect(self):
        """Max relative violation of ``c(-xi) = conj(c(xi))`` (Nyquist excluded)."""
        c = self.coeffs
        mirror = np.conj(c[(-self.grid.index) % self.grid.n_points])
        mirror[self.grid.n_points // 2] = c[self.grid.n_points // 2]
        scale = np.max(np.abs(c))
        return 0.0 if scale == 0 else float(np.max(np.abs(c - mirror)) / scale)


def _check_samples(samples, grid):
    s = np.asarray(samples)
    if s.shape != (grid.n_points,):
        raise ValidationError(f"expected {grid.n_points} samples, got shape {s.shape}")
    return s


def to_spectral(samples, grid, real_valued=None):
    """Calibrated forward transform of grid samples.

    Parameters
    ----------
    samples : array_like
        Values ``f(x_m)``.
    grid : Grid
    real_valued : bool, optional
        Defaults to whether ``samples`` has a real dtype.
    """
    s = _check_samples(samples, grid)
    if real_valued is None:
        real_valued = not np.iscomplexobj(s)
    c = np.fft.fft(s) * (grid._parity * (grid.dx / SQRT_2PI))
    return SpectralField(grid, c, bool(real_valued))


def to_physical(field):
    """Inverse of :func:`to_spectral`; real output for real-valued fields."""
    g = field.grid
    u = np.fft.ifft(field.coeffs * g._parity) * (SQRT_2PI / g.dx)
    return u.real.copy() if field.real_valued else u


# ---------------------------------------------------------------------------
# Multipliers
# ---------------------------------------------------------------------------

def abs_power(xi, p):
    """``|xi|^p`` with ``0^p = 0`` for ``p > 0`` (inf for ``p < 0``)."""
    xi = np.abs(np.asarray(xi, dtype=float))
    with np.errstate(divide="ignore"):
        return xi ** p


def fkdv_symbol(alpha):
    """Symbol ``i xi |xi|^alpha = i sign(xi)|xi|^(alpha+1)`` of ``|D|^alpha d/dx``."""
    return lambda xi: 1j * np.sign(xi) * abs_power(xi, alpha + 1.0)


def fnls_symbol(alpha):
    """Symbol ``|xi|^(alpha+1)`` of ``|D|^(alpha+1)``."""
    return lambda xi: abs_power(xi, alpha + 1.0) + 0j


def frac_symbol(s):
    """Symbol ``|xi|^s`` of ``|D|^s``."""
    return lambda xi: abs_power(xi, s) + 0j


def derivative_symbol():
    return lambda xi: 1j * np.asarray(xi, dtype=float)


def _symbol_values(symbol, grid, xi):
    if callable(symbol):
        return np.broadcast_to(np.asarray(symbol(xi), dtype=np.complex128), xi.shape)
    vals = np.asarray(symbol, dtype=np.complex128)
    if vals.shape != xi.shape:
        raise ValidationError("symbol array does not match grid")
    return vals


def apply_multiplier(field, symbol):
    """Multiply coefficients pointwise by ``symbol(xi)``.

    ``symbol`` is a vectorized callable of the frequency array or an array
    in FFT order. Reality of the field is kept when the symbol satisfies
    ``m(-xi) = conj(m(xi))`` on the lattice.
    """
    g = field.grid
    m = _symbol_values(symbol, g, g.xi)
    if not np.all(np.isfinite(m)):
        bad = g.xi[~np.isfinite(m)]
        raise NumericalError(f"symbol is not finite at xi = {bad[:5]}")
    real = False
    if field.real_valued:
        if callable(symbol):
            mm = _symbol_values(symbol, g, -g.xi)
        else:
            mm = m[(-g.index) % g.n_points]
        mm = np.where(np.isfinite(mm), mm, 0.0)
        nyq = g.n_points // 2
        keep = np.ones(g.n_points, bool)
        keep[nyq] = False
        real = bool(np.allclose(mm[keep], np.conj(m[keep]), rtol=1e-14, atol=0.0))
    return SpectralField(g, field.coeffs * m, real)


# ---------------------------------------------------------------------------
# Littlewood-Paley
# ---------------------------------------------------------------------------

def cutoff(xi):
    """Raised-cosine cutoff: 1 on ``|xi| <= 1``, 0 on ``|xi| >= 2``."""
    a = np.abs(np.asarray(xi, dtype=float))
    mid = np.cos(0.5 * np.pi * (a - 1.0)) ** 2
    return np.where(a <= 1.0, 1.0, np.where(a < 2.0, mid, 0.0))


def band_symbol(xi, k):
    """``psi_k(xi) = phi(xi / 2^k) - phi(xi / 2^(k-1))``."""
    xi = np.asarray(xi, dtype=float)
    return cutoff(xi * 2.0 ** -k) - cutoff(xi * 2.0 ** (1 - k))


def low_symbol(xi, k):
    """``phi(xi / 2^k)``, the symbol of ``P_{<=k}``."""
    return cutoff(np.asarray(xi, dtype=float) * 2.0 ** -k)


def sharp_band_symbol(xi, k):
    """Indicator of ``2^k <= |xi| < 2^(k+1)``."""
    a = np.abs(np.asarray(xi, dtype=float))
    return ((a >= 2.0 ** k) & (a < 2.0 ** (k + 1))).astype(float)


def lp_project(field, k, sharp=False):
    """Littlewood-Paley projection onto the dyadic band ``|xi| ~ 2^k``."""
    sym = sharp_band_symbol(field.grid.xi, k) if sharp else band_symbol(field.grid.xi, k)
    return SpectralField(field.grid, field.coeffs * sym, field.real_valued)


def lp_low(field, k):
    """Smooth low-pass ``P_{<=k}``."""
    return SpectralField(field.grid, field.coeffs * low_symbol(field.grid.xi, k),
                         field.real_valued)


def band_range(grid):
    """Range of dyadic indices ``k`` whose sharp bands cover all nonzero lattice frequencies."""
    lo = int(np.floor(np.log2(grid.dxi)))
    hi = int(np.ceil(np.log2(grid.xi_max))) + 1
    return range(lo, hi)


def band_energies(field, sharp=True):
    """Per-band L2 energies ``{k: ||P_k f||^2}`` plus the zero mode under key ``None``."""
    g = field.grid
    out = {}
    for k in band_range(g):
        p = lp_project(field, k, sharp=sharp).coeffs
        out[k] = float(np.sum(np.abs(p) ** 2) * g.dxi)
    out[None] = float(abs(field.coeffs[0]) ** 2 * g.dxi)
    return out


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormKind:
    """Which norm to compute; build with the class methods."""
    name: str
    s: float = None
    alpha: float = None

    def __post_init__(self):
        if self.name not in ("L2", "Linf", "Sobolev", "WeightedH11", "Z"):
            raise ValidationError(f"unknown norm {self.name!r}")
        if self.name == "Sobolev" and (self.s is None or self.s < 0):
            raise ValidationError("Sobolev norm requires s >= 0")
        if self.name == "Z" and self.alpha is None:
            raise ValidationError("Z norm requires alpha")

    @classmethod
    def l2(cls):
        return cls("L2")

    @classmethod
    def linf(cls):
        return cls("Linf")

    @classmethod
    def sobolev(cls, s):
        return cls("Sobolev", s=float(s))

    @classmethod
    def weighted_h11(cls):
        return cls("WeightedH11")

    @classmethod
    def z(cls, alpha):
        return cls("Z", alpha=float(alpha))


def profile_weight(xi, alpha):
    """``|xi|^((1-alpha)/4) + |xi|^10``."""
    a = np.abs(np.asarray(xi, dtype=float))
    return a ** ((1.0 - alpha) / 4.0) + a ** 10


def sobolev_norm(field, s):
    """``(sum (1+xi^2)^s |c|^2 dxi)^(1/2)``, evaluated in log space."""
    g = field.grid
    c2 = np.abs(field.coeffs) ** 2
    nz = c2 > 0
    if not np.any(nz):
        return 0.0
    logs = s * np.log1p(g.xi[nz] ** 2) + np.log(c2[nz])
    top = np.max(logs)
    log_sq = np.log(g.dxi) + top + np.log(np.sum(np.exp(logs - top)))
    return float(np.exp(0.5 * log_sq)) if log_sq < 1400.0 else float("inf")


def _as_pair(obj, grid):
    if isinstance(obj, SpectralField):
        return obj, None
    if grid is None:
        raise ValidationError("samples need a grid")
    s = _check_samples(obj, grid)
    return None, s


def compute_norm(obj, kind, grid=None):
    """Discrete surrogate of a norm.

    Parameters
    ----------
    obj : SpectralField or array_like
        Field, or grid samples (then ``grid`` is required).
    kind : NormKind
    grid : Grid, optional
    """
    field, samples = _as_pair(obj, grid)
    g = field.grid if field is not None else grid
    if kind.name == "Linf":
        if samples is None:
            samples = to_physical(field)
        return float(np.max(np.abs(samples)))
    if field is None:
        field = to_spectral(samples, g)
    if kind.name == "L2":
        return float(np.sqrt(np.sum(np.abs(field.coeffs) ** 2) * g.dxi))
    if kind.name == "Sobolev":
        return sobolev_norm(field, kind.s)
    if kind.name == "Z":
        return float(np.max(profile_weight(g.xi, kind.alpha) * np.abs(field.coeffs)))
    # WeightedH11: || <x> f ||_{H^1}
    if samples is None:
        samples = to_physical(field)
    h = np.sqrt(1.0 + g.x ** 2) * samples
    return sobolev_norm(to_spectral(h, g), 1.0)
