"""Backend selection for the hot loops.

The compiled extension ``fdsp._kernels`` is used when it imports; otherwise
(or when ``FDSP_BACKEND=python`` is set) the NumPy fallback is used. Both
backends expose the same functions and are checked against each other in
the test suite.
"""
import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def get_backend(name=None):
    """Return the kernel module for ``name`` ('compiled' or 'python').

    ``None`` resolves to the default choice made at import.
    """
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def compiled_available():
    return _compiled is not None


if os.environ.get("FDSP_BACKEND", "").lower() == "python" or _compiled is None:
    _impl = _kernels_py
    BACKEND = "python"
else:
    _impl = _compiled
    BACKEND = "compiled"


def _c128(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def rotate(coeffs, omega, t, mask=None):
    """``coeffs * exp(i t omega)``, optionally multiplied by a real mask."""
    return _impl.rotate(_c128(coeffs), _f64(omega), float(t),
                        None if mask is None else _f64(mask))


def cube_real(u):
    return _impl.cube_real(_f64(u))


def cube_abs(u):
    return _impl.cube_abs(_c128(u))


def log_trapezoid_update(integral, last_sq, coeffs, dlog):
    """In-place trapezoid step of the log-time phase integral.

    ``integral`` and ``last_sq`` must be contiguous float64 arrays; they are
    modified in place.
    """
    _impl.log_trapezoid_update(integral, last_sq, _c128(coeffs), float(dlog))


def trilinear_sum(m, f, g, h):
    """Lattice sum of ``m(a,b) f(a) g(b) h(-a-b)`` (centred odd lattices)."""
    return complex(_impl.trilinear_sum(_c128(m), _c128(f), _c128(g), _c128(h)))
