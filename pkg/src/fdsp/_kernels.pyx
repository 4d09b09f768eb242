# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops for the spectral solver.

Every routine here has a NumPy twin in ``_kernels_py`` with identical
semantics; ``fdsp.kernels`` picks one at import time.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos

cnp.import_array()


def rotate(const double complex[::1] coeffs, const double[::1] omega, double t,
           const double[::1] mask=None):
    """Return ``coeffs * exp(1j * t * omega)`` (times ``mask`` if given)."""
    cdef Py_ssize_t i, n = coeffs.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef double ph, c, s, re, im, w
    for i in range(n):
        w = 1.0 if mask is None else mask[i]
        if w == 0.0:
            o[i] = 0.0
            continue
        ph = t * omega[i]
        c = cos(ph)
        s = sin(ph)
        re = coeffs[i].real
        im = coeffs[i].imag
        o[i] = w * (re * c - im * s) + 1j * (w * (re * s + im * c))
    return out


def cube_real(const double[::1] u):
    """Pointwise ``u**3`` for real samples."""
    cdef Py_ssize_t i, n = u.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef double v
    for i in range(n):
        v = u[i]
        o[i] = v * v * v
    return out


def cube_abs(const double complex[::1] u):
    """Pointwise ``|u|**2 * u`` for complex samples."""
    cdef Py_ssize_t i, n = u.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef double re, im, m
    for i in range(n):
        re = u[i].real
        im = u[i].imag
        m = re * re + im * im
        o[i] = m * re + 1j * (m * im)
    return out


def log_trapezoid_update(double[::1] integral, double[::1] last_sq,
                         const double complex[::1] coeffs, double dlog):
    """In-place update of the per-frequency phase integral.

    ``integral += 0.5 * (last_sq + |coeffs|**2) * dlog`` followed by
    ``last_sq = |coeffs|**2``.
    """
    cdef Py_ssize_t i, n = integral.shape[0]
    cdef double re, im, sq
    for i in range(n):
        re = coeffs[i].real
        im = coeffs[i].imag
        sq = re * re + im * im
        integral[i] += 0.5 * (last_sq[i] + sq) * dlog
        last_sq[i] = sq


def trilinear_sum(const double complex[:, ::1] m, const double complex[::1] f,
                  const double complex[::1] g, const double complex[::1] h):
    """Lattice double sum ``sum_{a,b} m[a,b] f[a] g[b] h[c]`` with ``c = -(a+b)``.

    Arrays are in increasing-frequency order on a lattice of odd length
    ``2K+1`` centred on zero, so index ``K`` is frequency zero. Terms whose
    third frequency falls outside the lattice are dropped.
    """
    cdef Py_ssize_t n = f.shape[0]
    cdef Py_ssize_t K = (n - 1) // 2
    cdef Py_ssize_t a, b, c
    cdef double complex acc = 0.0, fa
    for a in range(n):
        fa = f[a]
        if fa == 0.0:
            continue
        for b in range(n):
            c = 3 * K - a - b
            if c < 0 or c >= n:
                continue
            acc += m[a, b] * fa * g[b] * h[c]
    return acc
