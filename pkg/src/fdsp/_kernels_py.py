"""Pure NumPy versions of the compiled kernels (same call signatures)."""
import numpy as np


def rotate(coeffs, omega, t, mask=None):
    out = coeffs * np.exp(1j * (t * omega))
    if mask is not None:
        out = out * mask
    return out


def cube_real(u):
    return u * u * u


def cube_abs(u):
    return (u.real * u.real + u.imag * u.imag) * u


def log_trapezoid_update(integral, last_sq, coeffs, dlog):
    sq = coeffs.real ** 2 + coeffs.imag ** 2
    integral += 0.5 * (last_sq + sq) * dlog
    last_sq[:] = sq


def trilinear_sum(m, f, g, h):
    n = f.shape[0]
    K = (n - 1) // 2
    acc = 0.0 + 0.0j
    for a in range(n):
        if f[a] == 0:
            continue
        # c = 3K - a - b must lie in [0, n)
        b_lo = max(0, 3 * K - a - (n - 1))
        b_hi = min(n - 1, 3 * K - a)
        if b_lo > b_hi:
            continue
        b = np.arange(b_lo, b_hi + 1)
        acc += f[a] * np.sum(m[a, b] * g[b] * h[3 * K - a - b])
    return complex(acc)
