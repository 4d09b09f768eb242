"""Snapshot files and CSV writers.

Snapshot layout (little endian): magic ``FDSP``, u32 version (1), u8 kind
(0 fKdV, 1 fNLS), i8 sign, f64 alpha, f64 t, u64 n, f64 box length, then
``n`` complex profile coefficients as (re, im) f64 pairs ordered by
``j = -n/2 .. n/2-1``.

A resume sidecar ``<snapshot>.acc`` stores the phase integral and the step
controller state: magic ``FDAC``, u32 version, f64 t_last, f64 dt_next,
f64 linf_ref, u8 has_accumulator, u64 n, then ``integral`` and ``last_sq``
(f64 each, same ordering).
"""
import csv
import struct

import numpy as np

from .evolution import DIAGNOSTIC_FIELDS, EvolutionState
from .scattering import PhaseAccumulator
from .spectral import EquationSpec, Grid, SpectralField

MAGIC = b"FDSP"
VERSION = 1
_HEAD = struct.Struct("<4sIBbddQd")
ACC_MAGIC = b"FDAC"
_ACC_HEAD = struct.Struct("<4sIdddBQ")
PER_XI_FIELDS = ("t", "xi", "abs_fhat", "arg_fhat", "acc", "phase", "w_re", "w_im")


class SnapshotError(OSError):
    """Corrupt or unreadable snapshot."""


class SnapshotVersionError(SnapshotError):
    pass


def save_snapshot(path, state):
    g = state.profile.grid
    kind = 0 if state.spec.is_kdv else 1
    head = _HEAD.pack(MAGIC, VERSION, kind, state.spec.sign, state.spec.alpha, float(state.t),
                      g.n_points, g.box_length)
    data = np.fft.fftshift(state.profile.coeffs).astype("<c16")
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(data.tobytes())


def _read_exact(fh, size, what):
    b = fh.read(size)
    if len(b) != size:
        raise SnapshotError(f"truncated file while reading {what}")
    return b


def load_snapshot(path):
    """Read a snapshot written by :func:`save_snapshot` (bit-exact)."""
    with open(path, "rb") as fh:
        head = _read_exact(fh, _HEAD.size, "header")
        magic, ver, kind, sign, alpha, t, n, L = _HEAD.unpack(head)
        if magic != MAGIC:
            raise SnapshotError(f"bad magic {magic!r}")
        if ver != VERSION:
            raise SnapshotVersionError(f"unsupported snapshot version {ver}")
        if kind not in (0, 1):
            raise SnapshotError(f"bad equation kind {kind}")
        try:
            spec = EquationSpec("fKdV" if kind == 0 else "fNLS", alpha, sign)
            grid = Grid(n, L)
        except ValueError as e:
            raise SnapshotError(f"invalid header: {e}") from e
        body = _read_exact(fh, 16 * n, "coefficients")
        if fh.read(1):
            raise SnapshotError("trailing bytes after coefficients")
    c = np.fft.ifftshift(np.frombuffer(body, dtype="<c16").astype(np.complex128))
    return EvolutionState(t, SpectralField(grid, c, spec.is_kdv), spec)


def save_resume(path, accumulator, dt_next, linf_ref, n):
    has = accumulator is not None
    t_last = accumulator.t_last if has else 0.0
    with open(path, "wb") as fh:
        fh.write(_ACC_HEAD.pack(ACC_MAGIC, VERSION, t_last, dt_next, linf_ref, int(has), n))
        if has:
            fh.write(np.fft.fftshift(accumulator.integral).astype("<f8").tobytes())
            fh.write(np.fft.fftshift(accumulator.last_sq).astype("<f8").tobytes())


def load_resume(path, grid):
    with open(path, "rb") as fh:
        magic, ver, t_last, dt_next, linf_ref, has, n = _ACC_HEAD.unpack(
            _read_exact(fh, _ACC_HEAD.size, "resume header"))
        if magic != ACC_MAGIC:
            raise SnapshotError(f"bad resume magic {magic!r}")
        if ver != VERSION:
            raise SnapshotVersionError(f"unsupported resume version {ver}")
        if n != grid.n_points:
            raise SnapshotError("resume data does not match the snapshot grid")
        acc = None
        if has:
            integral = np.frombuffer(_read_exact(fh, 8 * n, "integral"), dtype="<f8")
            last = np.frombuffer(_read_exact(fh, 8 * n, "last_sq"), dtype="<f8")
            acc = PhaseAccumulator(grid, t_last, np.fft.ifftshift(integral).astype(np.float64),
                                   np.fft.ifftshift(last).astype(np.float64))
    return {"accumulator": acc, "dt_next": dt_next, "linf_ref": linf_ref}


def write_series_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAGNOSTIC_FIELDS)
        for r in records:
            w.writerow([repr(float(v)) for v in r.as_row()])


def write_per_xi_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PER_XI_FIELDS)
        for row in rows:
            w.writerow([repr(float(v)) for v in row])


def read_csv(path):
    """Read a numeric CSV into a dict of arrays keyed by header name."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        head = next(r)
        rows = [[float(v) for v in row] for row in r]
    arr = np.array(rows, dtype=float).reshape(-1, len(head))
    return {h: arr[:, i] for i, h in enumerate(head)}
