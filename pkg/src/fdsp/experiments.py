"""Configuration, run directories and the experiment presets behind the CLI.

A run writes ``<out>/<name>/`` containing ``meta.json``, ``series.csv``,
``per_xi.csv``, ``snapshots/snap_<t>.bin`` (with ``.acc`` resume sidecars)
and ``reports/*.json``.
"""
import json
import platform
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, io, kernels
from .evolution import SolverConfig, make_initial_data, run
from .groundstate import petviashvili, scaling_law_check
from .linear import (dispersive_bench, gaussian_multiplier, l1_interp_corpus, random_packet,
                     trilinear_check)
from .resonance import (flat_profile, phase_inequality_check, resonant_asymptotic_check,
                        stationary_phase_model_check)
from .scattering import (admissible_p0, convergence_report, decay_fit, dominant_frequency,
                         frequency_mask, phase_correction, phase_drift_report)
from .spectral import (EquationSpec, Grid, NumericalError, SpectralField, ValidationError,
                       profile_weight, to_spectral)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

COMMANDS = ("evolve", "scatter", "groundstate", "linbench", "inequality-bench",
            "resonance-check")


class BlowupDetected(NumericalError):
    """Raised after outputs are written when a run flagged blow-up."""


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def log_times(t0, t1, count):
    return np.geomspace(t0, t1, int(count)).tolist()


def dyadic_times(t_end, start=1.0):
    out, t = [], float(start)
    while t <= t_end * (1 + 1e-12):
        out.append(t)
        t *= 2.0
    return out


def _times(spec, what):
    if spec is None:
        return []
    if isinstance(spec, dict):
        try:
            a, b, n = float(spec["start"]), float(spec["stop"]), int(spec["count"])
        except KeyError as e:
            raise ValidationError(f"{what}: missing key {e}") from e
        if spec.get("spacing", "log") == "log":
            return log_times(a, b, n)
        return np.linspace(a, b, n).tolist()
    return [float(t) for t in spec]


def _need(block, key, where):
    if key not in block:
        raise ValidationError(f"missing required key '{key}' in [{where}]")
    return block[key]


@dataclass
class ExperimentConfig:
    name: str
    command: str
    raw: dict
    equation: EquationSpec = None
    grid: Grid = None
    data: dict = field(default_factory=dict)
    solver: SolverConfig = None
    t_end: float = None
    sample_times: list = field(default_factory=list)
    tracked_xi: list = field(default_factory=list)
    p0: float = None
    decay_window: tuple = (1.0, 200.0)
    drift_window: tuple = (10.0, 500.0)
    section: dict = field(default_factory=dict)
    output_dir: str = "runs"


def parse_config(raw, command):
    """Validate a configuration mapping for ``command``."""
    if command not in COMMANDS:
        raise ValidationError(f"unknown command {command!r}")
    name = str(raw.get("name", command))
    cfg = ExperimentConfig(name=name, command=command, raw=raw,
                           output_dir=str(raw.get("output_dir", "runs")))
    eq = raw.get("equation")
    if command in ("evolve", "scatter", "groundstate", "linbench", "resonance-check"):
        if eq is None:
            raise ValidationError("missing [equation] block")
        cfg.equation = EquationSpec(_need(eq, "kind", "equation"), _need(eq, "alpha", "equation"),
                                    _need(eq, "sign", "equation"))
    if command in ("evolve", "scatter", "groundstate"):
        gb = raw.get("grid")
        if gb is None:
            raise ValidationError("missing [grid] block")
        cfg.grid = Grid(_need(gb, "n", "grid"), _need(gb, "L", "grid"))
    elif "grid" in raw:
        cfg.grid = Grid(_need(raw["grid"], "n", "grid"), _need(raw["grid"], "L", "grid"))
    if command in ("evolve", "scatter"):
        db = raw.get("data")
        if db is None:
            raise ValidationError("missing [data] block")
        _need(db, "kind", "data")
        eps = float(_need(db, "epsilon", "data"))
        if eps < 0:
            raise ValidationError("epsilon must be nonnegative")
        cfg.data = dict(db)
        sb = dict(raw.get("solver", {}))
        cfg.t_end = float(_need(sb, "t_end", "solver"))
        sb.pop("t_end")
        try:
            cfg.solver = SolverConfig(**sb)
        except TypeError as e:
            raise ValidationError(f"bad [solver] entry: {e}") from e
        diag = raw.get("diagnostics", {})
        cfg.sample_times = _times(diag.get("sample_times"), "sample_times")
        cfg.tracked_xi = [float(v) for v in diag.get("tracked_xi", [])]
        if "decay_window" in diag:
            cfg.decay_window = tuple(float(v) for v in diag["decay_window"])
        if "drift_window" in diag:
            cfg.drift_window = tuple(float(v) for v in diag["drift_window"])
        lo, hi = admissible_p0(cfg.equation.alpha)
        cfg.p0 = float(diag.get("p0", hi))
        if not lo < cfg.p0 <= hi:
            warnings.warn(f"p0={cfg.p0} outside the admissible interval ({lo}, {hi}]",
                          RuntimeWarning)
    sect = {"groundstate": "groundstate", "linbench": "linbench",
            "inequality-bench": "inequality", "resonance-check": "resonance"}.get(command)
    if sect:
        cfg.section = dict(raw.get(sect, {}))
    return cfg


def load_config(path, command):
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as e:
        raise ValidationError(f"invalid TOML in {path}: {e}") from e
    return parse_config(raw, command)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not serializable: {type(o)}")


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)


def _meta(cfg, threads, extra=None):
    m = {"name": cfg.name, "command": cfg.command, "config": cfg.raw,
         "package_version": __version__, "kernel_backend": kernels.BACKEND,
         "threads": threads, "numpy": np.__version__, "python": platform.python_version(),
         "seed": cfg.data.get("seed", cfg.section.get("seed"))}
    m.update(extra or {})
    return m


def _run_dir(out, name):
    d = Path(out) / name
    (d / "reports").mkdir(parents=True, exist_ok=True)
    return d


def _fmt_time(t):
    return repr(float(t)).replace(".", "p")


# ---------------------------------------------------------------------------
# Evolution presets
# ---------------------------------------------------------------------------

def scatter_reports(traj, spec, p0, xi0, drift_window):
    """Convergence of the corrected and uncorrected weighted profile and phase drift."""
    grid = traj.grid
    times = sorted(t for t in traj.profiles if t >= 1.0)
    weight = profile_weight(grid.xi, spec.alpha)
    band = grid.band_mask(traj.config.dealias_fraction)
    first = SpectralField(grid, traj.profiles[times[0]][0])
    mask = frequency_mask(first, spec.alpha, band=band)
    corr, unc = [], []
    for t in times:
        c, acc = traj.profiles[t]
        th = phase_correction(grid.xi, acc, spec)
        corr.append(np.exp(1j * th) * weight * c)
        unc.append(weight * c)
    out = {"corrected": convergence_report(times, corr, p0, mask),
           "uncorrected": convergence_report(times, unc, p0, mask)}
    rows = np.array(traj.per_xi, dtype=float).reshape(-1, 8)
    sel = ((np.abs(rows[:, 1] - xi0) < 1e-12) & (rows[:, 0] >= drift_window[0])
           & (rows[:, 0] <= drift_window[1]))
    if np.count_nonzero(sel) >= 2:
        r = rows[sel]
        out["phase_drift"] = phase_drift_report(
            xi0, r[:, 0], r[:, 2] * np.exp(1j * r[:, 3]), r[:, 4], spec)
    return out


def _initial(cfg):
    d = dict(cfg.data)
    kind = d.pop("kind")
    eps = float(d.pop("epsilon"))
    d.pop("seed", None)
    d.update(d.pop("params", {}))
    return make_initial_data(kind, eps, cfg.grid, alpha=cfg.equation.alpha, **d)


def _evolve(cfg, out, resume, threads):
    spec = cfg.equation
    d = _run_dir(out, cfg.name)
    (d / "snapshots").mkdir(exist_ok=True)
    u0, small = _initial(cfg)
    state = acc = dt_next = linf_ref = None
    if resume is not None:
        state = io.load_snapshot(resume)
        if state.spec != spec or state.profile.grid != cfg.grid:
            raise ValidationError("snapshot does not match the configuration")
        side = io.load_resume(str(resume) + ".acc", state.profile.grid)
        acc, dt_next, linf_ref = side["accumulator"], side["dt_next"], side["linf_ref"]
    samples = sorted(set(cfg.sample_times) | {1.0} | set(dyadic_times(cfg.t_end)))
    xi0 = None
    tracked = list(cfg.tracked_xi)
    if cfg.command == "scatter":
        prof0 = to_spectral(u0, cfg.grid, real_valued=spec.is_kdv)
        xi0 = dominant_frequency(prof0, spec, cfg.grid.band_mask(cfg.solver.dealias_fraction))
        tracked.append(xi0)
    traj = run(spec, u0, cfg.t_end, cfg.solver, cfg.grid, sample_times=samples,
               profile_times=dyadic_times(cfg.t_end), tracked_xi=tracked, state=state,
               accumulator=acc, dt_next=dt_next, linf_ref=linf_ref)
    if xi0 is not None:
        xi0 = float(cfg.grid.xi[int(np.argmin(np.abs(cfg.grid.xi - xi0)))])
    io.write_series_csv(d / "series.csv", traj.records)
    io.write_per_xi_csv(d / "per_xi.csv", traj.per_xi)
    for t, snap in traj.snapshots.items():
        p = d / "snapshots" / f"snap_{_fmt_time(t)}.bin"
        io.save_snapshot(p, snap["state"])
        io.save_resume(str(p) + ".acc", snap["accumulator"], snap["dt_next"], snap["linf_ref"],
                       cfg.grid.n_points)
    mass = traj.series("mass")
    ham = traj.series("hamiltonian")
    rep = {"mass_drift": float(np.max(np.abs(mass - mass[0])) / mass[0]) if mass[0] else 0.0,
           "hamiltonian_drift": (float(np.max(np.abs(ham - ham[0])) / abs(ham[0]))
                                 if ham[0] else 0.0),
           "n_steps": traj.n_steps, "n_rejected": traj.n_rejected, "status": traj.status}
    write_json(d / "reports" / "conservation.json", rep)
    write_json(d / "reports" / "blowup.json", traj.blowup)
    t = traj.series("t")
    try:
        slope, se = decay_fit(t, traj.series("linf_u"), cfg.decay_window)
        write_json(d / "reports" / "decay.json", {"window": cfg.decay_window, "slope": slope,
                                                  "stderr": se})
    except ValidationError as e:
        write_json(d / "reports" / "decay.json", {"window": cfg.decay_window, "error": str(e)})
    if cfg.command == "scatter" and traj.status == "ok" and resume is None:
        sr = scatter_reports(traj, spec, cfg.p0, xi0, cfg.drift_window)
        write_json(d / "reports" / "convergence.json",
                   {"corrected": sr["corrected"], "uncorrected": sr["uncorrected"]})
        if "phase_drift" in sr:
            write_json(d / "reports" / "phase_drift.json", sr["phase_drift"])
    write_json(d / "meta.json", _meta(cfg, threads, {
        "smallness": small, "status": traj.status, "resumed_from": None if resume is None
        else str(resume), "t_end": cfg.t_end, "dominant_xi": xi0}))
    if traj.blowup.get("flag"):
        raise BlowupDetected(f"blow-up flagged at t={traj.blowup['t_star']}")
    return d, traj


# ---------------------------------------------------------------------------
# Other presets
# ---------------------------------------------------------------------------

def _groundstate(cfg, out, threads):
    d = _run_dir(out, cfg.name)
    sec = cfg.section
    params = [float(p) for p in _need(sec, "params", "groundstate")]
    tol = float(sec.get("tol", 1e-10))
    spec = cfg.equation
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        states = list(ex.map(lambda p: petviashvili(spec, p, cfg.grid, tol=tol), params))
    gdir = d / "groundstates"
    gdir.mkdir(exist_ok=True)
    for s in states:
        tag = _fmt_time(s.param)
        s.export(gdir / f"Q_{tag}.csv", gdir / f"Q_{tag}.json")
    if len(params) >= 4:
        write_json(d / "reports" / "scaling.json", scaling_law_check(spec, params, cfg.grid, tol))
    write_json(d / "meta.json", _meta(cfg, threads))
    return d, states


def _linbench(cfg, out, threads):
    d = _run_dir(out, cfg.name)
    sec = cfg.section
    k = int(sec.get("band", 0))
    times = _times(sec.get("times", {"start": 1.0, "stop": 256.0, "count": 9}), "times")
    rep = dispersive_bench(cfg.equation, k, times, grid=cfg.grid)
    write_json(d / "reports" / "dispersive.json", rep.to_dict())
    seed = int(sec.get("seed", 0))
    trials = int(sec.get("trials", 100))
    g = Grid(1024, 128.0 * 2.0 ** -k)
    write_json(d / "reports" / "l1_interp.json", l1_interp_corpus(k, trials, seed, g))
    write_json(d / "reports" / "trilinear.json", trilinear_trials(trials, seed))
    write_json(d / "meta.json", _meta(cfg, threads))
    return d, rep


def trilinear_trials(n_trials, seed, n=128, L=64.0, scale=4.0):
    """Max ratio of the trilinear check over seeded random band-limited triples."""
    g = Grid(n, L)
    m, l1 = gaussian_multiplier(scale)
    ratios = []
    for child in np.random.SeedSequence(seed).spawn(n_trials):
        rng = np.random.default_rng(child)
        f, gg, h = (random_packet(g, 0, rng) for _ in range(3))
        ratios.append(trilinear_check(m, l1, f, gg, h)["ratio"])
    return {"seed": seed, "n_trials": n_trials, "max_ratio": float(np.max(ratios)),
            "bound": 1.0 / np.sqrt(2 * np.pi), "ratios": ratios}


def _inequality(cfg, out, threads):
    d = _run_dir(out, cfg.name)
    sec = cfg.section
    alphas = [float(a) for a in sec.get("alphas", [-0.9, -0.5, -0.1, 0.1, 0.5, 0.9])]
    n = int(sec.get("n_samples", 10 ** 6))
    seed = int(sec.get("seed", 0))
    with ThreadPoolExecutor(max_workers=max(1, threads)) as ex:
        reps = list(ex.map(lambda a: phase_inequality_check(a, n, seed), alphas))
    write_json(d / "reports" / "phase_inequality.json", reps)
    write_json(d / "meta.json", _meta(cfg, threads))
    return d, reps


def _resonance(cfg, out, threads):
    d = _run_dir(out, cfg.name)
    sec = cfg.section
    Ns = [float(v) for v in sec.get("N_values", [25, 100, 400, 1600])]
    model = [stationary_phase_model_check(N) for N in Ns]
    write_json(d / "reports" / "model.json", model)
    xi = float(sec.get("xi", 1.0))
    s_values = [float(v) for v in sec.get("s_values", [1e3, 1e4])]
    res = [resonant_asymptotic_check(flat_profile(), xi, s, cfg.equation) for s in s_values]
    write_json(d / "reports" / "resonant.json", res)
    write_json(d / "meta.json", _meta(cfg, threads))
    return d, {"model": model, "resonant": res}


def run_experiment(cfg, out=None, resume=None, threads=1):
    """Execute ``cfg.command``; returns ``(run_directory, result)``.

    ``out`` overrides the configured output directory.
    """
    out = cfg.output_dir if out is None else out
    if cfg.command in ("evolve", "scatter"):
        return _evolve(cfg, out, resume, threads)
    if resume is not None:
        raise ValidationError("--resume is only meaningful for evolve/scatter")
    if cfg.command == "groundstate":
        return _groundstate(cfg, out, threads)
    if cfg.command == "linbench":
        return _linbench(cfg, out, threads)
    if cfg.command == "inequality-bench":
        return _inequality(cfg, out, threads)
    return _resonance(cfg, out, threads)
