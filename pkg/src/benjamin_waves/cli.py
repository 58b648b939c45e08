"""Command-line entry point.

Every subcommand writes its artifacts plus a ``manifest.json`` into ``--out``.
Exit status: 0 on success, 1 on a computational failure, 2 on a usage error.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import logging
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .evolution import (EigenDirection, EvolveConfig, SeededNoise, band_limited_noise, evolve,
                        perturbation_experiment, stable_dt)
from .functionals import (NoWaveRegime, PhysicalParams, WaveParams, instability_margin,
                          physical_to_normalized, pohozaev_residuals)
from .io import read_json, write_field_csv, write_json, write_table_csv, format_float
from .linearized import assemble_lplus, dprime, eta_test, kernel_residual, morse_index
from .solver import (Problem, SolverConfig, SolverError, maximize_quotient, solve_profile,
                     sweep_alpha)
from .spectral import Field, greens_function, make_grid
from .spectrum import index_count, kdv_spectrum, verdict

log = logging.getLogger(__name__)

COMMANDS = ("solve", "maximize", "pohozaev", "linop", "spectrum", "index", "evolve",
            "perturb", "sweep", "greens", "physical")

DEFAULTS = {
    "omega": None, "p": None, "alpha": None, "c": None, "gamma": None,
    "n": 2048, "L": 100.0 * math.pi, "tol": 1e-10, "max_iter": 2000,
    "route": "fixedpoint", "problem": "gn", "dt": None, "t_final": 1.0, "eps": 0.0,
    "seed": 0, "out": ".", "direction": "noise", "frames": "csv",
}


class UsageError(Exception):
    """Bad or missing command-line input."""


def _parser():
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--omega", type=float)
    common.add_argument("--p", type=float)
    common.add_argument("--c", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--n", type=int)
    common.add_argument("--L", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--max-iter", dest="max_iter", type=int)
    common.add_argument("--route", choices=["fixedpoint", "quotient"])
    common.add_argument("--problem", choices=["gn", "sobolev"])
    common.add_argument("--dt", type=float)
    common.add_argument("--t-final", dest="t_final", type=float)
    common.add_argument("--eps", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--config")

    parser = argparse.ArgumentParser(prog="benjamin-waves",
                                     description="Travelling waves of the generalized "
                                                 "Benjamin equation and their stability.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common], argument_default=argparse.SUPPRESS)
        if name == "sweep":
            sp.add_argument("--alpha", type=float, nargs="+")
        else:
            sp.add_argument("--alpha", type=float)
        if name == "perturb":
            sp.add_argument("--direction", choices=["noise", "eigen"])
        if name == "evolve":
            sp.add_argument("--frames", choices=["csv", "dir"])
    return parser


def resolve_config(ns):
    """Defaults, then the ``--config`` file, then explicit flags."""
    explicit = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    cfg = dict(DEFAULTS)
    if getattr(ns, "config", None):
        path = Path(ns.config)
        if not path.is_file():
            raise UsageError(f"--config: no such file {path}")
        try:
            data = read_json(path)
        except ValueError as err:
            raise UsageError(f"--config: {path} is not valid JSON ({err})") from err
        for key, val in data.items():
            key = key.lstrip("-").replace("-", "_")
            if key not in DEFAULTS:
                raise UsageError(f"--config: unknown key {key!r}")
            cfg[key] = val
    cfg.update(explicit)
    cfg["command"] = ns.command
    return cfg


def _need(cfg, *keys):
    for key in keys:
        if cfg.get(key) is None:
            raise UsageError(f"--{key.replace('_', '-')} is required for {cfg['command']}")


def _grid(cfg):
    try:
        return make_grid(int(cfg["n"]), float(cfg["L"]))
    except ValueError as err:
        raise UsageError(f"--n/--L: {err}") from err


def _solver_cfg(cfg):
    try:
        return SolverConfig(max_iter=int(cfg["max_iter"]), tol=float(cfg["tol"]))
    except ValueError as err:
        raise UsageError(f"--tol/--max-iter: {err}") from err


def _params(cfg):
    _need(cfg, "omega", "p")
    try:
        return WaveParams(cfg["omega"], cfg["p"])
    except NoWaveRegime as err:
        raise UsageError(f"--omega: {err}") from err
    except ValueError as err:
        raise UsageError(f"--p: {err}") from err


def _record(name, value, cfg, **params):
    base = {"omega": cfg.get("omega"), "p": cfg.get("p"), "alpha": cfg.get("alpha")}
    base.update(params)
    return {"name": name, "value": value, "params": base}


def _wave(cfg):
    params = _params(cfg)
    grid = _grid(cfg)
    scfg = _solver_cfg(cfg)
    if cfg["route"] == "quotient":
        return maximize_quotient(params.omega, params.p, grid, scfg, Problem.SOBOLEV).wave
    return solve_profile(params, grid, scfg)


def _save_wave(out, w, stem="wave"):
    files = write_field_csv(out / f"{stem}.csv", w.phi)
    files.append(write_json(out / f"{stem}.json", w.metadata()))
    return files


# --- subcommands ----------------------------------------------------------------

def cmd_solve(cfg, out):
    return _save_wave(out, _wave(cfg))


def cmd_maximize(cfg, out):
    problem = Problem(cfg["problem"])
    _need(cfg, "p", "alpha" if problem is Problem.GN else "omega")
    value = cfg["alpha"] if problem is Problem.GN else cfg["omega"]
    if not value > 0:
        raise UsageError(f"--{'alpha' if problem is Problem.GN else 'omega'} must be positive")
    rep = maximize_quotient(float(value), float(cfg["p"]), _grid(cfg), _solver_cfg(cfg), problem)
    w = rep.wave
    files = write_field_csv(out / "maximizer.csv", rep.varphi)
    files += _save_wave(out, w)
    params = {"omega": w.params.omega, "p": w.params.p, "alpha": rep.alpha}
    records = [
        _record("quotient", rep.quotient_value, cfg, **params),
        _record("omega", w.params.omega, cfg, **params),
        _record("phi_l2_norm", w.phi.norm(), cfg, **params),
    ]
    if problem is Problem.GN:
        records.append(_record("norm_times_quotient", w.phi.norm() * rep.quotient_value,
                               cfg, **params))
    files.append(write_json(out / "maximize.json", records))
    return files


def cmd_pohozaev(cfg, out):
    w = _wave(cfg)
    r = pohozaev_residuals(w.phi, w.params)
    records = [_record(k, getattr(r, k), cfg) for k in ("r1", "r2", "relative")]
    return _save_wave(out, w) + [write_json(out / "pohozaev.json", records)]


def cmd_linop(cfg, out):
    w = _wave(cfg)
    A = assemble_lplus(w)
    ground = morse_index(A)
    eta = eta_test(w)
    report = {
        "omega": w.params.omega, "p": w.params.p,
        "morse_index": ground.morse_index, "kernel_dim": ground.kernel_dim_estimate,
        "mu": ground.mu, "dprime": dprime(w, report=ground),
        "eta_numeric": eta.numeric, "eta_closed": eta.closed_form,
        "margins": {"instability_margin": instability_margin(w.params)},
    }
    return _save_wave(out, w) + [write_json(out / "linop.json", report)]


def cmd_spectrum(cfg, out):
    w = _wave(cfg)
    sp = kdv_spectrum(w, vectors=False)
    table = write_table_csv(out / "spectrum.csv", ["re", "im"],
                            [(float(z.real), float(z.imag)) for z in sp.eigenvalues])
    return _save_wave(out, w) + [write_json(out / "spectrum.json", sp.as_dict()), table]


def cmd_index(cfg, out):
    w = _wave(cfg)
    A = assemble_lplus(w)
    ground = morse_index(A)
    sp = kdv_spectrum(w, A=A, ground=ground, vectors=False)
    idx = index_count(w, ground=ground, spectrum=sp, A=A)
    v = verdict(w, ground=ground, spectrum=sp, A=A)
    report = idx.as_dict()
    report["evidence"] = v.evidence
    report["kernel_residual"] = kernel_residual(w)
    return _save_wave(out, w) + [write_json(out / "index.json", report)]


def _evolve_cfg(cfg, u0, params, default_t):
    dt = cfg["dt"]
    if dt is None:
        dt = 0.25 * stable_dt(u0, params)
    t_final = cfg["t_final"] if cfg["t_final"] is not None else default_t
    try:
        ecfg = EvolveConfig(float(dt), float(t_final))
    except ValueError as err:
        raise UsageError(f"--dt/--t-final: {err}") from err
    frames = max(1, ecfg.steps // 200)
    return EvolveConfig(ecfg.dt, ecfg.t_final, save_every=frames)


def cmd_evolve(cfg, out):
    w = _wave(cfg)
    g = w.grid
    u0 = w.phi + Field(g, float(cfg["eps"]) * band_limited_noise(g, int(cfg["seed"])))
    ecfg = _evolve_cfg(cfg, u0, w.params, 1.0)
    try:
        traj = evolve(u0, w.params, ecfg)
    except ValueError as err:
        raise UsageError(f"--dt: {err}") from err
    files = _save_wave(out, w)
    if cfg["frames"] == "dir":
        fdir = out / "frames"
        fdir.mkdir(exist_ok=True)
        for i in range(len(traj.times)):
            files += write_field_csv(fdir / f"frame_{i:05d}.csv", traj.frame(i))
        files.append(write_table_csv(fdir / "times.csv", ["index", "t"],
                                     [(i, float(t)) for i, t in enumerate(traj.times)]))
    else:
        path = out / "trajectory.csv"
        lines = ["t," + ",".join(format_float(x) for x in g.x)]
        for t, row in zip(traj.times, traj.frames):
            lines.append(",".join(format_float(v) for v in (t, *row)))
        path.write_text("\n".join(lines) + "\n")
        files.append(path)
    report = {"status": traj.status, "drift": traj.drift, "dt": ecfg.dt,
              "t_final": ecfg.t_final, "frames": len(traj.times)}
    files.append(write_json(out / "evolve.json", report))
    if traj.status != "ok":
        raise SolverError(f"evolution stopped early: {traj.status}")
    return files


def cmd_perturb(cfg, out):
    w = _wave(cfg)
    eps = float(cfg["eps"]) if cfg["eps"] else 1e-4
    if cfg["direction"] == "eigen":
        sp = kdv_spectrum(w)
        real = [m for m in sp.modes if abs(m.eigenvalue.imag) < sp.threshold]
        if not real:
            raise SolverError("no real unstable eigenvalue to perturb along")
        mode = max(real, key=lambda m: m.eigenvalue.real)
        direction = EigenDirection(eps, mode.vector, mode.eigenvalue.real)
    else:
        direction = SeededNoise(int(cfg["seed"]), eps)
    ecfg = _evolve_cfg(cfg, w.phi, w.params, 1.0)
    rep = perturbation_experiment(w, direction, ecfg)
    files = _save_wave(out, w)
    files.append(write_json(out / "growth.json", rep.as_dict()))
    files.append(write_table_csv(out / "distance.csv", ["t", "d"],
                                 [(float(t), float(d)) for t, d in zip(rep.times, rep.distances)]))
    return files


def cmd_sweep(cfg, out):
    _need(cfg, "alpha", "p")
    alphas = cfg["alpha"] if isinstance(cfg["alpha"], list) else [cfg["alpha"]]
    try:
        table = sweep_alpha(alphas, float(cfg["p"]), _grid(cfg), _solver_cfg(cfg))
    except ValueError as err:
        raise UsageError(f"--alpha/--p: {err}") from err
    rows = [(r.alpha, r.quotient, r.phi_norm, r.omega, r.status, r.message) for r in table.rows]
    csv = write_table_csv(out / "sweep.csv",
                          ["alpha", "quotient", "phi_norm", "omega", "status", "message"], rows)
    js = write_json(out / "sweep.json", {"p": table.p, "verdicts": table.verdicts})
    return [csv, js]


def cmd_greens(cfg, out):
    _need(cfg, "omega")
    if not cfg["omega"] > 0:
        raise UsageError("--omega: the Green's function needs omega > 0")
    g = _grid(cfg)
    G = greens_function(g, float(cfg["omega"]))
    a = np.abs(np.asarray(g.x))
    L = g.half_length
    win = (a >= L / 4) & (a <= L / 2)
    weighted = (1.0 + a[win] ** 2) * np.abs(G.values[win])
    records = [_record("weighted_tail_max", float(np.max(weighted)), cfg),
               _record("value_at_zero", float(G.values[g.n // 2]), cfg)]
    return write_field_csv(out / "greens.csv", G) + [write_json(out / "greens.json", records)]


def cmd_physical(cfg, out):
    _need(cfg, "c", "gamma")
    try:
        omega = physical_to_normalized(PhysicalParams(float(cfg["c"]), float(cfg["gamma"])))
    except ValueError as err:
        raise UsageError(f"--c/--gamma: {err}") from err
    rec = {"name": "omega", "value": omega, "params": {"c": cfg["c"], "gamma": cfg["gamma"]}}
    files = [write_json(out / "physical.json", rec)]
    if cfg.get("p") is not None:
        files += cmd_solve(dict(cfg, omega=omega), out)
    return files


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def _versions():
    return {"benjamin_waves": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def run(argv=None):
    """Execute one subcommand; returns the process exit code."""
    parser = _parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    started = _dt.datetime.now(_dt.timezone.utc).isoformat()
    t0 = time.perf_counter()
    status, code, files = "ok", 0, []
    cfg = {"command": ns.command}
    out = None
    try:
        cfg = resolve_config(ns)
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        files = HANDLERS[ns.command](cfg, out)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        status, code = "usage_error", 2
    except (SolverError, RuntimeError, ArithmeticError, np.linalg.LinAlgError,
            ValueError) as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        status, code = "error", 1
    if out is not None and out.is_dir():
        manifest = {
            "command": ns.command,
            "config": dict(cfg, versions=_versions()),
            "started_at": started,
            "duration_s": time.perf_counter() - t0,
            "artifact_files": [str(Path(f).relative_to(out)) if Path(f).is_relative_to(out)
                               else str(f) for f in files],
            "status": status,
        }
        write_json(out / "manifest.json", manifest)
    return code


def main():
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
