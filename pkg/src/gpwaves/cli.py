"""Command line entry point: gpwaves <subcommand> [--config FILE] [--out DIR] [--key value ...].

Every schema key of a subcommand can be given in the JSON config file or as a flag
(``--target-p 3``); flags win. Values on the command line are parsed as JSON when
possible. Exit codes: 0 ok, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import math
import platform
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np
import scipy

from . import __version__

log = logging.getLogger("gpwaves")

REQUIRED = object()


class ConfigError(Exception):
    pass


class NumericalFailure(Exception):
    pass


def _num(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) for v in r])


def write_json(path: Path, obj) -> None:
    def conv(o):
        if isinstance(o, (np.floating, np.integer)):
            return o.item()
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, complex):
            return [o.real, o.imag]
        raise TypeError(f"cannot serialise {type(o)}")

    path.write_text(json.dumps(obj, indent=2, default=conv, sort_keys=True) + "\n")


# ---------------------------------------------------------------- manifest

@dataclass
class RunManifest:
    subcommand: str
    config: dict
    seed: int | None
    grid: dict | None
    versions: dict
    started: str
    finished: str = ""
    artifacts: dict = dc_field(default_factory=dict)
    status: str = "ok"

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "config": self.config,
            "seed": self.seed,
            "grid": self.grid,
            "versions": self.versions,
            "started": self.started,
            "finished": self.finished,
            "artifacts": self.artifacts,
            "status": self.status,
        }

    @classmethod
    def load(cls, path) -> "RunManifest":
        d = json.loads(Path(path).read_text())
        return cls(**d)


def sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def versions() -> dict:
    return {"gpwaves": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------- schemas

SCHEMAS: dict[str, dict] = {
    "disp1d": {
        "c_values": [round(0.1 * i, 10) for i in range(15)],
        "quadrature_step": 0.01,
    },
    "minimize": {
        "target_p": REQUIRED,
        "n": None,
        "points": 256,
        "init": "vortex-pair",
        "init_param": None,
        "grad_tol": 1e-7,
        "constraint_tol": 1e-9,
        "max_iters": 5000,
        "step_rule": "backtracking",
    },
    "branch": {
        "p_values": REQUIRED,
        "points": 256,
        "n": None,
        "init": "vortex-pair",
        "grad_tol": 1e-7,
        "max_iters": 5000,
        "slope_step": 0.05,
        "warm_start": True,
        "save_fields": True,
    },
    "obstacle": {
        "c": REQUIRED,
        "amplitude": 0.04,
        "width": 1.0,
        "n": 8,
        "points": 128,
        "tol": 1e-8,
        "relax_T": 0.0,
        "relax_dt": 0.04,
        "damping": 0.5,
        "gate": None,
    },
    "dyn": {
        "experiment": REQUIRED,
        "c": 0.5,
        "T": 20.0,
        "dt": 1e-3,
        "A": 20.0,
        "deltas": [1e-3, 1e-2],
        "seed": 0,
        "n": 256,
        "points": 8192,
        "observer_stride": 500,
    },
    "kernels": {
        "c_values": [0.0, 0.5, 1.0, 1.3],
        "dims": [2, 3],
        "field": None,
        "speed": None,
        "annulus": [0.4, 0.8],
        "supersonic_c": 1.6,
    },
    "kp": {
        "p_values": [0.5, 1.0, 2.0],
        "points": 512,
        "box_scale": 2.0,
        "grad_tol": 1e-8,
        "lump_side": 200.0,
        "lump_points": 512,
    },
}


def resolve_config(sub: str, file_cfg: dict, overrides: dict) -> dict:
    schema = SCHEMAS[sub]
    for k in list(file_cfg) + list(overrides):
        if k not in schema:
            raise ConfigError(f"unknown config key {k!r} for {sub}")
    cfg = {}
    for k, default in schema.items():
        if k in overrides:
            cfg[k] = overrides[k]
        elif k in file_cfg:
            cfg[k] = file_cfg[k]
        elif default is REQUIRED:
            raise ConfigError(f"missing config key {k!r}")
        else:
            cfg[k] = default
    return cfg


def _need(cfg: dict, key: str, kind, check=None):
    v = cfg[key]
    try:
        if kind is list:
            if not isinstance(v, list):
                raise TypeError
            return v
        if kind is bool:
            if not isinstance(v, bool):
                raise TypeError
            return v
        out = kind(v)
    except (TypeError, ValueError):
        raise ConfigError(f"config key {key!r} must be {kind.__name__}, got {v!r}") from None
    if check is not None and not check(out):
        raise ConfigError(f"config key {key!r} has an invalid value {v!r}")
    return out


# ---------------------------------------------------------------- subcommands

def run_disp1d(cfg: dict, out: Path, man: RunManifest) -> None:
    from .analytic1d import Wave1D, dispersion, profile_energy, profile_renormalized_momentum, sample_wave

    cs = [float(c) for c in _need(cfg, "c_values", list)]
    if any(not 0 <= c < math.sqrt(2) for c in cs):
        raise ConfigError("config key 'c_values' must lie in [0, sqrt2)")
    h = _need(cfg, "quadrature_step", float, lambda v: v > 0)
    rows = []
    for c in cs:
        w = Wave1D(c)
        d = dispersion(w)
        prof = sample_wave(w, h)
        pq = profile_renormalized_momentum(prof) if c > 0 else float("nan")
        rows.append([c, w.eps, d.energy, d.p_renorm, d.p_physical, d.mass, profile_energy(prof), pq])
    path = out / "dispersion.csv"
    write_csv(path, ["c", "eps", "E", "p_renorm", "p_physical", "mass", "E_quadrature", "p_quadrature"], rows)


def _grid2(cfg: dict, p: float):
    from .field import Grid
    from .solver import default_box

    pts = _need(cfg, "points", int, lambda v: v >= 8 and not v & (v - 1))
    n = cfg["n"]
    if n is None:
        n = default_box(p)
        scale = pts / 256
        n = tuple(v * scale for v in n)
    elif isinstance(n, list):
        n = tuple(float(v) for v in n)
    else:
        n = _need(cfg, "n", float, lambda v: v > 0)
    return Grid(2, n, (pts, pts))


def _save_field(f, path: Path) -> str:
    from .field import write_gpwv

    write_gpwv(path, f)
    return path.name


def run_minimize(cfg: dict, out: Path, man: RunManifest) -> None:
    from .solver import STATUS_CONVERGED, MinimizeConfig, minimize_at_momentum, write_branch_csv

    p = _need(cfg, "target_p", float, lambda v: v >= 0)
    try:
        mc = MinimizeConfig(target_p=p, max_iters=int(cfg["max_iters"]), grad_tol=float(cfg["grad_tol"]),
                            constraint_tol=float(cfg["constraint_tol"]), step_rule=cfg["step_rule"],
                            init=cfg["init"], init_param=cfg["init_param"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    grid = _grid2(cfg, max(p, 1e-3))
    man.grid = grid.to_dict()
    bp = minimize_at_momentum(mc, grid)
    bp.field_path = _save_field(bp.field, out / "field.gpwv")
    write_branch_csv([bp], out / "branch.csv")
    write_json(out / "summary.json", {**bp.row(), "residual": bp.residual, "field_path": bp.field_path,
                                      "vortices": [{"x": list(x), "degree": d} for x, d in bp.vortices]})
    if bp.status not in (STATUS_CONVERGED, "trivial-minimizer"):
        raise NumericalFailure(f"minimization ended with status {bp.status!r}")


def run_branch(cfg: dict, out: Path, man: RunManifest) -> None:
    from .solver import MinimizeConfig, branch_checks, trace_branch, write_branch_csv

    ps = [float(v) for v in _need(cfg, "p_values", list)]
    if ps != sorted(ps) or any(v <= 0 for v in ps):
        raise ConfigError("config key 'p_values' must be positive and increasing")
    base = MinimizeConfig(target_p=ps[0] if ps else 1.0, init=cfg["init"], grad_tol=float(cfg["grad_tol"]),
                          max_iters=int(cfg["max_iters"]))
    grids = {p: _grid2(cfg, p) for p in ps}
    man.grid = {str(p): g.to_dict() for p, g in grids.items()}
    slope = cfg["slope_step"]
    save = _need(cfg, "save_fields", bool)
    csv_path = out / "branch.csv"
    done = []

    def keep(bp):
        # partial artifacts survive a failure later in the sweep
        if save and bp.field is not None:
            bp.field_path = _save_field(bp.field, out / f"field_p{bp.target_p:g}.gpwv")
        done.append(bp)
        write_branch_csv(done, csv_path)

    pts = trace_branch(ps, grid=lambda p: grids[p], cfg=base, slope_step=slope,
                       warm_start=_need(cfg, "warm_start", bool), callback=keep)
    checks = branch_checks(pts)
    write_json(out / "checks.json", checks)
    failed = [b.target_p for b in pts if b.status != "converged"]
    if failed:
        raise NumericalFailure(f"branch points did not converge: {failed}")


def run_obstacle(cfg: dict, out: Path, man: RunManifest) -> None:
    from dataclasses import replace

    from .dynamics import obstacle_flow, write_events
    from .field import Grid, gaussian_potential, inner
    from .solver import STATUS_CONVERGED, local_minimize_hamiltonian, trust_region_defaults

    c = _need(cfg, "c", float, lambda v: 0 < v < math.sqrt(2))
    grid = Grid(2, _need(cfg, "n", float, lambda v: v > 0), _need(cfg, "points", int))
    man.grid = grid.to_dict()
    V = gaussian_potential(grid, float(cfg["amplitude"]), float(cfg["width"]))
    tr = trust_region_defaults(c)
    if cfg["gate"] is not None:
        tr = replace(tr, gate=float(cfg["gate"]))
    if V.l2_norm >= tr.gate:
        raise ConfigError(f"potential L2 norm {V.l2_norm:.4g} exceeds the gate {tr.gate:.4g} (key 'amplitude')")
    res = local_minimize_hamiltonian(c, V, tr, tol=float(cfg["tol"]))
    _save_field(res.field, out / "minimizer.gpwv")
    summary = {"minimizer": res.summary(), "trust_region": {"lambda": tr.lam, "kappa": tr.kappa, "gate": tr.gate},
               "V_l2": V.l2_norm}
    T = float(cfg["relax_T"])
    if T > 0:
        ob = obstacle_flow(V, c, T, dt=float(cfg["relax_dt"]), damping=float(cfg["damping"]))
        d = ob.field.values - res.field.values
        summary["relaxation"] = {"rate": ob.rate, "settled": ob.settled,
                                 "l2_distance": math.sqrt(inner(grid, d, d)), "events": len(ob.events)}
        ob.trace.write_csv(out / "trace.csv")
        write_events(out / "events.json", ob.events)
        _save_field(ob.field, out / "relaxed.gpwv")
    write_json(out / "summary.json", summary)
    if res.status != STATUS_CONVERGED:
        raise NumericalFailure(f"obstacle minimization ended with status {res.status!r}")


def run_dyn(cfg: dict, out: Path, man: RunManifest) -> None:
    from .dynamics import PropagatorConfig, evolve, orbital_distance, stability_experiment
    from .field import Grid, twisted_wave

    exp = cfg["experiment"]
    grid = Grid(1, _need(cfg, "n", float, lambda v: v > 0), _need(cfg, "points", int))
    man.grid = grid.to_dict()
    c = _need(cfg, "c", float, lambda v: 0 < v < math.sqrt(2))
    T = _need(cfg, "T", float, lambda v: v >= 0)
    dt = _need(cfg, "dt", float, lambda v: v > 0)
    if exp == "soliton":
        f0, info = twisted_wave(grid, c)
        pc = PropagatorConfig(dt=dt, t_end=T, observer_stride=int(cfg["observer_stride"]))
        f, tr = evolve(f0, pc)
        tr.write_csv(out / "trace.csv")
        write_json(out / "summary.json", {"twist_k": info.k, "expected_speed": c - 2 * info.k,
                                          "energy_drift": tr.drift("energies"), "momentum_drift": tr.drift("momenta"),
                                          "mass_drift": tr.drift("masses"),
                                          "final_distance": orbital_distance(f, c, float(cfg["A"]), k=info.k)})
    elif exp == "stability":
        man.seed = int(cfg["seed"])
        rows, summ = [], []
        for d in _need(cfg, "deltas", list):
            r = stability_experiment(c, float(d), T, float(cfg["A"]), grid=grid, dt=dt, seed=int(cfg["seed"]))
            rows += [[r.delta, t, v] for t, v in zip(r.times, r.distances)]
            summ.append(r.summary())
        write_csv(out / "stability.csv", ["delta", "t", "distance"], rows)
        write_json(out / "summary.json", {"runs": summ})
    else:
        raise ConfigError("config key 'experiment' must be 'soliton' or 'stability'")


def run_kernels(cfg: dict, out: Path, man: RunManifest) -> None:
    from .field import read_gpwv
    from .kernels import denominator_min_on_sphere, fit_farfield, k0_l2_norm_sq, k0_l2_norm_sq_quadrature

    rows = []
    for d in _need(cfg, "dims", list):
        for c in _need(cfg, "c_values", list):
            rows.append([int(d), float(c), k0_l2_norm_sq(float(c), int(d)), k0_l2_norm_sq_quadrature(float(c), int(d)),
                         denominator_min_on_sphere(float(c), int(d), 1.0)])
    write_csv(out / "k0_norms.csv", ["dim", "c", "closed_form", "quadrature", "denominator_min_r1"], rows)
    cs = float(cfg["supersonic_c"])
    if cs > math.sqrt(2):
        r0 = math.sqrt(cs * cs - 2)
        write_json(out / "supersonic.json", {"c": cs, "radius": r0,
                                             "min_2d": denominator_min_on_sphere(cs, 2, r0),
                                             "min_3d": denominator_min_on_sphere(cs, 3, r0)})
    if cfg["field"] is not None:
        if cfg["speed"] is None:
            raise ConfigError("missing config key 'speed' (needed with 'field')")
        f = read_gpwv(cfg["field"])
        man.grid = f.grid.to_dict()
        fit = fit_farfield(f, tuple(cfg["annulus"]), float(cfg["speed"]))
        (out / "farfield.json").write_text(fit.to_json() + "\n")


def run_kp(cfg: dict, out: Path, man: RunManifest) -> None:
    from .field import Grid
    from .kp1 import compare_with_lump, kp_action, kp_energy, sample_lump, sw_residual, transonic_scalings_check
    from .solver import MinimizeConfig, minimize_at_momentum

    side = float(cfg["lump_side"])
    lg = Grid(2, side / (2 * math.pi), int(cfg["lump_points"]))
    w = sample_lump(lg)
    report = {"lump": {"side": side, "points": lg.points[0], "residual": sw_residual(w, 1.0),
                       "l2_norm": w.l2_norm(), "energy": kp_energy(w), "action": kp_action(w)}}
    comps, pts = [], []
    pts_n = _need(cfg, "points", int)
    s = float(cfg["box_scale"])
    for p in sorted(float(v) for v in _need(cfg, "p_values", list)):
        g = Grid(2, (40 / p * s, 160 / p**2 * s), (pts_n, pts_n))
        bp = minimize_at_momentum(MinimizeConfig(target_p=p, init="kp-ansatz", grad_tol=float(cfg["grad_tol"])), g)
        pts.append(bp)
        comp = compare_with_lump(bp.field, bp.c, p)
        comp.update({"status": bp.status, "E": bp.E, "n_vortices": len(bp.vortices)})
        comps.append(comp)
    report["comparisons"] = comps
    report["scalings"] = transonic_scalings_check(pts)
    write_json(out / "kp_report.json", report)


RUNNERS = {"disp1d": run_disp1d, "minimize": run_minimize, "branch": run_branch, "obstacle": run_obstacle,
           "dyn": run_dyn, "kernels": run_kernels, "kp": run_kp}


# ---------------------------------------------------------------- driver

def _parse_value(s: str):
    try:
        return json.loads(s)
    except json.JSONDecodeError:
        return s


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gpwaves", description="Gross-Pitaevskii travelling-wave laboratory")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", default=f"runs/{name}", help="output directory")
        for key in schema:
            sp.add_argument("--" + key.replace("_", "-"), dest="ov_" + key, type=_parse_value, default=None)
    rr = sub.add_parser("rerun", help="repeat a run from its manifest")
    rr.add_argument("manifest")
    rr.add_argument("--out", required=True)
    return ap


def execute(sub: str, cfg: dict, out: Path) -> int:
    out.mkdir(parents=True, exist_ok=True)
    man = RunManifest(sub, cfg, cfg.get("seed"), None, versions(), _now())
    code = 0
    try:
        RUNNERS[sub](cfg, out, man)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        man.status = f"config error: {exc}"
        code = 2
    except (NumericalFailure, FloatingPointError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        man.status = f"numerical failure: {exc}"
        code = 1
    man.finished = _now()
    man.artifacts = {p.name: sha256(p) for p in sorted(out.iterdir()) if p.is_file() and p.name != "manifest.json"}
    write_json(out / "manifest.json", man.to_dict())
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.subcommand == "rerun":
        try:
            man = RunManifest.load(args.manifest)
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            print(f"config error: cannot read manifest: {exc}", file=sys.stderr)
            return 2
        return execute(man.subcommand, man.config, Path(args.out))
    file_cfg = {}
    if args.config:
        try:
            file_cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
            return 2
        if not isinstance(file_cfg, dict):
            print("config error: config file must hold a JSON object", file=sys.stderr)
            return 2
    overrides = {k[3:]: v for k, v in vars(args).items() if k.startswith("ov_") and v is not None}
    try:
        cfg = resolve_config(args.subcommand, file_cfg, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return execute(args.subcommand, cfg, Path(args.out))


if __name__ == "__main__":
    sys.exit(main())
