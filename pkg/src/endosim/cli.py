"""Command-line entry point.

Commands
--------
run            integrate a scenario; writes diagnostics.csv, snapshots,
               observables.csv (trafficking/signaling) and manifest.json
analyze        one of: moments-vs-ode, convergence, stationary,
               condition-check, decay-rate
list-scenarios print the built-in scenario ids
schema         print the config-file schema field by field

Exit codes: 0 success (warnings listed in the manifest), 1 config error,
2 numeric abort.  All floats are printed with 17 significant digits so
files round-trip losslessly; identical invocations produce bitwise
identical CSV output.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
import time

import numpy as np

from . import analysis, scenarios
from .errors import ConfigError, EndosimError, NumericsError
from .grid import Field1D
from .stepper import run as run_sim

logger = logging.getLogger(__name__)

_OUT_ROOT_ENV = "ENDOSIM_OUT"

# conveniences for --set: bare names map onto their schema paths
_SET_ALIASES = {
    "dt": "time.dt",
    "T": "time.T",
    "quadrature": "numerics.quadrature",
    "negativity": "numerics.negativity",
    "M0": "membrane.M0",
}


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return format(x, ".17g")
    return str(x)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: str, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _snapshot_rows(field):
    if isinstance(field, Field1D):
        g = field.grid
        for i in range(g.I_r):
            yield (i + 1, g.r_centers[i], field.values[i])
    else:
        g = field.grid
        for i in range(g.I_r):
            for j in range(g.I_a):
                yield (i + 1, j + 1, g.r_centers[i], g.a_centers[j], field.values[i, j])


def _snapshot_name(t: float) -> str:
    return f"snapshot_t{format(t, 'g')}.csv"


def _params_echo(sc: scenarios.Scenario) -> dict[str, str]:
    echo = {}
    for line in scenarios.serialize_scenario(sc).splitlines():
        key, val = (p.strip() for p in line.split("=", 1))
        echo[key] = val
    return echo


def _manifest(path_dir: str, sc: scenarios.Scenario, files: list[str],
              timings: dict, cfl: dict, warnings: list[str], extra=None) -> dict:
    man = {
        "scenario": sc.id,
        "parameters": _params_echo(sc),
        "out_dir": os.path.abspath(path_dir),
        "files": files,
        "timings_s": timings,
        "cfl": cfl,
        "warnings": warnings,
    }
    if extra:
        man.update(extra)
    for name in files:
        full = os.path.join(path_dir, name)
        if not (os.path.exists(full) and os.path.getsize(full) > 0):
            raise EndosimError(f"produced file {name} is missing or empty")
    _write_json(os.path.join(path_dir, "manifest.json"), man)
    return man


def _load_with_overrides(source: str, sets: list[str]) -> scenarios.Scenario:
    sc = scenarios.load_scenario(source)
    if not sets:
        return sc
    overrides = {}
    for item in sets:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = (p.strip() for p in item.split("=", 1))
        overrides[_SET_ALIASES.get(key, key)] = val
    return scenarios.apply_overrides(sc, overrides)


def _out_dir(args, default_leaf: str) -> str:
    out = args.out
    if out is None:
        root = os.environ.get(_OUT_ROOT_ENV, "endosim-out")
        out = os.path.join(root, default_leaf)
    os.makedirs(out, exist_ok=True)
    return out


def _execute(sc: scenarios.Scenario):
    res = scenarios.resolve(sc)
    t0 = time.perf_counter()
    traj = run_sim(res.f0, res.M0, res.rates, res.kernel, res.grid, res.cfg)
    return res, traj, time.perf_counter() - t0


def cmd_run(args) -> int:
    sc = _load_with_overrides(args.scenario, args.set or [])
    out = _out_dir(args, sc.id)
    res, traj, wall = _execute(sc)

    files = ["diagnostics.csv"]
    rows = zip(traj.steps, traj.times, traj.moments[:, 0], traj.moments[:, 1],
               traj.moments[:, 2], traj.M)
    _write_csv(os.path.join(out, "diagnostics.csv"),
               ["n", "t", "H0", "H1r", "H1a", "M"], rows)

    for t_snap in sorted(traj.snapshots):
        name = _snapshot_name(t_snap)
        field = traj.snapshots[t_snap]
        header = (["i", "r_center", "f"] if isinstance(field, Field1D)
                  else ["i", "j", "r_center", "a_center", "f"])
        _write_csv(os.path.join(out, name), header, _snapshot_rows(field))
        files.append(name)

    if sc.family == "trafficking":
        obs = scenarios.trafficking_observables(traj)
        _write_csv(os.path.join(out, "observables.csv"),
                   ["t", "mean_size", "size_std", "internalization_ratio"],
                   zip(obs["t"], obs["mean_size"], obs["size_std"],
                       obs["internalization_ratio"]))
        files.append("observables.csv")
    elif sc.family == "signaling":
        obs = scenarios.signaling_observables(traj)
        _write_csv(os.path.join(out, "observables.csv"),
                   ["t", "camp_internal", "camp_membrane", "camp_total"],
                   zip(obs["t"], obs["camp_internal"], obs["camp_membrane"],
                       obs["camp_total"]))
        files.append("observables.csv")

    _manifest(out, sc, files, {"run": wall},
              {"advective": traj.cfl_advective, "coagulation": traj.cfl_coagulation},
              traj.warnings)
    print(f"run {sc.id}: {len(files)} files in {out}")
    return 0


def _analyze_condition(sc, res, out):
    rep = analysis.check_theorem_condition(res.rates, res.kernel)
    _write_json(os.path.join(out, "condition.json"), rep)
    return ["condition.json"], {}, []


def _analyze_stationary(sc, res, out):
    if sc.model != "1d":
        raise ConfigError("stationary analysis needs a 1d scenario")
    cond = analysis.check_theorem_condition(res.rates, res.kernel)
    st = analysis.stationary_fixed_point(
        res.rates, res.kernel,
        analysis.StationaryConfig(grid=res.grid, tol=1e-10, M_const=sc.M_const))
    l1 = float(np.abs(st.f_inf.values).sum() * res.grid.dr)
    _write_json(os.path.join(out, "stationary.json"), {
        "condition": cond, "iterations": st.iterations, "residual": st.residual,
        "converged": st.converged, "K": st.K, "bound_alpha_over_gamma0": st.bound,
        "l1_norm": l1, "within_bound": bool(l1 <= st.bound + 1e-9)})
    _write_csv(os.path.join(out, "f_inf.csv"), ["i", "r_center", "f"],
               _snapshot_rows(st.f_inf))
    return ["stationary.json", "f_inf.csv"], {}, []


def _analyze_decay(sc, res, out, probe_T=12.0):
    if sc.model != "1d":
        raise ConfigError("decay-rate analysis needs a 1d scenario")
    cond = analysis.check_theorem_condition(res.rates, res.kernel)
    st = analysis.stationary_fixed_point(
        res.rates, res.kernel,
        analysis.StationaryConfig(grid=res.grid, tol=1e-12, M_const=sc.M_const))
    cfg = dataclasses.replace(res.cfg, T=min(probe_T, sc.T), snapshot_times=())
    traj = run_sim(res.f0, res.M0, res.rates, res.kernel, res.grid, cfg)
    rep = analysis.decay_rate_probe(traj, st.f_inf, cond)
    dr = res.grid.dr
    dists = [float(np.abs(fv - st.f_inf.values).sum() * dr) for fv in traj.history]
    _write_csv(os.path.join(out, "distances.csv"), ["t", "l1_distance"],
               zip(traj.times, dists))
    _write_json(os.path.join(out, "decay.json"), rep)
    return ["decay.json", "distances.csv"], {}, list(traj.warnings)


def _analyze_moments_vs_ode(sc, res, out):
    form = sc.kernel.get("form")
    if form == "constant":
        K0, K1 = float(sc.kernel["K0"]), 0.0
    elif form == "affine":
        K0, K1 = float(sc.kernel["K0"]), float(sc.kernel["K1"])
    else:
        raise ConfigError("moments-vs-ode needs a constant or affine kernel")
    traj = run_sim(res.f0, res.M0, res.rates, res.kernel, res.grid, res.cfg)
    h0 = analysis.MomentVector(*traj.moments[0])
    oracle = analysis.moment_ode_oracle(K0, K1, h0, traj.times)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel0 = np.abs(traj.moments[:, 0] - oracle[:, 0]) / oracle[:, 0]
        rel1r = np.abs(traj.moments[:, 1] - oracle[:, 1]) / np.where(oracle[:, 1] != 0,
                                                                     oracle[:, 1], 1.0)
        rel1a = np.abs(traj.moments[:, 2] - oracle[:, 2]) / np.where(oracle[:, 2] != 0,
                                                                     oracle[:, 2], 1.0)
    _write_csv(os.path.join(out, "moments_vs_ode.csv"),
               ["t", "H0_scheme", "H0_ode", "relerr_H0",
                "H1r_scheme", "relerr_H1r", "H1a_scheme", "relerr_H1a"],
               zip(traj.times, traj.moments[:, 0], oracle[:, 0], rel0,
                   traj.moments[:, 1], rel1r, traj.moments[:, 2], rel1a))
    _write_json(os.path.join(out, "moments_vs_ode.json"), {
        "K0": K0, "K1": K1, "max_relerr_H0": float(np.max(rel0)),
        "relerr_H0_nondecreasing": bool(np.all(np.diff(rel0) >= -1e-13))})
    return ["moments_vs_ode.csv", "moments_vs_ode.json"], {}, list(traj.warnings)


def _analyze_convergence(sc, res, out, levels, ref_level, base_I, quadrature, jobs):
    rep = analysis.convergence_study(sc, base_I=base_I, levels=levels,
                                     ref_level=ref_level, quadrature=quadrature,
                                     jobs=jobs)
    _write_json(os.path.join(out, "convergence.json"), rep)
    return ["convergence.json"], {"slopes": rep["slopes"]}, []


def cmd_analyze(args) -> int:
    sc = _load_with_overrides(args.scenario, args.set or [])
    if sc.analysis and args.task not in sc.analysis and args.task not in (
            "condition-check",):
        logger.warning("task %s is not listed for scenario %s", args.task, sc.id)
    out = _out_dir(args, f"{args.task}-{sc.id}")
    res = scenarios.resolve(sc)
    t0 = time.perf_counter()
    if args.task == "condition-check":
        files, extra, warns = _analyze_condition(sc, res, out)
    elif args.task == "stationary":
        files, extra, warns = _analyze_stationary(sc, res, out)
    elif args.task == "decay-rate":
        files, extra, warns = _analyze_decay(sc, res, out, probe_T=args.probe_T)
    elif args.task == "moments-vs-ode":
        files, extra, warns = _analyze_moments_vs_ode(sc, res, out)
    elif args.task == "convergence":
        files, extra, warns = _analyze_convergence(
            sc, res, out, args.levels, args.ref_level, args.base_I,
            args.quadrature, args.jobs)
    else:
        raise ConfigError(f"unknown analyze task {args.task!r}")
    _manifest(out, sc, files, {"analyze": time.perf_counter() - t0}, {}, warns,
              extra={"task": args.task, **extra})
    print(f"analyze {args.task} {sc.id}: {len(files)} files in {out}")
    return 0


def cmd_list(args) -> int:
    for sid in scenarios.builtin_ids():
        print(f"{sid:26s} {scenarios._REGISTRY[sid].description}")
    return 0


def cmd_schema(args) -> int:
    for key, typ, desc in scenarios.config_schema():
        print(f"{key:24s} {typ:18s} {desc}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="endosim",
                                description="Structured endosome population simulator")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="integrate a scenario and write its artifacts")
    pr.add_argument("scenario", help="built-in id or config file path")
    pr.add_argument("--out", help=f"output directory (default: ${_OUT_ROOT_ENV}/<id>)")
    pr.add_argument("--set", action="append", metavar="KEY=VALUE",
                    help="override a config field (dotted schema path)")
    pr.set_defaults(fn=cmd_run)

    pa = sub.add_parser("analyze", help="run an analysis task on a scenario")
    pa.add_argument("task", choices=["moments-vs-ode", "convergence", "stationary",
                                     "condition-check", "decay-rate"])
    pa.add_argument("scenario")
    pa.add_argument("--out")
    pa.add_argument("--set", action="append", metavar="KEY=VALUE")
    pa.add_argument("--levels", type=int, default=6, help="refinement levels in the study")
    pa.add_argument("--ref-level", type=int, default=6, dest="ref_level",
                    help="dyadic exponent of the reference grid")
    pa.add_argument("--base-I", type=int, default=6, dest="base_I")
    pa.add_argument("--quadrature", default="gauss16",
                    help="per-cell rule for the study's initial data and rate integrals")
    pa.add_argument("--jobs", type=int, default=1,
                    help="parallel workers for independent study levels")
    pa.add_argument("--probe-T", type=float, default=12.0, dest="probe_T",
                    help="trajectory length for the decay-rate fit")
    pa.set_defaults(fn=cmd_analyze)

    pl = sub.add_parser("list-scenarios", help="print built-in scenario ids")
    pl.set_defaults(fn=cmd_list)

    ps = sub.add_parser("schema", help="print the config-file schema")
    ps.set_defaults(fn=cmd_schema)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ENDOSIM_LOGLEVEL", "WARNING"))
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericsError as exc:
        print(f"numeric abort: {exc}", file=sys.stderr)
        return 2
    except EndosimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
