"""Figure recipes: which files each figure reads and how series are mapped.

Recipes consume only the simulator's documented artifacts:

- ``diagnostics.csv``      n,t,H0,H1r,H1a,M
- ``snapshot_t<t>.csv``    i,j,r_center,a_center,f (2D) or i,r_center,f (1D)
- ``observables.csv``      t,mean_size,size_std,internalization_ratio
                           or t,camp_internal,camp_membrane,camp_total
- ``moments_vs_ode.csv``   t,H0_scheme,H0_ode,relerr_H0,...
- ``convergence.json``     {levels: [{I,h,norms:{...}}], slopes: {...}}

``build_spec`` turns input directories into a pure, JSON-able plot
specification; rendering draws only from that spec, so a rerun on the
same files reproduces the identical figure.
"""
from __future__ import annotations

import dataclasses
import glob
import json
import os
import re

import numpy as np


class RecipeError(Exception):
    """Missing file, empty file, or missing column."""


@dataclasses.dataclass(frozen=True)
class FigureRecipe:
    figure_id: str
    inputs: tuple[str, ...]        # file globs looked up in every input dir
    description: str
    log_axes: bool = False


RECIPES: dict[str, FigureRecipe] = {
    "fig1": FigureRecipe("fig1", ("diagnostics.csv",),
                         "zeroth and first moments over time"),
    "fig2": FigureRecipe("fig2", ("moments_vs_ode.csv",),
                         "relative moment error vs the closed moment ODE (constant kernel)"),
    "fig3": FigureRecipe("fig3", ("moments_vs_ode.csv",),
                         "relative moment error vs the closed moment ODE (affine kernel)"),
    "fig4": FigureRecipe("fig4", ("snapshot_t*.csv",),
                         "size/content density snapshots"),
    "fig5": FigureRecipe("fig5", ("convergence.json",),
                         "refinement errors in six norms (pure coagulation)", log_axes=True),
    "fig6": FigureRecipe("fig6", ("convergence.json",),
                         "refinement errors in six norms (full model)", log_axes=True),
    "fig7": FigureRecipe("fig7", ("observables.csv",),
                         "mean endosomal size (with spread) and internalization ratio"),
    "fig8": FigureRecipe("fig8", ("snapshot_t*.csv",),
                         "size-density profiles at selected times (1D runs)"),
    "fig9": FigureRecipe("fig9", ("observables.csv",),
                         "second-messenger quantities: endosomal, membrane, total"),
}


def read_csv_columns(path: str, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    """Read a documented CSV into named float columns (empty cells -> NaN)."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise RecipeError(f"{path}: file is empty")
    header = lines[0].split(",")
    for col in required:
        if col not in header:
            raise RecipeError(f"{path}: missing required column {col!r}")
    if len(lines) < 2:
        raise RecipeError(f"{path}: no data rows")
    raw = np.array([[float(v) if v != "" else np.nan for v in ln.split(",")]
                    for ln in lines[1:]])
    return {name: raw[:, k] for k, name in enumerate(header)}


def _resolve(in_dir: str, pattern: str) -> list[str]:
    hits = sorted(glob.glob(os.path.join(in_dir, pattern)))
    if not hits:
        raise RecipeError(f"{in_dir}: no file matches {pattern!r}")
    return hits


def _label(in_dir: str) -> str:
    return os.path.basename(os.path.normpath(in_dir))


def _snapshot_time(path: str) -> float:
    m = re.search(r"snapshot_t([0-9eE.+-]+)\.csv$", os.path.basename(path))
    if not m:
        raise RecipeError(f"{path}: not a snapshot file")
    return float(m.group(1))


def _series(x, y, label):
    return {"x": [float(v) for v in x], "y": [float(v) for v in y], "label": label}


def _spec_diagnostics(in_dirs):
    panels = [{"title": "compartment count H(1)", "ylabel": "H(1)", "series": []},
              {"title": "first moments", "ylabel": "H(r), H(a)", "series": []}]
    for d in in_dirs:
        cols = read_csv_columns(_resolve(d, "diagnostics.csv")[0],
                                ("t", "H0", "H1r", "H1a"))
        lab = _label(d)
        panels[0]["series"].append(_series(cols["t"], cols["H0"], lab))
        panels[1]["series"].append(_series(cols["t"], cols["H1r"], f"{lab} H(r)"))
        panels[1]["series"].append(_series(cols["t"], cols["H1a"], f"{lab} H(a)"))
    for p in panels:
        p["xlabel"] = "t"
    return panels


def _spec_ode_error(in_dirs):
    panels = [{"title": "order-0 moment, relative error vs closed ODE",
               "ylabel": "relative error", "series": []},
              {"title": "order-1 moments, relative drift",
               "ylabel": "relative error", "series": []}]
    for d in in_dirs:
        cols = read_csv_columns(_resolve(d, "moments_vs_ode.csv")[0],
                                ("t", "relerr_H0", "relerr_H1r", "relerr_H1a"))
        lab = _label(d)
        panels[0]["series"].append(_series(cols["t"], cols["relerr_H0"], lab))
        panels[1]["series"].append(_series(cols["t"], cols["relerr_H1r"], f"{lab} H(r)"))
        panels[1]["series"].append(_series(cols["t"], cols["relerr_H1a"], f"{lab} H(a)"))
    for p in panels:
        p["xlabel"] = "t"
    return panels


def _spec_heatmaps(in_dirs):
    panels = []
    for d in in_dirs:
        for path in _resolve(d, "snapshot_t*.csv"):
            cols = read_csv_columns(path, ("i", "j", "r_center", "a_center", "f"))
            i = cols["i"].astype(int)
            j = cols["j"].astype(int)
            ni, nj = i.max(), j.max()
            grid = np.full((ni, nj), np.nan)
            grid[i - 1, j - 1] = cols["f"]
            rc = np.unique(cols["r_center"])
            ac = np.unique(cols["a_center"])
            panels.append({"title": f"{_label(d)}  t = {_snapshot_time(path):g}",
                           "xlabel": "size r", "ylabel": "content a",
                           "heatmap": {"r": rc.tolist(), "a": ac.tolist(),
                                       "f": grid.tolist()}})
    return panels


def _spec_convergence(in_dirs):
    panels = []
    for d in in_dirs:
        path = _resolve(d, "convergence.json")[0]
        with open(path, "r", encoding="utf-8") as fh:
            rep = json.load(fh)
        if not rep.get("levels"):
            raise RecipeError(f"{path}: missing or empty 'levels'")
        h = [row["h"] for row in rep["levels"]]
        for name in ("n0", "n1r", "n1a", "n2r", "n2a", "n2ra"):
            errs = [row["norms"][name] for row in rep["levels"]]
            slope = rep.get("slopes", {}).get(name)
            title = f"|.|_{name[1:]} " + (f"(slope {slope:.2f})" if slope else "")
            panels.append({"title": title, "xlabel": "h", "ylabel": "error",
                           "series": [_series(h, errs, _label(d))]})
    return panels


def _spec_trafficking(in_dirs):
    panels = [{"title": "mean endosomal size", "ylabel": "size", "series": [],
               "bands": []},
              {"title": "internalization ratio", "ylabel": "ratio", "series": []}]
    for d in in_dirs:
        cols = read_csv_columns(_resolve(d, "observables.csv")[0],
                                ("t", "mean_size", "size_std", "internalization_ratio"))
        lab = _label(d)
        panels[0]["series"].append(_series(cols["t"], cols["mean_size"], lab))
        panels[0]["bands"].append({
            "x": [float(v) for v in cols["t"]],
            "lo": [float(v) for v in cols["mean_size"] - cols["size_std"]],
            "hi": [float(v) for v in cols["mean_size"] + cols["size_std"]],
            "label": lab})
        panels[1]["series"].append(_series(cols["t"], cols["internalization_ratio"], lab))
    for p in panels:
        p["xlabel"] = "t"
    return panels


def _spec_profiles_1d(in_dirs):
    panel = {"title": "size density f(r)", "xlabel": "size r", "ylabel": "f",
             "series": []}
    for d in in_dirs:
        for path in _resolve(d, "snapshot_t*.csv"):
            cols = read_csv_columns(path, ("i", "r_center", "f"))
            if "j" in cols:
                raise RecipeError(f"{path}: expected a 1D snapshot (i,r_center,f)")
            panel["series"].append(_series(cols["r_center"], cols["f"],
                                           f"{_label(d)} t = {_snapshot_time(path):g}"))
    return [panel]


def _spec_signaling(in_dirs):
    names = ("camp_internal", "camp_membrane", "camp_total")
    titles = ("endosomal quantity", "membrane quantity", "total quantity")
    panels = [{"title": t, "xlabel": "t", "ylabel": "quantity", "series": []}
              for t in titles]
    for d in in_dirs:
        cols = read_csv_columns(_resolve(d, "observables.csv")[0], ("t",) + names)
        for panel, name in zip(panels, names):
            panel["series"].append(_series(cols["t"], cols[name], _label(d)))
    return panels


_BUILDERS = {
    "fig1": _spec_diagnostics,
    "fig2": _spec_ode_error,
    "fig3": _spec_ode_error,
    "fig4": _spec_heatmaps,
    "fig5": _spec_convergence,
    "fig6": _spec_convergence,
    "fig7": _spec_trafficking,
    "fig8": _spec_profiles_1d,
    "fig9": _spec_signaling,
}


def build_spec(figure_id: str, in_dirs: list[str]) -> dict:
    """Pure plot specification for one figure from one or more run dirs."""
    if figure_id not in RECIPES:
        raise RecipeError(f"unknown figure id {figure_id!r}; known: "
                          + ", ".join(sorted(RECIPES)))
    if not in_dirs:
        raise RecipeError("at least one input directory is required")
    recipe = RECIPES[figure_id]
    panels = _BUILDERS[figure_id](list(in_dirs))
    if not panels:
        raise RecipeError(f"{figure_id}: nothing to plot")
    return {"figure": figure_id, "description": recipe.description,
            "log_axes": recipe.log_axes, "panels": panels}
