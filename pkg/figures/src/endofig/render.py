"""Draw a plot specification to an image file."""
from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .recipes import build_spec  # noqa: E402


def _layout(n: int) -> tuple[int, int]:
    if n <= 1:
        return 1, 1
    ncols = 2 if n <= 4 else 3
    return math.ceil(n / ncols), ncols


def draw(spec: dict, out_path: str) -> None:
    panels = spec["panels"]
    nrows, ncols = _layout(len(panels))
    fig, axes = plt.subplots(nrows, ncols,
                             figsize=(4.6 * ncols, 3.4 * nrows), squeeze=False)
    for ax in axes.ravel()[len(panels):]:
        ax.set_visible(False)
    for ax, panel in zip(axes.ravel(), panels):
        if "heatmap" in panel:
            hm = panel["heatmap"]
            mesh = ax.pcolormesh(np.asarray(hm["r"]), np.asarray(hm["a"]),
                                 np.asarray(hm["f"]).T, shading="nearest")
            fig.colorbar(mesh, ax=ax)
        else:
            for band in panel.get("bands", []):
                ax.fill_between(band["x"], band["lo"], band["hi"], alpha=0.25,
                                linewidth=0)
            for series in panel["series"]:
                ax.plot(series["x"], series["y"], label=series["label"])
            if spec.get("log_axes"):
                ax.set_xscale("log", base=2)
                ax.set_yscale("log", base=2)
            if len(panel["series"]) > 1 or panel["series"][0]["label"]:
                ax.legend(fontsize=8)
        ax.set_title(panel.get("title", ""), fontsize=10)
        ax.set_xlabel(panel.get("xlabel", ""))
        ax.set_ylabel(panel.get("ylabel", ""))
    fig.suptitle(f"{spec['figure']}: {spec['description']}", fontsize=11)
    fig.tight_layout(rect=(0, 0, 1, 0.96))
    os.makedirs(os.path.dirname(os.path.abspath(out_path)), exist_ok=True)
    fig.savefig(out_path, dpi=110)
    plt.close(fig)


def render(figure_id: str, in_dirs: list[str], out_path: str) -> dict:
    """Build the plot spec from the input dirs and write the image.

    Returns the spec; rendering is a pure function of the input files.
    """
    spec = build_spec(figure_id, in_dirs)
    draw(spec, out_path)
    return spec
