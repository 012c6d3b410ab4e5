"""Regular 1D/2D meshes, per-cell quadrature, and cell-averaged fields.

Meshes are uniform: the size axis covers [0, R] with I_r cells and the
content axis covers [0, A] with I_a cells.  Formulas in docstrings use
1-based cell indices (i, j) to match the usual finite-volume notation;
arrays are stored 0-based.
"""
from __future__ import annotations

import dataclasses
import re

import numpy as np

from .errors import EvaluationError, InvalidArgumentError

_QUAD_CACHE: dict[str, tuple[np.ndarray, np.ndarray]] = {}


def quadrature_rule(rule: str) -> tuple[np.ndarray, np.ndarray]:
    """Return (offsets, weights) of a per-cell rule on the unit cell.

    Offsets live in [-1/2, 1/2] (fractions of the cell width measured from
    the center) and weights sum to 1.  Supported rules: ``midpoint``,
    ``gauss2`` .. ``gauss64`` (tensorized per axis by the callers).
    """
    try:
        return _QUAD_CACHE[rule]
    except KeyError:
        pass
    if rule == "midpoint":
        nodes, weights = np.zeros(1), np.ones(1)
    else:
        m = re.fullmatch(r"gauss(\d+)", rule)
        if not m:
            raise InvalidArgumentError(f"unknown quadrature rule {rule!r}")
        n = int(m.group(1))
        if not 1 <= n <= 64:
            raise InvalidArgumentError(f"gauss order out of range: {n}")
        x, w = np.polynomial.legendre.leggauss(n)
        nodes, weights = x / 2.0, w / 2.0
    nodes.flags.writeable = False
    weights.flags.writeable = False
    _QUAD_CACHE[rule] = (nodes, weights)
    return nodes, weights


def _axis_edges_centers(length: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(0.0, length, n + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    edges.flags.writeable = False
    centers.flags.writeable = False
    return edges, centers


@dataclasses.dataclass(frozen=True)
class Grid1D:
    """Uniform mesh of [0, R]: edges r_{i-1/2} = (i-1)*dr, centers (i-1/2)*dr."""

    R: float
    I_r: int
    dr: float
    r_edges: np.ndarray
    r_centers: np.ndarray


@dataclasses.dataclass(frozen=True)
class Grid2D:
    """Uniform mesh of [0, R] x [0, A]; cell (i, j) has area dr*da."""

    R: float
    A: float
    I_r: int
    I_a: int
    dr: float
    da: float
    r_edges: np.ndarray
    r_centers: np.ndarray
    a_edges: np.ndarray
    a_centers: np.ndarray

    @property
    def cell_area(self) -> float:
        return self.dr * self.da

    @property
    def shape(self) -> tuple[int, int]:
        return (self.I_r, self.I_a)

    def size_axis(self) -> Grid1D:
        return Grid1D(self.R, self.I_r, self.dr, self.r_edges, self.r_centers)


def make_grid1d(R: float, I_r: int) -> Grid1D:
    if not R > 0:
        raise InvalidArgumentError(f"domain extent must be positive, got R={R}")
    if not (isinstance(I_r, (int, np.integer)) and I_r >= 1):
        raise InvalidArgumentError(f"cell count must be a positive integer, got I_r={I_r}")
    edges, centers = _axis_edges_centers(float(R), int(I_r))
    return Grid1D(float(R), int(I_r), float(R) / int(I_r), edges, centers)


def make_grid2d(R: float, A: float, I_r: int, I_a: int) -> Grid2D:
    for name, val in (("R", R), ("A", A)):
        if not val > 0:
            raise InvalidArgumentError(f"domain extent must be positive, got {name}={val}")
    for name, val in (("I_r", I_r), ("I_a", I_a)):
        if not (isinstance(val, (int, np.integer)) and val >= 1):
            raise InvalidArgumentError(f"cell count must be a positive integer, got {name}={val}")
    r_edges, r_centers = _axis_edges_centers(float(R), int(I_r))
    a_edges, a_centers = _axis_edges_centers(float(A), int(I_a))
    return Grid2D(float(R), float(A), int(I_r), int(I_a),
                  float(R) / int(I_r), float(A) / int(I_a),
                  r_edges, r_centers, a_edges, a_centers)


@dataclasses.dataclass
class Field2D:
    """Cell-averaged values f_{i,j} on a Grid2D.

    ``density=True`` marks fields that must stay (essentially) nonnegative;
    use :meth:`density_violations` to inspect — values are never clamped.
    """

    grid: Grid2D
    values: np.ndarray
    density: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise InvalidArgumentError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}")

    def copy(self) -> "Field2D":
        return Field2D(self.grid, self.values.copy(), self.density)

    def density_violations(self, neg_tol: float = 0.0) -> list[tuple[int, int, float]]:
        """Cells (1-based i, j, value) below -neg_tol, worst first, capped at 20."""
        ii, jj = np.nonzero(self.values < -neg_tol)
        if ii.size == 0:
            return []
        vals = self.values[ii, jj]
        order = np.argsort(vals)[:20]
        return [(int(ii[k]) + 1, int(jj[k]) + 1, float(vals[k])) for k in order]


@dataclasses.dataclass
class Field1D:
    """Cell-averaged values f_i on a Grid1D."""

    grid: Grid1D
    values: np.ndarray
    density: bool = True

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.I_r,):
            raise InvalidArgumentError(
                f"field shape {self.values.shape} does not match grid ({self.grid.I_r},)")

    def copy(self) -> "Field1D":
        return Field1D(self.grid, self.values.copy(), self.density)


@dataclasses.dataclass
class MembraneState:
    """Scalar molecular quantity at the plasma membrane."""

    M: float

    def require_nonnegative(self, step: int | None = None):
        from .errors import NumericsError

        if self.M < 0:
            raise NumericsError(f"membrane quantity became negative: M={self.M}", step=step)


def _first_bad_cell(ok: np.ndarray) -> tuple[int, int]:
    flat = int(np.argmin(ok))
    i, j = np.unravel_index(flat, ok.shape)
    return int(i) + 1, int(j) + 1


def cell_average(g, grid: Grid2D, quadrature: str = "midpoint",
                 row_block: int = 64) -> Field2D:
    """Per-cell mean of g(r, a) under the given quadrature rule.

    ``g`` must accept numpy arrays and broadcast elementwise.  Midpoint is
    exact for functions affine in (r, a); gauss rules handle sharper
    profiles.  Raises :class:`EvaluationError` naming the first cell whose
    quadrature nodes produce a non-finite value.
    """
    offs, wts = quadrature_rule(quadrature)
    nq = offs.size
    rn = grid.r_centers[:, None] + offs[None, :] * grid.dr    # (I_r, nq)
    an = grid.a_centers[:, None] + offs[None, :] * grid.da    # (I_a, nq)
    w2 = (wts[:, None] * wts[None, :]).ravel()                # (nq*nq,)
    out = np.empty(grid.shape)
    for lo in range(0, grid.I_r, row_block):
        hi = min(lo + row_block, grid.I_r)
        rr = rn[lo:hi, :, None, None]                         # (b, nq, 1, 1)
        aa = an[None, None, :, :]                             # (1, 1, I_a, nq)
        vals = np.asarray(g(rr, aa), dtype=float)
        vals = np.broadcast_to(vals, (hi - lo, nq, grid.I_a, nq))
        finite = np.isfinite(vals)
        if not finite.all():
            ok = finite.all(axis=(1, 3))
            i, j = _first_bad_cell(ok)
            raise EvaluationError(
                f"function is not finite at a quadrature node of cell ({i + lo}, {j})")
        vals = vals.transpose(0, 2, 1, 3).reshape(hi - lo, grid.I_a, nq * nq)
        out[lo:hi] = vals @ w2
    return Field2D(grid, out)


def cell_integrals(g, grid: Grid2D, quadrature: str = "midpoint") -> np.ndarray:
    """Per-cell integrals of g over each cell (cell_average times dr*da)."""
    return cell_average(g, grid, quadrature).values * grid.cell_area


def cell_average_1d(g, grid: Grid1D, quadrature: str = "midpoint") -> Field1D:
    """1D analogue of :func:`cell_average`."""
    offs, wts = quadrature_rule(quadrature)
    rn = grid.r_centers[:, None] + offs[None, :] * grid.dr
    vals = np.asarray(g(rn), dtype=float)
    vals = np.broadcast_to(vals, rn.shape)
    finite = np.isfinite(vals)
    if not finite.all():
        i = int(np.argmin(finite.all(axis=1))) + 1
        raise EvaluationError(f"function is not finite at a quadrature node of cell ({i},)")
    return Field1D(grid, vals @ wts)


def cell_integrals_1d(g, grid: Grid1D, quadrature: str = "midpoint") -> np.ndarray:
    return cell_average_1d(g, grid, quadrature).values * grid.dr
