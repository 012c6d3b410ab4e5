"""Discrete coagulation operators.

The 2D cell operator is

    Q_{i,j} = dr*da * [ 1/2 sum_{k<=i} sum_{m<=j} kappa_{k,i-k+1} f_{k,m} f_{i-k+1,j-m+1}
                        - f_{i,j} sum_{k<=I_r-i+1} sum_{m<=I_a-j+1} kappa_{i,k} f_{k,m} ]

(1-based indices).  The gain convolution pairs cells so that left-edge
coordinates add exactly on a regular mesh, which is what makes the
discrete first moments (left-edge weighted) conserved to rounding.

Cost: the loss factor is assembled from per-row prefix sums in
O(I_r^2 I_a), the gain stays the O(I_r^2 I_a^2) convolution.  Summation
order is fixed (ascending k, then m) so results do not depend on how the
work is scheduled; a compensated (Kahan) accumulation variant is
available for the gain sums.

The 1D operator is provided both in cell form (Q_i) and in conservative
flux form acting on g = r*f: edge fluxes

    J_{i+1/2} = dr^2 * sum_{k<=i} sum_{k'=i-k+2}^{I_r-k+1} r_{k-1/2} kappa_{k,k'} f_k f_{k'}

telescope to -(J_{i+1/2} - J_{i-1/2})/dr = r_{i-1/2} Q_i, with
J_{1/2} = J_{I_r+1/2} = 0 structurally, so the flux form conserves the
discrete total of g by construction.
"""
from __future__ import annotations

import dataclasses
import os

import numpy as np

from .errors import InvalidArgumentError, NumericsError
from .grid import Field1D, Field2D, Grid1D
from .rates import Kernel

_NUMBA_DISABLED = os.environ.get("ENDOSIM_DISABLE_NUMBA", "").lower() in {"1", "true", "yes", "on"}

try:  # pragma: no cover - import guard
    if _NUMBA_DISABLED:
        raise ImportError("numba disabled by ENDOSIM_DISABLE_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def deco(fn):
            return fn
        if args and callable(args[0]):
            return args[0]
        return deco


@njit(cache=True)
def _coag2d_core(f, kap, dr, da, out):  # pragma: no cover - jit
    I_r, I_a = f.shape
    cum = np.zeros((I_r, I_a + 1))
    for k in range(I_r):
        s = 0.0
        for m in range(I_a):
            s += f[k, m]
            cum[k, m + 1] = s
    dvec = np.zeros(I_a + 1)
    gvec = np.zeros(I_a)
    scale = dr * da
    for i in range(I_r):
        for c in range(I_a + 1):
            dvec[c] = 0.0
        for k in range(I_r - i):
            w = kap[i, k]
            for c in range(1, I_a + 1):
                dvec[c] += w * cum[k, c]
        for j in range(I_a):
            gvec[j] = 0.0
        for k in range(i + 1):
            w = kap[k, i - k]
            for j in range(I_a):
                acc = 0.0
                for m in range(j + 1):
                    acc += f[k, m] * f[i - k, j - m]
                gvec[j] += w * acc
        for j in range(I_a):
            out[i, j] = scale * (0.5 * gvec[j] - f[i, j] * dvec[I_a - j])


@njit(cache=True)
def _coag2d_core_kahan(f, kap, dr, da, out):  # pragma: no cover - jit
    I_r, I_a = f.shape
    cum = np.zeros((I_r, I_a + 1))
    for k in range(I_r):
        s = 0.0
        c = 0.0
        for m in range(I_a):
            y = f[k, m] - c
            t = s + y
            c = (t - s) - y
            s = t
            cum[k, m + 1] = s
    dvec = np.zeros(I_a + 1)
    derr = np.zeros(I_a + 1)
    gvec = np.zeros(I_a)
    gerr = np.zeros(I_a)
    scale = dr * da
    for i in range(I_r):
        for cidx in range(I_a + 1):
            dvec[cidx] = 0.0
            derr[cidx] = 0.0
        for k in range(I_r - i):
            w = kap[i, k]
            for cidx in range(1, I_a + 1):
                y = w * cum[k, cidx] - derr[cidx]
                t = dvec[cidx] + y
                derr[cidx] = (t - dvec[cidx]) - y
                dvec[cidx] = t
        for j in range(I_a):
            gvec[j] = 0.0
            gerr[j] = 0.0
        for k in range(i + 1):
            w = kap[k, i - k]
            for j in range(I_a):
                acc = 0.0
                err = 0.0
                for m in range(j + 1):
                    y = f[k, m] * f[i - k, j - m] - err
                    t = acc + y
                    err = (t - acc) - y
                    acc = t
                y = w * acc - gerr[j]
                t = gvec[j] + y
                gerr[j] = (t - gvec[j]) - y
                gvec[j] = t
        for j in range(I_a):
            out[i, j] = scale * (0.5 * gvec[j] - f[i, j] * dvec[I_a - j])


def _coag2d_numpy(f, kap, dr, da, out):
    """Vectorized fallback with the same pairing; one python loop over i."""
    I_r, I_a = f.shape
    cum = np.concatenate([np.zeros((I_r, 1)), np.cumsum(f, axis=1)], axis=1)
    for i in range(I_r):
        n_loss = I_r - i
        dvec = kap[i, :n_loss] @ cum[:n_loss, :]   # dvec[c] = loss prefix at depth c
        gain = np.zeros(I_a)
        for k in range(i + 1):
            conv = np.convolve(f[k], f[i - k])[:I_a]
            gain += kap[k, i - k] * conv
        out[i, :] = dr * da * (0.5 * gain - f[i, :] * dvec[np.arange(I_a, 0, -1)])
    return out


@njit(cache=True)
def _coag1d_q_core(f, kap, dr, q):  # pragma: no cover - jit
    n = f.shape[0]
    for i in range(n):
        gain = 0.0
        for k in range(i + 1):
            gain += kap[k, i - k] * f[k] * f[i - k]
        loss = 0.0
        for k in range(n - i):
            loss += kap[i, k] * f[k]
        q[i] = dr * (0.5 * gain - f[i] * loss)


@njit(cache=True)
def _coag1d_flux_core(f, kap, dr, redges, J):  # pragma: no cover - jit
    # J[e] approximates the conservative flux at edge r_{e+1/2}, e = 0..n.
    n = f.shape[0]
    S = np.zeros((n, n + 1))
    for k in range(n):
        s = 0.0
        for kp in range(n):
            s += kap[k, kp] * f[kp]
            S[k, kp + 1] = s
    J[0] = 0.0
    for e in range(1, n + 1):
        i = e - 1  # flux above cell i (0-based)
        acc = 0.0
        for k in range(i + 1):
            top = n - k       # 1-based upper limit I_r - k + 1 -> prefix index n - k
            bot = i - k + 1   # 1-based (i - k + 2) - 1 -> prefix index i - k + 1
            if top > bot:
                acc += redges[k] * f[k] * (S[k, top] - S[k, bot])
        J[e] = dr * dr * acc


def _first_nonfinite(values: np.ndarray) -> tuple:
    bad = np.argwhere(~np.isfinite(values))[0]
    return tuple(int(b) + 1 for b in bad)


def _check_finite(values: np.ndarray, what: str):
    if not np.all(np.isfinite(values)):
        cell = _first_nonfinite(values)
        raise NumericsError(f"{what} is not finite at cell {cell}")


@dataclasses.dataclass
class CoagWorkspace:
    """Reusable output buffer for the 2D operator (contents are scratch)."""

    shape: tuple[int, int]
    out: np.ndarray = None

    def __post_init__(self):
        if self.out is None:
            self.out = np.empty(self.shape)
        elif self.out.shape != self.shape:
            raise InvalidArgumentError("workspace does not match grid shape")


def apply_coag_2d(f: Field2D, kernel: Kernel, workspace: CoagWorkspace | None = None,
                  compensated: bool = False) -> Field2D:
    """Apply the discrete 2D coagulation operator; returns a fresh increment field.

    The dr*da prefactor of the scheme is included.  Never aliases the
    input.
    """
    grid = f.grid
    values = f.values
    _check_finite(values, "coagulation input")
    if kernel.table.shape != (grid.I_r, grid.I_r):
        raise InvalidArgumentError(
            f"kernel table {kernel.table.shape} does not match grid I_r={grid.I_r}")
    if workspace is None:
        workspace = CoagWorkspace(grid.shape)
    out = workspace.out
    if HAVE_NUMBA:
        core = _coag2d_core_kahan if compensated else _coag2d_core
        core(values, kernel.table, grid.dr, grid.da, out)
    else:
        _coag2d_numpy(values, kernel.table, grid.dr, grid.da, out)
    return Field2D(grid, out.copy(), density=False)


def coag_q_1d(f: Field1D, kernel: Kernel) -> np.ndarray:
    """Cell form of the 1D operator: Q_i acting on the density f."""
    grid = f.grid
    _check_finite(f.values, "coagulation input")
    q = np.empty(grid.I_r)
    if HAVE_NUMBA:
        _coag1d_q_core(f.values, kernel.table, grid.dr, q)
    else:
        n = grid.I_r
        for i in range(n):
            k = np.arange(i + 1)
            gain = 0.5 * np.dot(kernel.table[k, i - k], f.values[k] * f.values[i - k])
            loss = f.values[i] * np.dot(kernel.table[i, : n - i], f.values[: n - i])
            q[i] = grid.dr * (gain - loss)
    return q


def coag_flux_edges_1d(f: Field1D, kernel: Kernel) -> np.ndarray:
    """Conservative edge fluxes J_{i+1/2}, i = 0..I_r, of the g = r*f form."""
    grid = f.grid
    _check_finite(f.values, "coagulation input")
    J = np.empty(grid.I_r + 1)
    if HAVE_NUMBA:
        _coag1d_flux_core(f.values, kernel.table, grid.dr, grid.r_edges, J)
    else:
        n = grid.I_r
        S = np.concatenate([np.zeros((n, 1)),
                            np.cumsum(kernel.table * f.values[None, :], axis=1)], axis=1)
        J[0] = 0.0
        for e in range(1, n + 1):
            i = e - 1
            k = np.arange(i + 1)
            top = n - k
            bot = i - k + 1
            terms = grid.r_edges[k] * f.values[k] * (S[k, top] - S[k, bot])
            J[e] = grid.dr ** 2 * np.where(top > bot, terms, 0.0).sum()
    return J


def apply_coag_1d_flux(f: Field1D, kernel: Kernel) -> np.ndarray:
    """Per-cell increment of g = r*f from the telescoped flux differences.

    The discrete total sum_i g_i * dr is conserved by this operator alone
    (the boundary fluxes vanish structurally at both ends).
    """
    J = coag_flux_edges_1d(f, kernel)
    return -(J[1:] - J[:-1]) / f.grid.dr
