"""Explicit Euler integration of the full scheme.

One 2D step advances

    f_{i,j} <- f_{i,j} + dt * [ Q_{i,j}(f,f)
                                - (A_up(W_{i,j+1}, f_{i,j}, f_{i,j+1})
                                   - A_up(W_{i,j}, f_{i,j-1}, f_{i,j})) / da
                                + (Int_a - f_{i,j} Int_l - f_{i,j} Int_g) / (dr da) ]

with ghost cells f_{i,0} = f_{i,I_a+1} = 0 on the content axis, and the
membrane pool

    M <- M + dt * [ J_M(M) - sum_ij a_j Int_a(i,j) + sum_ij f_{i,j} a_j Int_l(i,j) ].

The two membrane exchange integrals are lumped on cell centers so that
endocytosis and recycling move content between M and the center-weighted
content norm of f exactly, for any cell quadrature.

The 1D path integrates the conservative variable g = r f: edge fluxes of
the coagulation operator, a r*alpha source, and first-order removal; f is
reported as g divided by the cell centers.
"""
from __future__ import annotations

import dataclasses
import logging
import math

import numpy as np

from .coagulation import CoagWorkspace, apply_coag_1d_flux, apply_coag_2d
from .errors import InvalidArgumentError, NumericsError
from .grid import (Field1D, Field2D, Grid1D, Grid2D, cell_integrals,
                   cell_integrals_1d)
from .rates import Kernel, RateSet

logger = logging.getLogger(__name__)


def upwind_flux(u: float, f_plus: float, f_minus: float) -> float:
    """u * f_plus for u >= 0, else u * f_minus."""
    return u * f_plus if u >= 0 else u * f_minus


def edge_velocities(V, grid: Grid2D) -> np.ndarray:
    """W[i, j] = mean of V at the two size-edges of cell i, content edge j.

    Shape (I_r, I_a + 1); column j sits on the content edge a_{j-1/2}.
    """
    r_lo = grid.r_edges[:-1][:, None]
    r_hi = grid.r_edges[1:][:, None]
    a_e = grid.a_edges[None, :]
    return 0.5 * (np.asarray(V(r_hi, a_e), dtype=float)
                  + np.asarray(V(r_lo, a_e), dtype=float))


def _transport_from_W(values: np.ndarray, W: np.ndarray, da: float) -> np.ndarray:
    I_r, I_a = values.shape
    padded = np.zeros((I_r, I_a + 2))
    padded[:, 1:-1] = values
    f_lower = padded[:, :-1]   # upwind value for W >= 0 at each edge
    f_upper = padded[:, 1:]
    flux = np.where(W >= 0, W * f_lower, W * f_upper)
    return -(flux[:, 1:] - flux[:, :-1]) / da


def transport_increment(f: Field2D, V, grid: Grid2D | None = None) -> Field2D:
    """Upwind transport increment along the content axis (zero-inflow ghosts)."""
    grid = grid or f.grid
    W = edge_velocities(V, grid)
    return Field2D(grid, _transport_from_W(f.values, W, grid.da), density=False)


# ---------------------------------------------------------------------------
# Simulation configuration and state

@dataclasses.dataclass(frozen=True)
class SimConfig:
    dt: float
    T: float
    snapshot_times: tuple[float, ...] = ()
    quadrature: str = "midpoint"
    negativity: str = "warn"          # warn | abort
    neg_tol: float = 0.0
    membrane_enabled: bool = True
    diag_every: int = 1
    M_const: float = 1.0              # membrane value seen by alpha in the 1D model
    compensated_sums: bool = False

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidArgumentError(f"dt must be positive, got {self.dt}")
        if self.T < 0:
            raise InvalidArgumentError(f"T must be nonnegative, got {self.T}")
        if self.negativity not in ("warn", "abort"):
            raise InvalidArgumentError(f"negativity policy must be warn|abort, got {self.negativity}")
        for t in self.snapshot_times:
            if t < -1e-12 or t > self.T * (1 + 1e-12) + 1e-12:
                raise InvalidArgumentError(f"snapshot time {t} outside [0, T]")
        if self.diag_every < 1:
            raise InvalidArgumentError("diag_every must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.T / self.dt + 1e-9))


@dataclasses.dataclass(frozen=True)
class SimState:
    t: float
    f: Field2D | Field1D
    M: float
    n: int


# ---------------------------------------------------------------------------
# Precomputed per-run tables

@dataclasses.dataclass
class Discrete2D:
    """Cell tables of one 2D run: source/sink integrals and edge velocities.

    ``aA1`` and ``aL`` carry the content-weighted integrals of alpha (at
    M = 1) and lambda that drive the membrane exchange, evaluated with the
    same quadrature as everything else.  Under the midpoint rule they
    reduce to a_j-weighted cell integrals, which makes the endocytosis and
    recycling exchange balance the content norm of f exactly.
    """

    grid: Grid2D
    kernel: Kernel
    A1: np.ndarray | None          # integrals of alpha at M=1 (linear case)
    alpha_raw: object              # profile, for the nonlinear fallback
    quadrature: str
    G: np.ndarray                  # integrals of gamma per cell
    L: np.ndarray                  # integrals of lambda per cell
    W: np.ndarray                  # (I_r, I_a+1) edge velocities
    J_M: object
    membrane_enabled: bool
    aA1_total: float = 0.0         # integral of a*alpha at M=1 over the box
    aL: np.ndarray | None = None   # integrals of a*lambda per cell
    compensated: bool = False
    ws: CoagWorkspace = None

    def __post_init__(self):
        if self.ws is None:
            self.ws = CoagWorkspace(self.grid.shape)
        if self.aL is None:
            self.aL = np.zeros(self.grid.shape)

    def alpha_ints(self, M: float) -> np.ndarray:
        if self.A1 is not None:
            return self.A1 * M
        return cell_integrals(lambda r, a: self.alpha_raw(r, a, M),
                              self.grid, self.quadrature)

    def _alpha_content_flux(self, M: float) -> float:
        if self.A1 is not None:
            return self.aA1_total * M
        return float(cell_integrals(lambda r, a: a * self.alpha_raw(r, a, M),
                                    self.grid, self.quadrature).sum())

    def increments(self, values: np.ndarray, M: float):
        """(df/dt array, dM/dt scalar) for the current state."""
        field = Field2D(self.grid, values, density=False)
        coag = apply_coag_2d(field, self.kernel, self.ws, self.compensated).values
        trans = _transport_from_W(values, self.W, self.grid.da)
        A = self.alpha_ints(M)
        area = self.grid.cell_area
        df = coag
        df += trans
        df += (A - values * (self.L + self.G)) / area
        if self.membrane_enabled:
            dM = (float(self.J_M(M))
                  - self._alpha_content_flux(M)
                  + float((values * self.aL).sum()))
        else:
            dM = 0.0
        return df, dM


def discretize_2d(rates: RateSet, kernel: Kernel, grid: Grid2D, cfg: SimConfig) -> Discrete2D:
    quad = cfg.quadrature
    A1 = None
    aA1_total = 0.0
    if rates.alpha_linear_in_M:
        A1 = cell_integrals(lambda r, a: rates.alpha(r, a, 1.0), grid, quad)
        aA1_total = float(cell_integrals(lambda r, a: a * rates.alpha(r, a, 1.0),
                                         grid, quad).sum())
    G = cell_integrals(lambda r, a: rates.gamma(r, a), grid, quad)
    L = cell_integrals(lambda r, a: rates.lam(r, a), grid, quad)
    aL = cell_integrals(lambda r, a: a * rates.lam(r, a), grid, quad)
    W = edge_velocities(rates.V, grid)
    return Discrete2D(grid, kernel, A1, rates.alpha, quad, G, L, W,
                      rates.J_M, cfg.membrane_enabled, aA1_total, aL,
                      cfg.compensated_sums)


@dataclasses.dataclass
class Discrete1D:
    """Cell tables of the 1D conservative scheme in the g = r f variable."""

    grid: Grid1D
    kernel: Kernel
    ra1: np.ndarray      # cell averages of r*alpha(r, M=1)
    rem: np.ndarray      # cell averages of gamma + lambda
    M_const: float

    def g_increment(self, g: np.ndarray) -> np.ndarray:
        f = Field1D(self.grid, g / self.grid.r_centers, density=False)
        flux_part = apply_coag_1d_flux(f, self.kernel)
        return flux_part + self.ra1 * self.M_const - self.rem * g

    def rhs_f(self, fvals: np.ndarray) -> np.ndarray:
        """df/dt of the scheme, i.e. the g increment divided by cell centers."""
        g = self.grid.r_centers * fvals
        return self.g_increment(g) / self.grid.r_centers

    def alpha_mass(self) -> float:
        """alpha L1 mass as the scheme sees it (through the r*alpha/r source)."""
        return float((self.ra1 * self.M_const / self.grid.r_centers).sum() * self.grid.dr)


def discretize_1d(rates: RateSet, kernel: Kernel, grid: Grid1D, cfg: SimConfig) -> Discrete1D:
    quad = cfg.quadrature
    ra1 = cell_integrals_1d(lambda r: r * rates.alpha(r, 0.0, 1.0), grid, quad) / grid.dr
    rem = (cell_integrals_1d(lambda r: rates.gamma(r, 0.0), grid, quad)
           + cell_integrals_1d(lambda r: rates.lam(r, 0.0), grid, quad)) / grid.dr
    return Discrete1D(grid, kernel, ra1, rem, cfg.M_const)


# ---------------------------------------------------------------------------
# Stepping

def _enforce_state(values: np.ndarray, M: float, neg_tol: float, policy: str,
                   step_idx: int, warnings_sink: list[str] | None):
    if not np.all(np.isfinite(values)) or not math.isfinite(M):
        raise NumericsError(f"non-finite state after step {step_idx}", step=step_idx)
    worst = float(values.min())
    msgs = []
    if worst < -neg_tol:
        msgs.append(f"negative density {worst:.3e} after step {step_idx}")
    if M < 0:
        msgs.append(f"negative membrane quantity {M:.3e} after step {step_idx}")
    for msg in msgs:
        if policy == "abort":
            raise NumericsError(msg, step=step_idx)
        logger.warning(msg)
        if warnings_sink is not None and len(warnings_sink) < 50:
            warnings_sink.append(msg)


def step(state: SimState, rates: RateSet, kernel: Kernel, cfg: SimConfig,
         _disc: Discrete2D | None = None,
         _warnings: list[str] | None = None) -> SimState:
    """One explicit Euler step of the 2D scheme; the input state is unmodified."""
    disc = _disc or discretize_2d(rates, kernel, state.f.grid, cfg)
    values = state.f.values
    df, dM = disc.increments(values, state.M)
    new_values = values + cfg.dt * df
    new_M = state.M + cfg.dt * dM if cfg.membrane_enabled else state.M
    _enforce_state(new_values, new_M, cfg.neg_tol, cfg.negativity, state.n + 1, _warnings)
    return SimState(t=state.t + cfg.dt, f=Field2D(state.f.grid, new_values),
                    M=new_M, n=state.n + 1)


def step_1d(state: SimState, rates: RateSet, kernel: Kernel, cfg: SimConfig,
            _disc: Discrete1D | None = None,
            _warnings: list[str] | None = None) -> SimState:
    """One explicit Euler step of the 1D conservative scheme.

    The state carries f; internally the update runs on g = r f and the new
    f is g/r at cell centers.
    """
    disc = _disc or discretize_1d(rates, kernel, state.f.grid, cfg)
    g = state.f.grid.r_centers * state.f.values
    g_new = g + cfg.dt * disc.g_increment(g)
    f_new = g_new / state.f.grid.r_centers
    _enforce_state(f_new, state.M, cfg.neg_tol, cfg.negativity, state.n + 1, _warnings)
    return SimState(t=state.t + cfg.dt, f=Field1D(state.f.grid, f_new),
                    M=state.M, n=state.n + 1)


# ---------------------------------------------------------------------------
# Run loop with diagnostics

@dataclasses.dataclass
class Trajectory:
    """Sampled diagnostics of one run, plus requested field snapshots."""

    grid: Grid2D | Grid1D
    times: np.ndarray                  # diagnostic sample times
    steps: np.ndarray                  # step index per sample
    moments: np.ndarray                # (k, 3): H0, H1r, H1a (left-edge weights)
    norms: np.ndarray                  # (k, 6): |.|0, 1r, 1a, 2r, 2a, 2ra (centers)
    M: np.ndarray                      # membrane series
    snapshots: dict[float, Field2D | Field1D]
    history: list[np.ndarray] | None   # 1D runs: f values at every sample
    warnings: list[str]
    cfl_advective: float
    cfl_coagulation: float
    M0: float
    final: SimState

    @property
    def H0(self):
        return self.moments[:, 0]


def _snapshot_steps(cfg: SimConfig, n_steps: int) -> dict[int, float]:
    wanted = {0: 0.0}
    for t in cfg.snapshot_times:
        n = int(round(t / cfg.dt))
        if 0 <= n <= n_steps:
            wanted[n] = n * cfg.dt
    return wanted


def run(f0, M0: float, rates: RateSet, kernel: Kernel,
        grid: Grid2D | Grid1D, cfg: SimConfig) -> Trajectory:
    """Integrate from a callable initial density; emit sampled diagnostics.

    ``f0`` is a function (r, a) -> density for 2D grids, (r,) -> density for
    1D grids; it is projected onto the mesh by cell averaging with the
    configured quadrature.  Diagnostics are sampled every ``diag_every``
    steps (always including the first and last step).
    """
    from . import analysis

    if isinstance(grid, Grid1D):
        return _run_1d(f0, rates, kernel, grid, cfg)

    from .grid import cell_average

    field0 = cell_average(f0, grid, cfg.quadrature) if callable(f0) else f0.copy()
    disc = discretize_2d(rates, kernel, grid, cfg)
    warnings: list[str] = []
    n_steps = cfg.n_steps

    cfl_adv = cfg.dt * float(np.max(np.abs(disc.W))) / grid.da if disc.W.size else 0.0
    h0_init = analysis.moments(field0).H0
    cfl_coag = cfg.dt * kernel.kappa_inf * h0_init
    if cfl_adv > 1.0:
        warnings.append(f"advective CFL {cfl_adv:.3g} exceeds 1")
    if cfl_coag > 0.5:
        warnings.append(f"coagulation stiffness proxy {cfl_coag:.3g} exceeds 0.5")
    for w in warnings:
        logger.warning(w)

    state = SimState(t=0.0, f=field0, M=float(M0), n=0)
    snap_at = _snapshot_steps(cfg, n_steps)
    rows, snaps = [], {}

    def record(st: SimState):
        mv = analysis.moments(st.f)
        nr = analysis.norms(st.f)
        rows.append((st.n, st.t, mv.H0, mv.H1r, mv.H1a,
                     nr.n0, nr.n1r, nr.n1a, nr.n2r, nr.n2a, nr.n2ra, st.M))

    record(state)
    if 0 in snap_at:
        snaps[0.0] = state.f.copy()
    for n in range(1, n_steps + 1):
        state = step(state, rates, kernel, cfg, _disc=disc, _warnings=warnings)
        if n % cfg.diag_every == 0 or n == n_steps:
            record(state)
        if n in snap_at:
            snaps[snap_at[n]] = state.f.copy()
    return _pack(grid, rows, snaps, None, warnings, cfl_adv, cfl_coag, M0, state)


def _run_1d(f0, rates: RateSet, kernel: Kernel, grid: Grid1D, cfg: SimConfig) -> Trajectory:
    from . import analysis
    from .grid import cell_average_1d

    if callable(f0):
        f_init = cell_average_1d(f0, grid, cfg.quadrature).values
    else:
        f_init = np.asarray(f0.values, dtype=float).copy()
    disc = discretize_1d(rates, kernel, grid, cfg)
    warnings: list[str] = []
    n_steps = cfg.n_steps
    cfl_coag = cfg.dt * kernel.kappa_inf * float(f_init.sum() * grid.dr)
    if cfl_coag > 0.5:
        warnings.append(f"coagulation stiffness proxy {cfl_coag:.3g} exceeds 0.5")
        logger.warning(warnings[-1])

    g = grid.r_centers * f_init
    n = 0
    snap_at = _snapshot_steps(cfg, n_steps)
    rows, snaps, history = [], {}, []

    def record(gvals, step_idx):
        f = Field1D(grid, gvals / grid.r_centers, density=False)
        mv = analysis.moments_1d(f)
        nr = analysis.norms_1d(f)
        rows.append((step_idx, step_idx * cfg.dt, mv.H0, mv.H1r, mv.H1a,
                     nr.n0, nr.n1r, nr.n1a, nr.n2r, nr.n2a, nr.n2ra, cfg.M_const))
        history.append(f.values)

    record(g, 0)
    if 0 in snap_at:
        snaps[0.0] = Field1D(grid, g / grid.r_centers)
    for n in range(1, n_steps + 1):
        g = g + cfg.dt * disc.g_increment(g)
        if not np.all(np.isfinite(g)):
            raise NumericsError(f"non-finite state after step {n}", step=n)
        if n % cfg.diag_every == 0 or n == n_steps:
            fvals = g / grid.r_centers
            if fvals.min() < -cfg.neg_tol:
                msg = f"negative density {fvals.min():.3e} after step {n}"
                if cfg.negativity == "abort":
                    raise NumericsError(msg, step=n)
                if len(warnings) < 50:
                    warnings.append(msg)
                logger.warning(msg)
            record(g, n)
        if n in snap_at:
            snaps[snap_at[n]] = Field1D(grid, g / grid.r_centers)
    final = SimState(t=n_steps * cfg.dt, f=Field1D(grid, g / grid.r_centers),
                     M=cfg.M_const, n=n_steps)
    return _pack(grid, rows, snaps, history, warnings, 0.0, cfl_coag, cfg.M_const, final)


def _pack(grid, rows, snaps, history, warnings, cfl_adv, cfl_coag, M0, final):
    arr = np.array(rows, dtype=float)
    return Trajectory(
        grid=grid,
        times=arr[:, 1],
        steps=arr[:, 0].astype(int),
        moments=arr[:, 2:5],
        norms=arr[:, 5:11],
        M=arr[:, 11],
        snapshots=snaps,
        history=history,
        warnings=warnings,
        cfl_advective=cfl_adv,
        cfl_coagulation=cfl_coag,
        M0=float(M0),
        final=final,
    )
