"""Moment diagnostics, the moment-ODE oracle, stationarity tooling, and the
grid-refinement convergence driver.

Two weight conventions coexist on purpose and must not be mixed up:

* discrete moments H(phi) weight cells at their LEFT EDGES
  (phi(r_{i-1/2}, a_{j-1/2})), which is what makes the pure-coagulation
  first moments exactly conserved;
* the six comparison norms weight cells at their CENTERS.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import (InsufficientSignalError, InvalidArgumentError,
                     NonConvergenceError, NumericsError)
from .grid import Field1D, Field2D, Grid1D, Grid2D, make_grid2d
from .rates import Kernel, RateSet, build_kernel_table


# ---------------------------------------------------------------------------
# Moments and norms

@dataclasses.dataclass(frozen=True)
class MomentVector:
    """H(1), H(r), H(a) with left-edge weights."""

    H0: float
    H1r: float
    H1a: float

    def as_tuple(self):
        return (self.H0, self.H1r, self.H1a)


@dataclasses.dataclass(frozen=True)
class NormReport:
    """Center-weighted norms: weights {1, r, a, r^2, a^2, r a} times |g| dr da."""

    n0: float
    n1r: float
    n1a: float
    n2r: float
    n2a: float
    n2ra: float

    def as_dict(self):
        return {"n0": self.n0, "n1r": self.n1r, "n1a": self.n1a,
                "n2r": self.n2r, "n2a": self.n2a, "n2ra": self.n2ra}

    @staticmethod
    def names():
        return ("n0", "n1r", "n1a", "n2r", "n2a", "n2ra")


def moments(f: Field2D) -> MomentVector:
    g = f.grid
    v = f.values
    area = g.cell_area
    re = g.r_edges[:-1][:, None]
    ae = g.a_edges[:-1][None, :]
    return MomentVector(float(v.sum() * area),
                        float((re * v).sum() * area),
                        float((ae * v).sum() * area))


def moments_1d(f: Field1D) -> MomentVector:
    g = f.grid
    return MomentVector(float(f.values.sum() * g.dr),
                        float((g.r_edges[:-1] * f.values).sum() * g.dr),
                        0.0)


def norms(g: Field2D) -> NormReport:
    gr = g.grid
    v = np.abs(g.values)
    area = gr.cell_area
    rc = gr.r_centers[:, None]
    ac = gr.a_centers[None, :]
    return NormReport(float(v.sum() * area),
                      float((rc * v).sum() * area),
                      float((ac * v).sum() * area),
                      float((rc ** 2 * v).sum() * area),
                      float((ac ** 2 * v).sum() * area),
                      float((rc * ac * v).sum() * area))


def norms_1d(f: Field1D) -> NormReport:
    g = f.grid
    v = np.abs(f.values)
    rc = g.r_centers
    return NormReport(float(v.sum() * g.dr),
                      float((rc * v).sum() * g.dr),
                      0.0,
                      float((rc ** 2 * v).sum() * g.dr),
                      0.0,
                      0.0)


def l1_distance_1d(a: np.ndarray, b: np.ndarray, dr: float) -> float:
    return float(np.abs(a - b).sum() * dr)


# ---------------------------------------------------------------------------
# Closed moment ODE for affine kernels (the oracle the scheme is checked against)

def moment_ode_oracle(K0: float, K1: float, H_init: MomentVector,
                      t_grid, substep: float = 1e-3) -> np.ndarray:
    """Integrate dH0/dt = -K0 H0^2 / 2 - K1 H0 H1r (H1r, H1a constant).

    Classical RK4 with substeps of at most ``substep``.  Returns an array of
    shape (len(t_grid), 3).  For K1 = 0 the result is cross-checked against
    the closed form H0(t) = H0(0) / (1 + K0 H0(0) t / 2); disagreement
    signals integrator misuse and raises.
    """
    if K0 < 0 or K1 < 0:
        raise InvalidArgumentError("kernel coefficients must be nonnegative")
    t_grid = np.asarray(t_grid, dtype=float)
    h0, h1r, h1a = H_init.as_tuple()

    def rate(h):
        return -0.5 * K0 * h * h - K1 * h * h1r

    out = np.empty((t_grid.size, 3))
    t = t_grid[0]
    h = h0
    for idx, t_next in enumerate(t_grid):
        span = t_next - t
        if span > 0:
            n_sub = max(1, int(math.ceil(span / substep - 1e-12)))
            dt = span / n_sub
            for _ in range(n_sub):
                k1 = rate(h)
                k2 = rate(h + 0.5 * dt * k1)
                k3 = rate(h + 0.5 * dt * k2)
                k4 = rate(h + dt * k3)
                h = h + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
            t = t_next
        if h < 0:
            raise NumericsError(f"moment ODE produced negative H0 at t={t_next}")
        out[idx] = (h, h1r, h1a)
    if K1 == 0.0 and h0 > 0:
        t_end = t_grid[-1] - t_grid[0]
        closed = h0 / (1.0 + 0.5 * K0 * h0 * t_end)
        if abs(out[-1, 0] - closed) > 1e-9 * max(closed, 1e-300):
            raise NumericsError("moment ODE integrator disagrees with the closed form")
    return out


# ---------------------------------------------------------------------------
# Stationarity condition and fixed-point solver

def check_theorem_condition(rates: RateSet, kernel: Kernel) -> dict:
    """Evaluate the smallness condition 3 kappa_inf ||alpha||_1 <= gamma0^2.

    Returns both candidate decay exponents: the statement-level rate
    gamma0^2 - 3 kappa_inf A and the proof-level rate divided by gamma0
    (the weaker of the two is what the decay probe is held against).
    """
    lhs = 3.0 * kernel.kappa_inf * rates.alpha_L1
    rhs = rates.gamma0 ** 2
    margin = rhs - lhs
    rate_statement = margin if margin > 0 else None
    rate_proof = margin / rates.gamma0 if (margin > 0 and rates.gamma0 > 0) else None
    if kernel.kappa_inf == 0.0 and rates.gamma0 > 0:
        rate_proof = rates.gamma0
    return {
        "holds": bool(lhs <= rhs),
        "lhs": float(lhs),
        "rhs": float(rhs),
        "predicted_rate": rate_proof,
        "rate_statement": rate_statement,
        "rate_proof": rate_proof,
        "kappa_inf": float(kernel.kappa_inf),
        "alpha_L1": float(rates.alpha_L1),
        "gamma0": float(rates.gamma0),
    }


@dataclasses.dataclass(frozen=True)
class StationaryConfig:
    grid: Grid1D
    K: float | None = None      # damping constant; default = gamma_inf + kappa_inf*A/gamma0
    tol: float = 1e-10          # L1 residual tolerance
    max_iter: int = 200_000
    quadrature: str = "midpoint"
    M_const: float = 1.0
    trace: bool = False


@dataclasses.dataclass
class StationaryResult:
    f_inf: Field1D
    iterations: int
    residual: float
    converged: bool
    K: float
    bound: float                    # ||alpha||_1 / gamma0
    contraction_last: float
    trace: list[tuple[float, float]] | None   # (min value, L1 norm) per iterate


def stationary_fixed_point(rates: RateSet, kernel: Kernel,
                           cfg: StationaryConfig) -> StationaryResult:
    """Damped fixed-point iteration f <- f + RHS(f)/K from f = 0.

    RHS is the right-hand side of the 1D scheme itself (coagulation in
    conservative flux form plus source and removal), so a converged result
    is a stationary state of exactly the discretization the time-marcher
    integrates.  Stops when the L1 residual drops below ``tol``.
    """
    import logging

    from .stepper import SimConfig, discretize_1d

    grid = cfg.grid
    disc = discretize_1d(rates, kernel, grid,
                         SimConfig(dt=1.0, T=0.0, quadrature=cfg.quadrature,
                                   M_const=cfg.M_const))
    check = check_theorem_condition(rates, kernel)
    if not check["holds"]:
        logging.getLogger(__name__).warning(
            "stationarity condition does not hold (lhs=%.4g > rhs=%.4g); attempting anyway",
            check["lhs"], check["rhs"])

    rem_lo, rem_hi = rates.removal_bounds(grid.R)
    gamma0 = max(rates.gamma0, rem_lo)
    if gamma0 <= 0:
        raise InvalidArgumentError("stationary solver needs inf gamma > 0")
    A = disc.alpha_mass()
    K_min = rem_hi + kernel.kappa_inf * A / gamma0
    K = cfg.K if cfg.K is not None else K_min
    if K < K_min * (1 - 1e-12):
        raise InvalidArgumentError(
            f"damping constant K={K} below gamma_inf + kappa_inf*A/gamma0 = {K_min}")

    bound = A / gamma0
    f = np.zeros(grid.I_r)
    dr = grid.dr
    trace = [] if cfg.trace else None
    prev_diff = None
    contraction = math.nan
    for it in range(1, cfg.max_iter + 1):
        rhs = disc.rhs_f(f)
        f_next = f + rhs / K
        diff = float(np.abs(f_next - f).sum() * dr)
        if prev_diff is not None and prev_diff > 0:
            contraction = diff / prev_diff
        prev_diff = diff
        f = f_next
        if trace is not None:
            trace.append((float(f.min()), float(np.abs(f).sum() * dr)))
        residual = K * diff          # = L1 of RHS at the previous iterate
        if residual < cfg.tol:
            residual = float(np.abs(disc.rhs_f(f)).sum() * dr)
            return StationaryResult(Field1D(grid, f), it, residual, True, K,
                                    bound, contraction, trace)
    raise NonConvergenceError(
        f"no convergence after {cfg.max_iter} iterations "
        f"(last residual {K * prev_diff:.3e}, contraction {contraction:.6f})",
        iterations=cfg.max_iter, residual=K * prev_diff, contraction=contraction)


# ---------------------------------------------------------------------------
# Exponential decay probe

def fit_exponential_rate(times, distances, floor: float = 0.0) -> dict:
    """Least-squares decay rate of log(distance) over the final two thirds.

    Samples at or below ``floor`` are excluded before windowing.  Returns
    the fitted rate (positive = decay) and the window actually used.
    """
    times = np.asarray(times, dtype=float)
    distances = np.asarray(distances, dtype=float)
    keep = distances > floor
    if not np.any(keep):
        raise InsufficientSignalError("all distances are below the noise floor")
    t = times[keep]
    d = distances[keep]
    k0 = t.size // 3
    t, d = t[k0:], d[k0:]
    if t.size < 2:
        raise InsufficientSignalError("not enough samples above the noise floor to fit")
    slope = np.polyfit(t, np.log(d), 1)[0]
    return {"fitted_rate": float(-slope), "samples_used": int(t.size),
            "t_window": (float(t[0]), float(t[-1])), "floor": float(floor)}


def decay_rate_probe(trajectory, f_inf: Field1D, condition: dict | None = None) -> dict:
    """Fit the decay rate of ||f(t) - f_inf||_0 along a 1D trajectory.

    Distances below 100 * machine epsilon * ||f_inf||_0 are dropped; if all
    samples are dropped this raises.  When ``condition`` (a
    check_theorem_condition report) is given, the fit is compared to the
    weaker predicted rate.
    """
    if trajectory.history is None:
        raise InvalidArgumentError("decay probe needs a 1D trajectory with history")
    dr = f_inf.grid.dr
    ref = f_inf.values
    dists = np.array([l1_distance_1d(fv, ref, dr) for fv in trajectory.history])
    floor = 100.0 * np.finfo(float).eps * float(np.abs(ref).sum() * dr)
    report = fit_exponential_rate(trajectory.times, dists, floor)
    report["n_samples_total"] = int(dists.size)
    if condition is not None:
        cands = [c for c in (condition.get("rate_statement"), condition.get("rate_proof"))
                 if c is not None]
        report["predicted_rate"] = min(cands) if cands else None
        report["rate_statement"] = condition.get("rate_statement")
        report["rate_proof"] = condition.get("rate_proof")
    return report


# ---------------------------------------------------------------------------
# Grid-refinement convergence study

def _block_mean(arr: np.ndarray, factor: int) -> np.ndarray:
    n0, n1 = arr.shape
    return arr.reshape(n0 // factor, factor, n1 // factor, factor).mean(axis=(1, 3))


def _block_sum(arr: np.ndarray, factor: int) -> np.ndarray:
    n0, n1 = arr.shape
    return arr.reshape(n0 // factor, factor, n1 // factor, factor).sum(axis=(1, 3))


def _study_euler_step(R, I, f0_vals, A1, aA1_total, G, L, aL, kernel_form,
                      V, J_M, alpha, membrane_enabled, M0, dt, quadrature):
    """One Euler step of the scheme from prebuilt cell tables (picklable)."""
    from .stepper import Discrete2D, edge_velocities

    grid = make_grid2d(R, R, I, I)
    kern = build_kernel_table(kernel_form, grid)
    disc = Discrete2D(grid, kern, A1, alpha, quadrature, G, L,
                      edge_velocities(V, grid), J_M,
                      membrane_enabled=membrane_enabled,
                      aA1_total=aA1_total, aL=aL)
    df, _ = disc.increments(f0_vals, M0)
    return f0_vals + dt * df


def _study_level(payload):
    (R, I_l, f0_l, A1_l, aA1_total, G_l, L_l, aL_l, kernel_form, V, J_M,
     alpha, membrane_enabled, M0, dt, quadrature, ref_after_l) = payload
    f_l_after = _study_euler_step(R, I_l, f0_l, A1_l, aA1_total, G_l, L_l, aL_l,
                                  kernel_form, V, J_M, alpha, membrane_enabled,
                                  M0, dt, quadrature)
    grid_l = make_grid2d(R, R, I_l, I_l)
    diff = Field2D(grid_l, ref_after_l - f_l_after, density=False)
    return {"I": I_l, "h": grid_l.dr, "norms": norms(diff).as_dict()}


def convergence_study(scenario, dt: float | None = None, base_I: int = 6,
                      levels: int = 6, ref_level: int = 6,
                      quadrature: str = "gauss16", jobs: int = 1) -> dict:
    """One-step self-convergence of the 2D scheme under dyadic refinement.

    Grids use I = base_I * 2^l cells per axis for l = 0..levels-1, with the
    reference at l = ref_level.  Initial data and the alpha/gamma/lambda
    cell integrals are evaluated once on the reference grid (per-cell Gauss
    rule) and aggregated conservatively to the coarse levels, so what the
    comparison isolates is the operator error, not projection noise.  After
    a single Euler step the reference solution is restricted to each level
    by conservative cell aggregation and the six norms of the difference
    are fitted against h in log2-log2 scale.

    Levels are independent; ``jobs > 1`` runs them in a process pool.
    """
    from .scenarios import resolve
    from .grid import cell_average, cell_integrals

    if ref_level < levels:
        raise InvalidArgumentError(
            f"reference level {ref_level} must be at least the number of levels {levels}")
    res = resolve(scenario)
    if scenario.model != "2d":
        raise InvalidArgumentError("convergence study runs on 2D scenarios")
    if abs(scenario.R - scenario.A) > 1e-12:
        raise InvalidArgumentError("convergence study needs a square domain (R = A)")
    if not res.rates.alpha_linear_in_M:
        raise InvalidArgumentError("convergence study needs alpha linear in M")
    dt = scenario.dt if dt is None else dt
    R = scenario.R
    rates = res.rates

    ref_I = base_I * (2 ** ref_level)
    g_ref = make_grid2d(R, R, ref_I, ref_I)
    f0_ref = cell_average(res.f0, g_ref, quadrature).values
    A1_ref = cell_integrals(lambda r, a: rates.alpha(r, a, 1.0), g_ref, quadrature)
    aA1_total = float(cell_integrals(lambda r, a: a * rates.alpha(r, a, 1.0),
                                     g_ref, quadrature).sum())
    G_ref = cell_integrals(lambda r, a: rates.gamma(r, a), g_ref, quadrature)
    L_ref = cell_integrals(lambda r, a: rates.lam(r, a), g_ref, quadrature)
    aL_ref = cell_integrals(lambda r, a: a * rates.lam(r, a), g_ref, quadrature)

    common = (res.kernel.form, rates.V, rates.J_M, rates.alpha,
              res.cfg.membrane_enabled, res.M0, dt, quadrature)
    f_ref_after = _study_euler_step(R, ref_I, f0_ref, A1_ref, aA1_total,
                                    G_ref, L_ref, aL_ref, *common[:4],
                                    *common[4:])

    payloads = []
    for l in range(levels):
        I_l = base_I * (2 ** l)
        factor = ref_I // I_l
        payloads.append((R, I_l, _block_mean(f0_ref, factor),
                         _block_sum(A1_ref, factor), aA1_total,
                         _block_sum(G_ref, factor), _block_sum(L_ref, factor),
                         _block_sum(aL_ref, factor), *common,
                         _block_mean(f_ref_after, factor)))

    if jobs > 1:
        import concurrent.futures

        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            level_rows = list(pool.map(_study_level, payloads))
    else:
        level_rows = [_study_level(p) for p in payloads]

    slopes = {}
    log_h = np.log2([row["h"] for row in level_rows])
    for name in NormReport.names():
        errs = np.array([row["norms"][name] for row in level_rows])
        if np.all(errs > 0):
            slopes[name] = float(np.polyfit(log_h, np.log2(errs), 1)[0])
        else:
            slopes[name] = None
    return {"scenario": scenario.id, "dt": dt, "base_I": base_I,
            "reference_I": ref_I, "quadrature": quadrature,
            "levels": level_rows, "slopes": slopes}
