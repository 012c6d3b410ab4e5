"""Rate-function library: Gaussian/power profiles, kernels, and rate sets.

Profiles are immutable callables over numpy arrays.  Each knows how to
serialize itself (``spec_dict``) so scenarios round-trip through config
files, and removal profiles expose analytic inf/sup over the truncated
size range, which the stationarity condition checker consumes.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import InvalidArgumentError, KernelError
from .grid import Grid1D, Grid2D

_SQRT2PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Elementary profiles

@dataclasses.dataclass(frozen=True)
class GaussianDensity:
    """Gaussian density: x -> exp(-((x-mu)/sigma)^2 / 2) / (sqrt(2 pi) sigma)."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidArgumentError(f"sigma must be positive, got {self.sigma}")

    def __call__(self, x):
        z = (np.asarray(x, dtype=float) - self.mu) / self.sigma
        return np.exp(-0.5 * z * z) / (_SQRT2PI * self.sigma)


@dataclasses.dataclass(frozen=True)
class PowerProfile:
    """Surface-over-volume profile: x -> ((X+e-x)/(X+e))^(1/3) * (x/X)^(2/3).

    Clamped to 0 outside [0, xbar+eps], where the raw formula would take a
    negative base to a fractional power.
    """

    xbar: float
    eps: float = 0.0

    def __post_init__(self):
        if not self.xbar > 0:
            raise InvalidArgumentError(f"xbar must be positive, got {self.xbar}")
        if self.eps < 0:
            raise InvalidArgumentError(f"eps must be nonnegative, got {self.eps}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        top = self.xbar + self.eps
        inside = (x >= 0.0) & (x <= top)
        xs = np.where(inside, x, 0.0)
        val = np.cbrt((top - xs) / top) * np.cbrt((xs / self.xbar) ** 2)
        return np.where(inside, val, 0.0)

    def max_on(self, hi: float) -> float:
        """Supremum over [0, hi]; the profile peaks at x = 2(xbar+eps)/3."""
        top = self.xbar + self.eps
        x_star = min(2.0 * top / 3.0, hi, top)
        return float(self(x_star))


def eval_gaussian(p: GaussianDensity, x: float) -> float:
    return float(p(x))


def eval_power_profile(p: PowerProfile, x: float) -> float:
    return float(p(x))


# ---------------------------------------------------------------------------
# Removal / recycling profiles (functions of (r, a); all paper forms are r-only)

class RateProfile:
    """Interface: vectorized __call__(r, a) plus bounds over the size range."""

    name = "abstract"

    def __call__(self, r, a):  # pragma: no cover - interface
        raise NotImplementedError

    def bounds_on(self, R: float) -> tuple[float, float]:
        """(inf, sup) over [0, R] x content range; sampled fallback."""
        r = np.linspace(0.0, R, 4097)
        v = self(r, np.zeros_like(r))
        return float(np.min(v)), float(np.max(v))

    def spec_dict(self) -> dict:  # pragma: no cover - interface
        raise NotImplementedError


@dataclasses.dataclass(frozen=True)
class ZeroRate(RateProfile):
    name = "zero"

    def __call__(self, r, a):
        return np.zeros(np.broadcast(r, a).shape)

    def bounds_on(self, R):
        return 0.0, 0.0

    def spec_dict(self):
        return {"profile": "zero"}


@dataclasses.dataclass(frozen=True)
class ConstantRate(RateProfile):
    value: float
    name = "constant"

    def __call__(self, r, a):
        return np.full(np.broadcast(r, a).shape, self.value)

    def bounds_on(self, R):
        return self.value, self.value

    def spec_dict(self):
        return {"profile": "constant", "value": self.value}


@dataclasses.dataclass(frozen=True)
class QuarticAbove(RateProfile):
    """floor + coef * ((r - r0)/width)^4 on r > r0; floor elsewhere."""

    floor: float
    coef: float
    r0: float
    width: float
    name = "quartic_above"

    def __call__(self, r, a):
        r = np.asarray(r, dtype=float)
        z = (r - self.r0) / self.width
        val = self.floor + np.where(r > self.r0, self.coef * z ** 4, 0.0)
        return np.broadcast_to(val, np.broadcast(r, np.asarray(a)).shape).copy()

    def bounds_on(self, R):
        hi = self.floor
        if R > self.r0:
            hi += self.coef * ((R - self.r0) / self.width) ** 4
        return self.floor, hi

    def spec_dict(self):
        return {"profile": "quartic_above", "floor": self.floor, "coef": self.coef,
                "r0": self.r0, "width": self.width}


@dataclasses.dataclass(frozen=True)
class ScaledPowerRate(RateProfile):
    """scale * P_r(xbar, eps)."""

    scale: float
    xbar: float
    eps: float = 0.0
    name = "power"

    def _p(self):
        return PowerProfile(self.xbar, self.eps)

    def __call__(self, r, a):
        val = self.scale * self._p()(r)
        return np.broadcast_to(val, np.broadcast(np.asarray(r), np.asarray(a)).shape).copy()

    def bounds_on(self, R):
        return 0.0, self.scale * self._p().max_on(R)

    def spec_dict(self):
        return {"profile": "power", "scale": self.scale, "xbar": self.xbar, "eps": self.eps}


@dataclasses.dataclass(frozen=True)
class PowerBelowQuarticAbove(RateProfile):
    """pscale*P_r(xbar,eps) on r <= r0, plus coef*((r-r0)/width)^4 on r > r0."""

    pscale: float
    xbar: float
    eps: float
    r0: float
    coef: float
    width: float
    name = "power_below_quartic_above"

    def __call__(self, r, a):
        r = np.asarray(r, dtype=float)
        p = PowerProfile(self.xbar, self.eps)
        z = (r - self.r0) / self.width
        val = np.where(r <= self.r0, self.pscale * p(r), self.coef * z ** 4)
        return np.broadcast_to(val, np.broadcast(r, np.asarray(a)).shape).copy()

    def bounds_on(self, R):
        p = PowerProfile(self.xbar, self.eps)
        lo = 0.0
        hi = self.pscale * p.max_on(min(R, self.r0))
        if R > self.r0:
            hi = max(hi, self.coef * ((R - self.r0) / self.width) ** 4)
        return lo, hi

    def spec_dict(self):
        return {"profile": "power_below_quartic_above", "pscale": self.pscale,
                "xbar": self.xbar, "eps": self.eps, "r0": self.r0,
                "coef": self.coef, "width": self.width}


# ---------------------------------------------------------------------------
# Endocytosis source profiles alpha(r, a, M)

class AlphaProfile:
    """Interface: vectorized __call__(r, a, M); linear_in_M enables caching."""

    linear_in_M = True

    def __call__(self, r, a, M):  # pragma: no cover - interface
        raise NotImplementedError

    def spec_dict(self) -> dict:  # pragma: no cover - interface
        raise NotImplementedError


@dataclasses.dataclass(frozen=True)
class ZeroAlpha(AlphaProfile):
    def __call__(self, r, a, M):
        return np.zeros(np.broadcast(r, a).shape)

    def spec_dict(self):
        return {"profile": "zero"}


@dataclasses.dataclass(frozen=True)
class Gaussian1DAlpha(AlphaProfile):
    """M * scale * N_r(mu, sigma); the source of the single-variable model."""

    scale: float
    mu: float
    sigma: float

    def __call__(self, r, a, M):
        val = M * self.scale * GaussianDensity(self.mu, self.sigma)(r)
        return np.broadcast_to(val, np.broadcast(np.asarray(r), np.asarray(a)).shape).copy()

    def spec_dict(self):
        return {"profile": "gaussian1d", "scale": self.scale, "mu": self.mu,
                "sigma": self.sigma}


@dataclasses.dataclass(frozen=True)
class ProductMixtureAlpha(AlphaProfile):
    """M * scale * sum_k w_k N_r(mu_r, s_r) N_a(mu_a, s_a)."""

    scale: float
    terms: tuple[tuple[float, float, float, float, float], ...]  # (w, mu_r, s_r, mu_a, s_a)

    def __call__(self, r, a, M):
        acc = 0.0
        for w, mur, sr, mua, sa in self.terms:
            acc = acc + w * GaussianDensity(mur, sr)(r) * GaussianDensity(mua, sa)(a)
        return M * self.scale * acc

    def spec_dict(self):
        d = {"profile": "gauss_mixture", "scale": self.scale}
        for k, (w, mur, sr, mua, sa) in enumerate(self.terms, start=1):
            d[f"term{k}"] = {"w": w, "mu_r": mur, "sigma_r": sr, "mu_a": mua, "sigma_a": sa}
        return d


@dataclasses.dataclass(frozen=True)
class SizeCoupledAlpha(AlphaProfile):
    """abar * N_r(mu_r, s_r) * N_a(r, s_a) * M: content centered on the size."""

    abar: float
    mu_r: float
    sigma_r: float
    sigma_a: float

    def __call__(self, r, a, M):
        r = np.asarray(r, dtype=float)
        a = np.asarray(a, dtype=float)
        nr = GaussianDensity(self.mu_r, self.sigma_r)(r)
        za = (a - r) / self.sigma_a
        na = np.exp(-0.5 * za * za) / (_SQRT2PI * self.sigma_a)
        return self.abar * M * nr * na

    def spec_dict(self):
        return {"profile": "size_coupled", "abar": self.abar, "mu_r": self.mu_r,
                "sigma_r": self.sigma_r, "sigma_a": self.sigma_a}


@dataclasses.dataclass(frozen=True)
class ContentGaussianAlpha(AlphaProfile):
    """scale * N_r(mu_r, s_r) * N_a(mu_a, s_a) * M."""

    scale: float
    mu_r: float
    sigma_r: float
    mu_a: float
    sigma_a: float

    def __call__(self, r, a, M):
        return (M * self.scale * GaussianDensity(self.mu_r, self.sigma_r)(r)
                * GaussianDensity(self.mu_a, self.sigma_a)(a))

    def spec_dict(self):
        return {"profile": "content_gaussian", "scale": self.scale,
                "mu_r": self.mu_r, "sigma_r": self.sigma_r,
                "mu_a": self.mu_a, "sigma_a": self.sigma_a}


# ---------------------------------------------------------------------------
# Content-reaction speed V(r, a) and membrane flux J_M(M)

class SpeedProfile:
    def __call__(self, r, a):  # pragma: no cover - interface
        raise NotImplementedError

    def spec_dict(self) -> dict:  # pragma: no cover - interface
        raise NotImplementedError


@dataclasses.dataclass(frozen=True)
class ZeroSpeed(SpeedProfile):
    def __call__(self, r, a):
        return np.zeros(np.broadcast(r, a).shape)

    def spec_dict(self):
        return {"profile": "zero"}


@dataclasses.dataclass(frozen=True)
class TwoRateSaturatingSpeed(SpeedProfile):
    """(v_s 1{eps<=r<=rbar} + v_l 1{r>rbar}) * (1 - a/(p r)).

    Production saturates at content a = p*r; below the size cutoff eps the
    speed is zero (also guards the 1/r singularity).
    """

    v_s: float
    v_l: float
    p: float
    rbar: float
    eps_r: float

    def __call__(self, r, a):
        r = np.asarray(r, dtype=float)
        a = np.asarray(a, dtype=float)
        rate = np.where(r > self.rbar, self.v_l,
                        np.where(r >= self.eps_r, self.v_s, 0.0))
        rsafe = np.where(r >= self.eps_r, r, 1.0)
        val = rate * (1.0 - a / (self.p * rsafe))
        return np.where(r >= self.eps_r, val, 0.0)

    def spec_dict(self):
        return {"profile": "two_rate_saturating", "v_s": self.v_s, "v_l": self.v_l,
                "p": self.p, "rbar": self.rbar, "eps_r": self.eps_r}


class MembraneFlux:
    def __call__(self, M):  # pragma: no cover - interface
        raise NotImplementedError

    def spec_dict(self) -> dict:  # pragma: no cover - interface
        raise NotImplementedError


@dataclasses.dataclass(frozen=True)
class ZeroFlux(MembraneFlux):
    def __call__(self, M):
        return 0.0

    def spec_dict(self):
        return {"profile": "zero"}


@dataclasses.dataclass(frozen=True)
class RelaxationFlux(MembraneFlux):
    """v_M * (Mbar - M) / Mbar: constant production, linear saturation."""

    v_M: float
    Mbar: float

    def __call__(self, M):
        return self.v_M * (self.Mbar - M) / self.Mbar

    def spec_dict(self):
        return {"profile": "relaxation", "v_M": self.v_M, "Mbar": self.Mbar}


# ---------------------------------------------------------------------------
# Coagulation kernels

class KernelForm:
    def __call__(self, r, rp):  # pragma: no cover - interface
        raise NotImplementedError

    def sup_on(self, R: float) -> float:
        raise NotImplementedError

    def spec_dict(self) -> dict:
        raise NotImplementedError


@dataclasses.dataclass(frozen=True)
class ConstantKernel(KernelForm):
    K0: float

    def __call__(self, r, rp):
        return np.full(np.broadcast(r, rp).shape, self.K0)

    def sup_on(self, R):
        return self.K0

    def spec_dict(self):
        return {"form": "constant", "K0": self.K0}


@dataclasses.dataclass(frozen=True)
class AffineKernel(KernelForm):
    """K0 + K1 * (r + r')."""

    K0: float
    K1: float

    def __call__(self, r, rp):
        return self.K0 + self.K1 * (np.asarray(r, dtype=float) + np.asarray(rp, dtype=float))

    def sup_on(self, R):
        return self.K0 + 2.0 * self.K1 * R if self.K1 >= 0 else self.K0

    def spec_dict(self):
        return {"form": "affine", "K0": self.K0, "K1": self.K1}


@dataclasses.dataclass(frozen=True)
class CustomKernel(KernelForm):
    fn: object

    def __call__(self, r, rp):
        return np.asarray(self.fn(r, rp), dtype=float)

    def sup_on(self, R):
        # No analytic sup for arbitrary forms: dense sampling of [0, R]^2.
        x = np.linspace(0.0, R, 257)
        return float(np.max(self(x[:, None], x[None, :])))

    def spec_dict(self):
        return {"form": "custom"}


@dataclasses.dataclass(frozen=True)
class Kernel:
    """Kernel form plus its cell-center table and sup over the truncated box."""

    form: KernelForm
    table: np.ndarray  # (I_r, I_r), entries form(r_k, r_k')
    kappa_inf: float


def build_kernel_table(form: KernelForm, grid: Grid2D | Grid1D) -> Kernel:
    """Tabulate the kernel at size-cell centers and record its sup.

    Center evaluation keeps the table exactly symmetric for the constant
    and affine forms.  A negative table entry rejects the kernel.
    """
    rc = grid.r_centers
    table = np.asarray(form(rc[:, None], rc[None, :]), dtype=float)
    table = np.broadcast_to(table, (grid.I_r, grid.I_r)).copy()
    if np.any(table < 0):
        bad = np.argwhere(table < 0)[0]
        raise KernelError(
            f"kernel is negative at cell pair ({bad[0] + 1}, {bad[1] + 1})")
    kappa_inf = max(float(form.sup_on(grid.R)), float(table.max(initial=0.0)))
    table.flags.writeable = False
    return Kernel(form, table, kappa_inf)


# ---------------------------------------------------------------------------
# Bound rate sets

@dataclasses.dataclass(frozen=True)
class RateSet:
    """All rate functions of one model, plus the bounds the stationarity
    theory needs: gamma0 = inf gamma, gamma_inf = sup gamma, and the
    discrete L1 mass of alpha at M = 1 on the scenario grid (computed with
    the same quadrature as the scheme, so the condition checker and the
    stepper agree on one value)."""

    alpha: AlphaProfile
    gamma: RateProfile
    lam: RateProfile
    V: SpeedProfile
    J_M: MembraneFlux
    gamma0: float
    gamma_inf: float
    alpha_L1: float
    alpha_linear_in_M: bool

    def removal_bounds(self, R: float) -> tuple[float, float]:
        """(inf, sup) of gamma + lambda over [0, R]; used for the solver K."""
        g0, gi = self.gamma.bounds_on(R)
        l0, li = self.lam.bounds_on(R)
        return g0 + l0, gi + li


def bind_rates(alpha: AlphaProfile, gamma: RateProfile, lam: RateProfile,
               V: SpeedProfile, J_M: MembraneFlux,
               grid: Grid2D | Grid1D, quadrature: str = "midpoint") -> RateSet:
    """Attach analytic bounds and the discrete ``alpha_L1`` to the profiles."""
    from .grid import cell_integrals, cell_integrals_1d

    if isinstance(grid, Grid1D):
        a_ints = cell_integrals_1d(lambda r: alpha(r, 0.0, 1.0), grid, quadrature)
    else:
        a_ints = cell_integrals(lambda r, a: alpha(r, a, 1.0), grid, quadrature)
    g0, gi = gamma.bounds_on(grid.R)
    return RateSet(alpha, gamma, lam, V, J_M,
                   gamma0=g0, gamma_inf=gi,
                   alpha_L1=float(a_ints.sum()),
                   alpha_linear_in_M=alpha.linear_in_M)


def scenario_rates(name: str):
    """(RateSet, Kernel) of a built-in scenario, bound to its own grid."""
    from . import scenarios

    sc = scenarios.load_scenario(name)
    resolved = scenarios.resolve(sc)
    return resolved.rates, resolved.kernel
