"""Scenario registry and config-file ingestion.

Every built-in scenario binds one reference experiment to its grid,
kernel, rate profiles, initial data and run settings.  Scenarios are
plain data (nested spec dicts); :func:`resolve` turns one into live
profile objects, a bound rate set, a tabulated kernel and a SimConfig.

User-defined scenarios load from a flat ``key = value`` text format with
dotted sections (see :func:`config_schema`); built-ins serialize to the
same format and round-trip identically.
"""
from __future__ import annotations

import dataclasses
import logging
import math
import os

import numpy as np

from . import rates as rates_mod
from .errors import ConfigError
from .grid import make_grid1d, make_grid2d
from .rates import (AffineKernel, ConstantKernel, ConstantRate,
                    ContentGaussianAlpha, GaussianDensity, Gaussian1DAlpha,
                    PowerBelowQuarticAbove, ProductMixtureAlpha, QuarticAbove,
                    RelaxationFlux, ScaledPowerRate, SizeCoupledAlpha,
                    TwoRateSaturatingSpeed, ZeroAlpha, ZeroFlux, ZeroRate,
                    ZeroSpeed, bind_rates, build_kernel_table)
from .stepper import SimConfig

logger = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class Scenario:
    """One fully specified experiment; all profile fields are spec dicts."""

    id: str
    model: str                     # "1d" | "2d"
    family: str                    # pure | general | stationary | trafficking | signaling
    R: float
    A: float | None
    I_r: int
    I_a: int | None
    dt: float
    T: float
    snapshot_times: tuple[float, ...]
    diag_every: int
    quadrature: str
    negativity: str
    neg_tol: float
    membrane_enabled: bool
    M0: float
    M_const: float
    kernel: dict
    alpha: dict
    gamma: dict
    lam: dict
    V: dict
    J_M: dict
    f0: dict
    analysis: tuple[str, ...]
    description: str = ""


@dataclasses.dataclass
class Resolved:
    scenario: Scenario
    grid: object
    rates: rates_mod.RateSet
    kernel: rates_mod.Kernel
    f0: object
    cfg: SimConfig
    M0: float


# ---------------------------------------------------------------------------
# Profile builders (config vocabulary)

def _require(spec: dict, field: str, keys: tuple[str, ...]) -> list:
    missing = [k for k in keys if k not in spec]
    if missing:
        raise ConfigError(f"{field}: missing parameter(s) {', '.join(missing)}")
    return [spec[k] for k in keys]


def _unknown(field: str, name, known) -> ConfigError:
    return ConfigError(f"{field}.profile: unknown profile {name!r} "
                       f"(known: {', '.join(sorted(known))})")


def build_rate_profile(spec: dict, field: str) -> rates_mod.RateProfile:
    known = {"zero", "constant", "power", "quartic_above", "power_below_quartic_above"}
    name = spec.get("profile")
    if name == "zero":
        return ZeroRate()
    if name == "constant":
        (v,) = _require(spec, field, ("value",))
        return ConstantRate(v)
    if name == "power":
        s, xb, e = _require(spec, field, ("scale", "xbar", "eps"))
        return ScaledPowerRate(s, xb, e)
    if name == "quartic_above":
        fl, c, r0, w = _require(spec, field, ("floor", "coef", "r0", "width"))
        return QuarticAbove(fl, c, r0, w)
    if name == "power_below_quartic_above":
        ps, xb, e, r0, c, w = _require(spec, field,
                                       ("pscale", "xbar", "eps", "r0", "coef", "width"))
        return PowerBelowQuarticAbove(ps, xb, e, r0, c, w)
    raise _unknown(field, name, known)


def _mixture_terms(spec: dict, field: str) -> tuple:
    terms = []
    k = 1
    while f"term{k}" in spec:
        t = spec[f"term{k}"]
        w, mur, sr, mua, sa = _require(t, f"{field}.term{k}",
                                       ("w", "mu_r", "sigma_r", "mu_a", "sigma_a"))
        terms.append((w, mur, sr, mua, sa))
        k += 1
    if not terms:
        raise ConfigError(f"{field}: gauss_mixture needs at least term1")
    return tuple(terms)


def build_alpha_profile(spec: dict, field: str = "alpha") -> rates_mod.AlphaProfile:
    known = {"zero", "gaussian1d", "gauss_mixture", "size_coupled", "content_gaussian"}
    name = spec.get("profile")
    if name == "zero":
        return ZeroAlpha()
    if name == "gaussian1d":
        s, mu, sg = _require(spec, field, ("scale", "mu", "sigma"))
        return Gaussian1DAlpha(s, mu, sg)
    if name == "gauss_mixture":
        (s,) = _require(spec, field, ("scale",))
        return ProductMixtureAlpha(s, _mixture_terms(spec, field))
    if name == "size_coupled":
        ab, mur, sr, sa = _require(spec, field, ("abar", "mu_r", "sigma_r", "sigma_a"))
        return SizeCoupledAlpha(ab, mur, sr, sa)
    if name == "content_gaussian":
        s, mur, sr, mua, sa = _require(spec, field,
                                       ("scale", "mu_r", "sigma_r", "mu_a", "sigma_a"))
        return ContentGaussianAlpha(s, mur, sr, mua, sa)
    raise _unknown(field, name, known)


def build_speed_profile(spec: dict, field: str = "V") -> rates_mod.SpeedProfile:
    known = {"zero", "two_rate_saturating"}
    name = spec.get("profile")
    if name == "zero":
        return ZeroSpeed()
    if name == "two_rate_saturating":
        vs, vl, p, rbar, eps_r = _require(spec, field, ("v_s", "v_l", "p", "rbar", "eps_r"))
        return TwoRateSaturatingSpeed(vs, vl, p, rbar, eps_r)
    raise _unknown(field, name, known)


def build_flux_profile(spec: dict, field: str = "J_M") -> rates_mod.MembraneFlux:
    known = {"zero", "relaxation"}
    name = spec.get("profile")
    if name == "zero":
        return ZeroFlux()
    if name == "relaxation":
        vM, Mb = _require(spec, field, ("v_M", "Mbar"))
        return RelaxationFlux(vM, Mb)
    raise _unknown(field, name, known)


def build_kernel_form(spec: dict, field: str = "kernel") -> rates_mod.KernelForm:
    known = {"constant", "affine"}
    name = spec.get("form")
    if name == "constant":
        (k0,) = _require(spec, field, ("K0",))
        return ConstantKernel(k0)
    if name == "affine":
        k0, k1 = _require(spec, field, ("K0", "K1"))
        return AffineKernel(k0, k1)
    raise ConfigError(f"{field}.form: unknown kernel form {name!r} "
                      f"(known: {', '.join(sorted(known))})")


def build_f0(spec: dict, model: str, field: str = "f0"):
    known = {"zero", "gaussian1d", "gauss_mixture"}
    name = spec.get("profile")
    if name == "zero":
        if model == "1d":
            return lambda r: np.zeros(np.shape(r))
        return lambda r, a: np.zeros(np.broadcast(r, a).shape)
    if name == "gaussian1d":
        s, mu, sg = _require(spec, field, ("scale", "mu", "sigma"))
        gauss = GaussianDensity(mu, sg)
        return lambda r: s * gauss(r)
    if name == "gauss_mixture":
        (s,) = _require(spec, field, ("scale",))
        terms = _mixture_terms(spec, field)
        gs = [(w, GaussianDensity(mur, sr), GaussianDensity(mua, sa))
              for w, mur, sr, mua, sa in terms]

        def f0(r, a):
            acc = 0.0
            for w, gr, ga in gs:
                acc = acc + w * gr(r) * ga(a)
            return s * acc

        return f0
    raise _unknown(field, name, known)


def resolve(scenario: Scenario) -> Resolved:
    """Instantiate grid, bound rates, kernel table, f0 and SimConfig."""
    if scenario.model == "1d":
        grid = make_grid1d(scenario.R, scenario.I_r)
    elif scenario.model == "2d":
        grid = make_grid2d(scenario.R, scenario.A, scenario.I_r, scenario.I_a)
    else:
        raise ConfigError(f"model must be 1d or 2d, got {scenario.model!r}")
    alpha = build_alpha_profile(scenario.alpha)
    gamma = build_rate_profile(scenario.gamma, "gamma")
    lam = build_rate_profile(scenario.lam, "lambda")
    V = build_speed_profile(scenario.V)
    J_M = build_flux_profile(scenario.J_M)
    if isinstance(V, TwoRateSaturatingSpeed):
        logger.info("scenario %s: content reaction uses rbar=%g, eps_r=%g "
                    "(size threshold and lower cutoff)", scenario.id, V.rbar, V.eps_r)
    cfg = SimConfig(dt=scenario.dt, T=scenario.T,
                    snapshot_times=scenario.snapshot_times,
                    quadrature=scenario.quadrature,
                    negativity=scenario.negativity, neg_tol=scenario.neg_tol,
                    membrane_enabled=scenario.membrane_enabled,
                    diag_every=scenario.diag_every, M_const=scenario.M_const)
    bound = bind_rates(alpha, gamma, lam, V, J_M, grid, scenario.quadrature)
    kernel = build_kernel_table(build_kernel_form(scenario.kernel), grid)
    f0 = build_f0(scenario.f0, scenario.model)
    return Resolved(scenario, grid, bound, kernel, f0, cfg, scenario.M0)


# ---------------------------------------------------------------------------
# Built-in scenarios

_FIG1_F0 = {
    "profile": "gauss_mixture", "scale": 0.5,
    "term1": {"w": 1.0, "mu_r": 1.5, "sigma_r": 0.15, "mu_a": 0.5, "sigma_a": 0.3},
    "term2": {"w": 1.0, "mu_r": 0.5, "sigma_r": 0.3, "mu_a": 1.5, "sigma_a": 0.15},
}

_ZERO = {"profile": "zero"}


def _pure_coag(id_, R, I, dt, T, kernel, snaps, description, analysis):
    return Scenario(
        id=id_, model="2d", family="pure", R=R, A=R, I_r=I, I_a=I,
        dt=dt, T=T, snapshot_times=snaps, diag_every=1,
        quadrature="midpoint", negativity="warn", neg_tol=0.0,
        membrane_enabled=False, M0=0.0, M_const=1.0,
        kernel=kernel, alpha=_ZERO, gamma=_ZERO, lam=_ZERO, V=_ZERO, J_M=_ZERO,
        f0=_FIG1_F0, analysis=analysis, description=description)


def _fig8(id_, gamma_value, description):
    return Scenario(
        id=id_, model="1d", family="stationary", R=5.0, A=None, I_r=301, I_a=None,
        dt=0.05, T=50.0, snapshot_times=(10.0, 50.0), diag_every=1,
        quadrature="midpoint", negativity="warn", neg_tol=0.0,
        membrane_enabled=False, M0=1.0, M_const=1.0,
        kernel={"form": "constant", "K0": 1.0},
        alpha={"profile": "gaussian1d", "scale": 1.0, "mu": 0.6, "sigma": 0.1},
        gamma={"profile": "constant", "value": gamma_value},
        lam=_ZERO, V=_ZERO, J_M=_ZERO,
        f0={"profile": "gaussian1d", "scale": 0.5, "mu": 0.2, "sigma": 0.15},
        analysis=("condition-check", "stationary", "decay-rate"),
        description=description)


def _trafficking(id_, kappa, abar, description):
    return Scenario(
        id=id_, model="2d", family="trafficking", R=2000.0, A=2000.0, I_r=30, I_a=30,
        dt=0.1, T=1000.0, snapshot_times=(1000.0,), diag_every=10,
        quadrature="midpoint", negativity="warn", neg_tol=0.0,
        membrane_enabled=True, M0=7.2e-4, M_const=1.0,
        kernel={"form": "constant", "K0": kappa},
        alpha={"profile": "size_coupled", "abar": abar, "mu_r": 200.0,
               "sigma_r": 10.0, "sigma_a": 0.5},
        gamma={"profile": "quartic_above", "floor": 1e-5, "coef": 2e1,
               "r0": 1950.0, "width": 50.0},
        lam={"profile": "power", "scale": 1e-2, "xbar": 2000.0, "eps": 0.0},
        V=_ZERO, J_M=_ZERO,
        f0=_ZERO, analysis=(), description=description)


def _signaling(id_, v_s, v_l, p, v_M, Mbar, description):
    dr = 2000.0 / 30
    return Scenario(
        id=id_, model="2d", family="signaling", R=2000.0, A=30.0, I_r=30, I_a=30,
        dt=3e-2, T=20.0, snapshot_times=(20.0,), diag_every=5,
        quadrature="gauss16", negativity="warn", neg_tol=0.0,
        membrane_enabled=True, M0=0.0, M_const=1.0,
        kernel={"form": "constant", "K0": 2e-1},
        alpha={"profile": "content_gaussian", "scale": 1.0, "mu_r": 200.0,
               "sigma_r": 10.0, "mu_a": 0.0, "sigma_a": 0.1},
        gamma={"profile": "power_below_quartic_above", "pscale": 1.0,
               "xbar": 2000.0, "eps": 100.0, "r0": 1950.0, "coef": 2e2, "width": 50.0},
        lam={"profile": "power", "scale": 1e-2, "xbar": 2000.0, "eps": 100.0},
        V={"profile": "two_rate_saturating", "v_s": v_s, "v_l": v_l, "p": p,
           "rbar": 1000.0, "eps_r": dr / 2},
        J_M={"profile": "relaxation", "v_M": v_M, "Mbar": Mbar},
        f0=_ZERO, analysis=(), description=description)


def _builtin_registry() -> dict[str, Scenario]:
    reg = {}

    def add(sc: Scenario):
        reg[sc.id] = sc

    add(_pure_coag("fig1-pure-coag", 10.0, 40, 1e-4, 0.5,
                   {"form": "constant", "K0": 0.5}, (0.0, 0.25, 0.5),
                   "pure coagulation, constant kernel 0.5, bimodal Gaussian start",
                   ("moments-vs-ode",)))
    add(_pure_coag("fig1-pure-coag-affine", 10.0, 40, 1e-4, 0.5,
                   {"form": "affine", "K0": 0.5, "K1": 0.1}, (0.0, 0.25, 0.5),
                   "pure coagulation, affine kernel 0.5 + 0.1 (r + r')",
                   ("moments-vs-ode",)))
    add(_pure_coag("fig5-pure-coag", 3.0, 6, 5e-4, 0.05,
                   {"form": "constant", "K0": 0.5}, (),
                   "pure coagulation on the small square domain used for refinement studies",
                   ("convergence",)))

    sc6 = _pure_coag("fig6-general", 3.0, 6, 5e-4, 0.05,
                     {"form": "constant", "K0": 0.5}, (),
                     "coagulation with source, degradation, recycling and membrane pool",
                     ("convergence",))
    add(dataclasses.replace(
        sc6, family="general", membrane_enabled=True, M0=20.0, quadrature="gauss32",
        alpha={"profile": "gauss_mixture", "scale": 0.1,
               "term1": {"w": 1.0, "mu_r": 0.6, "sigma_r": 0.01, "mu_a": 0.3, "sigma_a": 0.05},
               "term2": {"w": 1.0, "mu_r": 0.3, "sigma_r": 0.05, "mu_a": 0.6, "sigma_a": 0.01}},
        gamma={"profile": "quartic_above", "floor": 1e-5, "coef": 20.0, "r0": 5.0, "width": 1.0},
        lam={"profile": "power", "scale": 1e-2, "xbar": 10.0, "eps": 0.0}))

    add(_fig8("fig8-stable", math.sqrt(3.1),
              "single-variable model in the regime where the smallness condition holds"))
    add(_fig8("fig8-violated", 0.7,
              "single-variable model outside the smallness condition (gamma = 0.7)"))

    add(_trafficking("trafficking-LHR-H1", 5e-1, 8e-5,
                     "LHR trafficking, hypothesis 1 (internalisation rate only)"))
    add(_trafficking("trafficking-B2AR-H1", 5e-1, 3e-4,
                     "B2AR trafficking, hypothesis 1 (internalisation rate only)"))
    add(_trafficking("trafficking-LHR-H2", 5e-3, 8e-5,
                     "LHR trafficking, hypothesis 2 (internalisation and fusion rates)"))
    add(_trafficking("trafficking-B2AR-H2", 5e-1, 3e-4,
                     "B2AR trafficking, hypothesis 2 (internalisation and fusion rates)"))

    add(_signaling("signaling-LAPTH-H1", 0.05, 0.02, 1 / 20, 3.5, 10.0,
                   "LA-PTH cAMP production, hypothesis 1 (rates only)"))
    add(_signaling("signaling-PTH7D-H1", 5.0, 2.0, 1 / 20, 0.035, 10.0,
                   "PTH-7D cAMP production, hypothesis 1 (rates only)"))
    add(_signaling("signaling-LAPTH-H2", 0.5, 0.2, 1 / 200, 3.5, 10.0,
                   "LA-PTH cAMP production, hypothesis 2 (rates and saturation)"))
    add(_signaling("signaling-PTH7D-H2", 5.0, 2.0, 1 / 20, 0.35, 1.0,
                   "PTH-7D cAMP production, hypothesis 2 (rates and saturation)"))
    return reg


_REGISTRY = _builtin_registry()


def builtin_ids() -> list[str]:
    return sorted(_REGISTRY)


def load_scenario(source: str) -> Scenario:
    """A built-in scenario by id, or a user scenario from a config file path."""
    if source in _REGISTRY:
        return _REGISTRY[source]
    if os.path.exists(source):
        with open(source, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    raise ConfigError(f"unknown scenario {source!r}; valid ids: {', '.join(builtin_ids())}")


# ---------------------------------------------------------------------------
# Flat config format

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _flatten_profile(prefix: str, spec: dict, out: list[str]):
    keys = [k for k in spec if not k.startswith("term")]
    for k in sorted(keys, key=lambda s: (s != "profile" and s != "form", s)):
        out.append(f"{prefix}.{k} = {_fmt(spec[k])}")
    k = 1
    while f"term{k}" in spec:
        for pk, pv in spec[f"term{k}"].items():
            out.append(f"{prefix}.term{k}.{pk} = {_fmt(pv)}")
        k += 1


def serialize_scenario(sc: Scenario) -> str:
    """Write a scenario in the flat dotted key = value format."""
    out = [f"id = {sc.id}", f"model = {sc.model}", f"family = {sc.family}"]
    out.append(f"grid.R = {_fmt(sc.R)}")
    if sc.model == "2d":
        out.append(f"grid.A = {_fmt(sc.A)}")
    out.append(f"grid.I_r = {sc.I_r}")
    if sc.model == "2d":
        out.append(f"grid.I_a = {sc.I_a}")
    out.append(f"time.dt = {_fmt(sc.dt)}")
    out.append(f"time.T = {_fmt(sc.T)}")
    if sc.snapshot_times:
        out.append("time.snapshots = " + ",".join(_fmt(t) for t in sc.snapshot_times))
    out.append(f"time.diag_every = {sc.diag_every}")
    out.append(f"numerics.quadrature = {sc.quadrature}")
    out.append(f"numerics.negativity = {sc.negativity}")
    out.append(f"numerics.neg_tol = {_fmt(sc.neg_tol)}")
    out.append(f"membrane.enabled = {_fmt(sc.membrane_enabled)}")
    out.append(f"membrane.M0 = {_fmt(sc.M0)}")
    out.append(f"membrane.M_const = {_fmt(sc.M_const)}")
    _flatten_profile("kernel", sc.kernel, out)
    _flatten_profile("alpha", sc.alpha, out)
    _flatten_profile("gamma", sc.gamma, out)
    _flatten_profile("lambda", sc.lam, out)
    _flatten_profile("V", sc.V, out)
    _flatten_profile("J_M", sc.J_M, out)
    _flatten_profile("f0", sc.f0, out)
    if sc.analysis:
        out.append("analysis = " + ",".join(sc.analysis))
    return "\n".join(out) + "\n"


_PROFILE_SECTIONS = ("kernel", "alpha", "gamma", "lambda", "V", "J_M", "f0")
_STR_KEYS = {"id", "model", "family", "numerics.quadrature", "numerics.negativity",
             "analysis", "time.snapshots"}
_INT_KEYS = {"grid.I_r", "grid.I_a", "time.diag_every"}
_BOOL_KEYS = {"membrane.enabled", "numerics.compensated"}


def _parse_value(key: str, raw: str):
    if key in _STR_KEYS or key.endswith(".profile") or key.endswith(".form"):
        return raw
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None
    if key in _BOOL_KEYS:
        if raw.lower() in ("true", "yes", "1"):
            return True
        if raw.lower() in ("false", "no", "0"):
            return False
        raise ConfigError(f"{key}: expected true/false, got {raw!r}")
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def parse_config(text: str) -> Scenario:
    """Parse the flat dotted config format into a Scenario."""
    kv: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        kv[key] = _parse_value(key, raw)

    def take(key, default=None, required=False):
        if key in kv:
            return kv.pop(key)
        if required:
            raise ConfigError(f"missing required field {key}")
        return default

    sid = take("id", required=True)
    model = take("model", required=True)
    if model not in ("1d", "2d"):
        raise ConfigError(f"model: expected 1d or 2d, got {model!r}")
    family = take("family", "custom")
    R = take("grid.R", required=True)
    I_r = take("grid.I_r", required=True)
    A = take("grid.A")
    I_a = take("grid.I_a")
    if model == "2d" and (A is None or I_a is None):
        raise ConfigError("2d scenarios need grid.A and grid.I_a")
    dt = take("time.dt", required=True)
    T = take("time.T", required=True)
    snaps_raw = take("time.snapshots", "")
    snaps = tuple(float(s) for s in str(snaps_raw).split(",") if s.strip()) if snaps_raw else ()
    diag_every = take("time.diag_every", 1)
    quadrature = take("numerics.quadrature", "midpoint")
    negativity = take("numerics.negativity", "warn")
    neg_tol = take("numerics.neg_tol", 0.0)
    membrane_enabled = take("membrane.enabled", model == "2d")
    M0 = take("membrane.M0", 0.0)
    M_const = take("membrane.M_const", 1.0)
    analysis_raw = take("analysis", "")
    analysis = tuple(s.strip() for s in str(analysis_raw).split(",") if s.strip())

    profiles = {}
    for section in _PROFILE_SECTIONS:
        spec: dict = {}
        prefix = section + "."
        for key in [k for k in kv if k.startswith(prefix)]:
            rest = key[len(prefix):]
            val = kv.pop(key)
            if rest.startswith("term") and "." in rest:
                tname, pname = rest.split(".", 1)
                spec.setdefault(tname, {})[pname] = val
            else:
                spec[rest] = val
        if not spec:
            spec = dict(_ZERO) if section != "kernel" else None
        profiles[section] = spec
    if profiles["kernel"] is None:
        raise ConfigError("missing required section kernel.*")
    if kv:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(kv))}")

    sc = Scenario(id=sid, model=model, family=family, R=R, A=A, I_r=I_r, I_a=I_a,
                  dt=dt, T=T, snapshot_times=snaps, diag_every=diag_every,
                  quadrature=quadrature, negativity=negativity, neg_tol=neg_tol,
                  membrane_enabled=membrane_enabled, M0=M0, M_const=M_const,
                  kernel=profiles["kernel"], alpha=profiles["alpha"],
                  gamma=profiles["gamma"], lam=profiles["lambda"],
                  V=profiles["V"], J_M=profiles["J_M"], f0=profiles["f0"],
                  analysis=analysis)
    resolve(sc)   # validate eagerly so errors carry field names
    return sc


def apply_overrides(sc: Scenario, overrides: dict[str, str]) -> Scenario:
    """Apply dotted-path overrides (CLI --set) on top of a scenario."""
    text = serialize_scenario(sc)
    kv = {}
    for line in text.splitlines():
        key, raw = (p.strip() for p in line.split("=", 1))
        kv[key] = raw
    for key, raw in overrides.items():
        kv[key] = raw
    merged = "\n".join(f"{k} = {v}" for k, v in kv.items())
    return parse_config(merged)


def config_schema() -> list[tuple[str, str, str]]:
    """(key, type, description) rows for the `schema` command and the docs."""
    return [
        ("id", "str", "scenario identifier"),
        ("model", "1d|2d", "single-variable model or size-and-content model"),
        ("family", "str", "observable family: pure|general|stationary|trafficking|signaling|custom"),
        ("grid.R", "float", "size-axis extent (cells cover [0, R])"),
        ("grid.A", "float", "content-axis extent (2d only)"),
        ("grid.I_r", "int", "size-axis cell count"),
        ("grid.I_a", "int", "content-axis cell count (2d only)"),
        ("time.dt", "float", "explicit Euler time step"),
        ("time.T", "float", "final time; floor(T/dt) steps are taken"),
        ("time.snapshots", "floats", "comma-separated snapshot times in [0, T]"),
        ("time.diag_every", "int", "steps between diagnostic rows"),
        ("numerics.quadrature", "rule", "cell quadrature: midpoint or gaussN (N<=64)"),
        ("numerics.negativity", "warn|abort", "policy when densities or M go negative"),
        ("numerics.neg_tol", "float", "tolerated negative undershoot before the policy fires"),
        ("membrane.enabled", "bool", "integrate the membrane pool M (2d)"),
        ("membrane.M0", "float", "initial membrane quantity"),
        ("membrane.M_const", "float", "fixed M seen by alpha in the 1d model"),
        ("kernel.form", "constant|affine", "coagulation kernel form"),
        ("kernel.K0", "float", "constant part of the kernel"),
        ("kernel.K1", "float", "slope of the affine kernel K0 + K1 (r + r')"),
        ("alpha.profile", "name", "zero|gaussian1d|gauss_mixture|size_coupled|content_gaussian"),
        ("alpha.*", "floats", "profile parameters; gauss_mixture uses alpha.termK.{w,mu_r,sigma_r,mu_a,sigma_a}"),
        ("gamma.profile", "name", "zero|constant|power|quartic_above|power_below_quartic_above"),
        ("gamma.*", "floats", "degradation profile parameters"),
        ("lambda.profile", "name", "recycling profile, same vocabulary as gamma"),
        ("lambda.*", "floats", "recycling profile parameters"),
        ("V.profile", "name", "zero|two_rate_saturating (content reaction speed)"),
        ("V.*", "floats", "v_s, v_l, p, rbar (size threshold), eps_r (lower size cutoff)"),
        ("J_M.profile", "name", "zero|relaxation (membrane reaction flux)"),
        ("J_M.*", "floats", "relaxation parameters v_M, Mbar"),
        ("f0.profile", "name", "zero|gaussian1d|gauss_mixture initial density"),
        ("f0.*", "floats", "initial density parameters"),
        ("analysis", "names", "comma-separated analyze tasks this scenario supports"),
    ]


# ---------------------------------------------------------------------------
# Observables

def trafficking_observables(traj) -> dict[str, np.ndarray]:
    """Mean endosomal size, its spread, and the internalization ratio.

    mean_size = |f|_1r / |f|_0, size_std = sqrt(|f|_2r/|f|_0 - mean^2),
    internalization_ratio = |f|_1a / M0.  Mean and std are NaN (reported
    as absent) while the population is empty.
    """
    n0 = traj.norms[:, 0]
    n1r = traj.norms[:, 1]
    n1a = traj.norms[:, 2]
    n2r = traj.norms[:, 3]
    with np.errstate(divide="ignore", invalid="ignore"):
        mean = np.where(n0 > 0, n1r / np.where(n0 > 0, n0, 1.0), np.nan)
        var = np.where(n0 > 0, n2r / np.where(n0 > 0, n0, 1.0) - mean ** 2, np.nan)
    std = np.sqrt(np.maximum(var, 0.0))
    if traj.M0 <= 0:
        raise ConfigError("internalization ratio needs M0 > 0")
    return {"t": traj.times, "mean_size": mean, "size_std": std,
            "internalization_ratio": n1a / traj.M0}


def signaling_observables(traj) -> dict[str, np.ndarray]:
    """Endosomal, membrane and total second-messenger quantities over time."""
    internal = traj.norms[:, 2]
    membrane = traj.M
    return {"t": traj.times, "camp_internal": internal,
            "camp_membrane": membrane, "camp_total": internal + membrane}
