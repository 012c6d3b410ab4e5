import math

import numpy as np
import pytest

from endosim import (GaussianDensity, InvalidArgumentError, KernelError,
                     PowerProfile, build_kernel_table, eval_gaussian,
                     eval_power_profile, make_grid2d, scenario_rates)
from endosim.errors import ConfigError
from endosim.rates import (AffineKernel, ConstantKernel, CustomKernel,
                           QuarticAbove, ScaledPowerRate)


def test_gaussian_peak_values():
    assert eval_gaussian(GaussianDensity(0.0, 1.0), 0.0) == pytest.approx(
        1.0 / math.sqrt(2 * math.pi), rel=1e-12)
    assert eval_gaussian(GaussianDensity(1.5, 0.15), 1.5) == pytest.approx(
        2.659615202676218, rel=1e-12)


def test_gaussian_symmetry_and_positivity():
    p = GaussianDensity(1.5, 0.15)
    assert eval_gaussian(p, 1.65) == pytest.approx(eval_gaussian(p, 1.35), rel=1e-14)
    x = np.linspace(-5, 5, 101)
    assert np.all(p(x) >= 0)


def test_gaussian_rejects_bad_sigma():
    with pytest.raises(InvalidArgumentError):
        GaussianDensity(0.0, 0.0)
    with pytest.raises(InvalidArgumentError):
        GaussianDensity(0.0, -1.0)


def test_power_profile_endpoints_and_value():
    assert eval_power_profile(PowerProfile(10.0, 0.0), 10.0) == 0.0
    assert eval_power_profile(PowerProfile(3.0, 2.0), 0.0) == 0.0
    # independent evaluation through logs: (7/8)^(1/3) * (1/8)^(2/3)
    expected = math.exp(math.log(7.0 / 8.0) / 3.0 + 2.0 * math.log(1.0 / 8.0) / 3.0)
    assert eval_power_profile(PowerProfile(8.0, 0.0), 1.0) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.2391, abs=5e-5)


def test_power_profile_clamped_outside():
    p = PowerProfile(10.0, 1.0)
    x = np.array([-2.0, -1e-9, 11.0 + 1e-9, 50.0])
    np.testing.assert_array_equal(p(x), 0.0)
    # continuous approach to zero at the clamp boundary
    assert p(11.0 - 1e-9) < 1e-3
    xs = np.linspace(0.0, 11.0, 1000)
    assert np.all(p(xs) >= 0)


def test_power_profile_max_location():
    p = PowerProfile(9.0, 0.0)
    xs = np.linspace(0, 9, 20001)
    assert p.max_on(9.0) == pytest.approx(p(xs).max(), rel=1e-6)
    # truncated domain cuts the peak off
    assert p.max_on(2.0) == pytest.approx(float(p(2.0)), rel=1e-12)


def test_kernel_table_constant():
    g = make_grid2d(10.0, 10.0, 8, 8)
    k = build_kernel_table(ConstantKernel(0.5), g)
    assert np.all(k.table == 0.5)
    assert k.kappa_inf == 0.5


def test_kernel_table_affine_sup_and_symmetry():
    g = make_grid2d(10.0, 10.0, 16, 16)
    k = build_kernel_table(AffineKernel(0.5, 0.1), g)
    assert k.kappa_inf == pytest.approx(2.5, rel=1e-14)
    np.testing.assert_array_equal(k.table, k.table.T)
    assert k.table[2, 5] == pytest.approx(0.5 + 0.1 * (g.r_centers[2] + g.r_centers[5]))


def test_kernel_rejects_negative_form():
    g = make_grid2d(10.0, 10.0, 4, 4)
    with pytest.raises(KernelError):
        build_kernel_table(CustomKernel(lambda r, rp: r - rp), g)


def test_scenario_rates_spot_values():
    rs, k = scenario_rates("trafficking-B2AR-H2")
    assert k.kappa_inf == 0.5
    # abar echoes through the alpha profile
    assert rs.alpha.abar == pytest.approx(3e-4)
    rs, k = scenario_rates("signaling-LAPTH-H1")
    assert rs.V.v_s == 0.05 and rs.V.v_l == 0.02 and rs.V.p == pytest.approx(1 / 20)
    assert rs.J_M.v_M == 3.5 and rs.J_M.Mbar == 10.0
    rs, k = scenario_rates("fig8-stable")
    assert rs.gamma0 == pytest.approx(math.sqrt(3.1), rel=1e-14)
    assert k.kappa_inf == 1.0


def test_scenario_rates_unknown_name():
    with pytest.raises(ConfigError, match="fig8-stable"):
        scenario_rates("no-such-scenario")


def test_fig8_condition_values():
    from endosim import check_theorem_condition

    rs, k = scenario_rates("fig8-stable")
    rep = check_theorem_condition(rs, k)
    assert rep["holds"] and rep["lhs"] == pytest.approx(3.0, rel=1e-4)
    assert rep["rhs"] == pytest.approx(3.1, rel=1e-12)
    rs, k = scenario_rates("fig8-violated")
    rep = check_theorem_condition(rs, k)
    assert not rep["holds"]
    assert rep["lhs"] == pytest.approx(3.0, rel=1e-4) and rep["rhs"] == pytest.approx(0.49)


def test_rate_profile_bounds():
    q = QuarticAbove(1e-5, 20.0, 1950.0, 50.0)
    lo, hi = q.bounds_on(2000.0)
    assert lo == 1e-5
    assert hi == pytest.approx(1e-5 + 20.0, rel=1e-12)
    lo, hi = q.bounds_on(1000.0)   # threshold outside the domain
    assert hi == 1e-5
    s = ScaledPowerRate(1e-2, 2000.0, 0.0)
    lo, hi = s.bounds_on(2000.0)
    assert lo == 0.0
    xs = np.linspace(0, 2000, 40001)
    assert hi == pytest.approx(1e-2 * PowerProfile(2000.0, 0.0)(xs).max(), rel=1e-8)
