import math

import numpy as np
import pytest

import endosim as es
from endosim import (Field1D, Field2D, InsufficientSignalError,
                     InvalidArgumentError, MomentVector, NumericsError,
                     StationaryConfig, build_kernel_table, cell_average,
                     check_theorem_condition, make_grid1d, make_grid2d,
                     moment_ode_oracle, moments, norms,
                     stationary_fixed_point)
from endosim.analysis import fit_exponential_rate
from endosim.rates import (ConstantKernel, ConstantRate, Gaussian1DAlpha,
                           GaussianDensity, ZeroFlux, ZeroRate, ZeroSpeed,
                           bind_rates)

RNG = np.random.default_rng(99)


def _gauss_mass_moments(mu, sig, hi, n=4000):
    """Dense-quadrature (mass, first moment) of a Gaussian on [0, hi]."""
    x, w = np.polynomial.legendre.leggauss(n)
    xs = 0.5 * hi * (x + 1.0)
    ws = 0.5 * hi * w
    g = np.exp(-0.5 * ((xs - mu) / sig) ** 2) / (math.sqrt(2 * math.pi) * sig)
    return float((ws * g).sum()), float((ws * xs * g).sum())


def test_moments_trivial():
    g = make_grid2d(1.0, 1.0, 1, 1)
    assert moments(Field2D(g, np.zeros((1, 1)))).as_tuple() == (0.0, 0.0, 0.0)
    mv = moments(Field2D(g, np.array([[3.0]])))
    assert mv.H0 == 3.0 and mv.H1r == 0.0 and mv.H1a == 0.0  # left edge of cell 1 is 0


def _fig1_f0(r, a):
    n = lambda mu, s, x: np.exp(-0.5 * ((x - mu) / s) ** 2) / (np.sqrt(2 * np.pi) * s)
    return 0.5 * (n(1.5, 0.15, r) * n(0.5, 0.3, a) + n(0.5, 0.3, r) * n(1.5, 0.15, a))


def test_moments_left_edge_convention_and_convergence():
    # Oracle: separable dense quadrature of the integral int r f0.
    m0_a, m1_a = _gauss_mass_moments(0.5, 0.3, 10.0)
    m0_b, m1_b = _gauss_mass_moments(1.5, 0.15, 10.0)
    exact_H1r = 0.5 * (m1_b * m0_a + m1_a * m0_b)
    exact_H0 = 0.5 * (m0_b * m0_a + m0_a * m0_b)

    g40 = make_grid2d(10.0, 10.0, 40, 40)
    mv40 = moments(cell_average(_fig1_f0, g40, "gauss8"))
    # left-edge weights sit half a cell below centers: H1r ~ int r f - (dr/2) H0
    assert mv40.H1r == pytest.approx(exact_H1r - 0.5 * g40.dr * mv40.H0, rel=2e-3)

    g_fine = make_grid2d(10.0, 10.0, 8000, 8000)
    # streaming evaluation: accumulate row blocks to avoid a giant field
    h0 = h1r = 0.0
    block = 250
    area = g_fine.cell_area
    for lo in range(0, 8000, block):
        rr = g_fine.r_centers[lo:lo + block][:, None]
        vals = _fig1_f0(rr, g_fine.a_centers[None, :])
        h0 += float(vals.sum()) * area
        h1r += float((g_fine.r_edges[lo:lo + block][:, None] * vals).sum()) * area
    assert h1r == pytest.approx(exact_H1r, rel=1e-3)
    assert h0 == pytest.approx(exact_H0, rel=1e-4)


def test_norms_analytic_and_homogeneity():
    g = make_grid2d(2.0, 3.0, 16, 12)
    ones = Field2D(g, np.ones(g.shape))
    nr = norms(ones)
    assert nr.n0 == pytest.approx(2.0 * 3.0, rel=1e-13)
    assert nr.n1r == pytest.approx(3.0 * 2.0 ** 2 / 2.0, rel=1e-13)  # midpoint exact for r
    assert nr.n1a == pytest.approx(2.0 * 3.0 ** 2 / 2.0, rel=1e-13)
    zero = norms(Field2D(g, np.zeros(g.shape)))
    assert zero.as_dict() == {k: 0.0 for k in zero.as_dict()}
    f = Field2D(g, RNG.standard_normal(g.shape))
    a, b = norms(f), norms(Field2D(g, -2.5 * f.values))
    for k in a.as_dict():
        assert b.as_dict()[k] == pytest.approx(2.5 * a.as_dict()[k], rel=1e-14)


def test_moment_ode_closed_form():
    out = moment_ode_oracle(0.5, 0.0, MomentVector(1.0, 0.7, 0.3), [0.0, 4.0])
    assert out[-1, 0] == pytest.approx(0.5, rel=1e-9)
    assert out[-1, 1] == 0.7 and out[-1, 2] == 0.3


def test_moment_ode_zero_kernel_constant():
    out = moment_ode_oracle(0.0, 0.0, MomentVector(0.9, 0.7, 0.3), np.linspace(0, 2, 11))
    np.testing.assert_allclose(out[:, 0], 0.9, rtol=1e-14)


def test_moment_ode_rejects_negative_coefficients():
    with pytest.raises(InvalidArgumentError):
        moment_ode_oracle(-1.0, 0.0, MomentVector(1.0, 0.0, 0.0), [0.0, 1.0])


def test_condition_zero_kernel():
    g = make_grid1d(5.0, 50)
    rates = bind_rates(Gaussian1DAlpha(1.0, 0.6, 0.1), ConstantRate(2.0), ZeroRate(),
                       ZeroSpeed(), ZeroFlux(), g, "midpoint")
    k = build_kernel_table(ConstantKernel(0.0), g)
    rep = check_theorem_condition(rates, k)
    assert rep["holds"] and rep["predicted_rate"] == pytest.approx(2.0)


def test_stationary_zero_kernel_is_alpha_over_gamma():
    g = make_grid1d(5.0, 80)
    alpha = Gaussian1DAlpha(1.0, 0.6, 0.1)
    gamma = ConstantRate(2.0)
    rates = bind_rates(alpha, gamma, ZeroRate(), ZeroSpeed(), ZeroFlux(), g, "midpoint")
    k = build_kernel_table(ConstantKernel(0.0), g)
    res = stationary_fixed_point(rates, k, StationaryConfig(grid=g, tol=1e-12))
    expected = alpha(g.r_centers, 0.0, 1.0) / 2.0   # cell integrals cancel under midpoint
    np.testing.assert_allclose(res.f_inf.values, expected, rtol=5e-9, atol=1e-13)
    assert res.residual < 1e-12


def test_stationary_fig8_bound_and_invariants():
    r = es.resolve(es.load_scenario("fig8-stable"))
    cond = check_theorem_condition(r.rates, r.kernel)
    res = stationary_fixed_point(r.rates, r.kernel,
                                 StationaryConfig(grid=r.grid, tol=1e-10, trace=True))
    assert res.converged and res.residual < 1e-10
    l1 = float(np.abs(res.f_inf.values).sum() * r.grid.dr)
    assert l1 <= res.bound + 1e-10
    mins = np.array([t[0] for t in res.trace])
    l1s = np.array([t[1] for t in res.trace])
    assert mins.min() >= -1e-15
    assert l1s.max() <= res.bound + 1e-12
    # observed contraction vs the proof's Lipschitz estimate, with slack
    q_bound = 1.0 + (cond["lhs"] / cond["gamma0"] - cond["gamma0"]) / res.K + 0.05
    assert res.contraction_last <= q_bound


def test_stationary_rejects_small_K():
    r = es.resolve(es.load_scenario("fig8-stable"))
    with pytest.raises(InvalidArgumentError):
        stationary_fixed_point(r.rates, r.kernel,
                               StationaryConfig(grid=r.grid, K=0.5))


def test_fit_exponential_rate_synthetic():
    t = np.linspace(0.0, 5.0, 60)
    rep = fit_exponential_rate(t, np.exp(-2.0 * t), floor=0.0)
    assert rep["fitted_rate"] == pytest.approx(2.0, abs=1e-6)
    rep = fit_exponential_rate(t, np.full_like(t, 0.3), floor=0.0)
    assert rep["fitted_rate"] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InsufficientSignalError):
        fit_exponential_rate(t, np.full_like(t, 1e-20), floor=1e-10)


def test_convergence_study_zero_data_all_zero_errors():
    import dataclasses

    sc = es.load_scenario("fig5-pure-coag")
    sc0 = dataclasses.replace(sc, f0={"profile": "zero"})
    rep = es.convergence_study(sc0, base_I=3, levels=2, ref_level=3)
    for row in rep["levels"]:
        assert all(v == 0.0 for v in row["norms"].values())
    assert all(s is None for s in rep["slopes"].values())


def test_convergence_study_rejects_bad_levels():
    sc = es.load_scenario("fig5-pure-coag")
    with pytest.raises(InvalidArgumentError):
        es.convergence_study(sc, levels=4, ref_level=2)


def test_convergence_study_small_pure_coag_first_order():
    sc = es.load_scenario("fig5-pure-coag")
    rep = es.convergence_study(sc, base_I=6, levels=3, ref_level=4, quadrature="gauss12")
    for name, slope in rep["slopes"].items():
        assert slope is not None and 0.6 <= slope <= 1.4, (name, slope)


def test_one_step_moment_identity_telescopes():
    # one pure-coagulation Euler step: the discrete first moments are flat
    # to rounding, relative to the gross size of the weighted terms
    from endosim import Field2D, apply_coag_2d, build_kernel_table
    from endosim.rates import AffineKernel

    g = make_grid2d(6.0, 4.0, 14, 10)
    k = build_kernel_table(AffineKernel(0.8, 0.05), g)
    f0 = Field2D(g, RNG.random(g.shape))
    dt = 1e-3
    q = apply_coag_2d(f0, k).values
    f1 = Field2D(g, f0.values + dt * q)
    m0, m1 = moments(f0), moments(f1)
    area = g.cell_area
    for dh, w in (((m1.H1r - m0.H1r) / dt, g.r_edges[:-1][:, None]),
                  ((m1.H1a - m0.H1a) / dt, g.a_edges[:-1][None, :])):
        gross = float(np.abs(w * q).sum() * area)
        assert abs(dh) <= 1e-12 * gross
