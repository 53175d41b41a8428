"""Reference values and small oracles, one block per public operation."""

import numpy as np
import pytest
from scipy import stats
from scipy.special import gamma

from quasiou.analytics import (CovarianceCurve, acf_short_lag_prediction, acf_tail_prediction, empirical_acf,
                               fit_power_law, j_alpha, k_alpha, stability_experiment, stationary_moments,
                               theoretical_acf)
from quasiou.config import parse_config
from quasiou.drivers import (LevyTriplet, StableJumps, VolatilitySpec, sample_levy_increments,
                             sample_sv_increments, symmetric_stable)
from quasiou.exceptions import QouError
from quasiou.grid import TimeGrid
from quasiou.integrability import (Integrand, ModularSpec, WeightedBivariateKernel, fubini_check, lp_growth_check,
                                   lphi_norm, phi_value, pma_admissibility)
from quasiou.kernels import (Indicator, Power, Tabulated, TruncPower, c_H_constant, cancellation_integral,
                             fractional_kernel, psi_tail_asymptote, psi_transform, unit_bump)
from quasiou.langevin import PathEnsemble, QouConfig, langevin_residual, qou_from_noise, qou_ma_path, simulate_qou
from quasiou.noise import (DriftNoise, FBMNoise, PMANoise, Path, SVNoise, fgn_autocovariance, simulate_fbm,
                           simulate_pma, simulate_sv, variance_function)

GAUSS = ModularSpec(LevyTriplet.brownian())


# drivers -----------------------------------------------------------------

def test_brownian_increment_variance():
    n = 10 ** 5
    inc = sample_levy_increments(LevyTriplet.brownian(), TimeGrid(0.0, 0.01, n + 1), 0, n_paths=1)
    assert abs(inc.values.var(ddof=1) / 0.01 - 1) < 4 / np.sqrt(n - 1)


def test_inactive_driver_rejected():
    with pytest.raises(QouError):
        LevyTriplet(0.0, None)


def test_stable_draws_median_and_hill_index():
    x = symmetric_stable(1.5, 10 ** 6, np.random.default_rng(1))
    assert abs(np.median(x)) < 0.01
    tail = np.sort(np.abs(x))[::-1][:2001]
    hill = 1.0 / np.mean(np.log(tail[:-1] / tail[-1]))
    assert hill == pytest.approx(1.5, abs=0.1)


def test_constant_volatility_is_brownian_and_reproducible():
    g = TimeGrid.span(0, 1, 0.01)
    a = sample_sv_increments(VolatilitySpec("constant", 1.0), g, 4, n_paths=3).values
    b = sample_sv_increments(VolatilitySpec("constant", 1.0), g, 4, n_paths=3).values
    assert np.array_equal(a, b)
    v = sample_sv_increments(VolatilitySpec("constant", 1.0), g, 4, n_paths=2000).values
    assert abs(v.var() / 0.01 - 1) < 4 * np.sqrt(2 / v.size)


def test_exp_ou_volatility_continuity():
    g = TimeGrid.span(0, 1, 0.01)
    const = sample_sv_increments(VolatilitySpec("constant", 1.0), g, 4, n_paths=3).values
    tiny = sample_sv_increments(VolatilitySpec("exp_ou", kappa=1.0, v=1e-12), g, 4, n_paths=3).values
    assert np.max(np.abs(const - tiny)) < 1e-6


def test_exp_ou_volatility_isometry():
    m = 10 ** 4
    N = simulate_sv(VolatilitySpec("exp_ou", kappa=1.0, v=0.25), TimeGrid.span(0, 1, 0.01), 6, n_paths=m).values
    sq = N[:, -1] ** 2
    assert abs(sq.mean() - 1) < 4 * sq.std(ddof=1) / np.sqrt(m)


# noise -------------------------------------------------------------------

def test_fbm_half_is_brownian():
    B = simulate_fbm(0.5, 1.0, TimeGrid.span(0, 10, 0.01), 2, n_paths=1).values[0]
    d = np.diff(B)
    assert abs(d.var() / 0.01 - 1) < 4 * np.sqrt(2 / d.size)
    assert abs(np.corrcoef(d[:-1], d[1:])[0, 1]) < 4 / np.sqrt(d.size)


def test_fbm_variance_over_grid():
    m, H = 5000, 0.7
    grid = TimeGrid(0.0, 1.0 / 2 ** 10, 2 ** 10 + 1)
    B = simulate_fbm(H, 1.0, grid, 3, n_paths=m).values[:, 1:]
    t = grid.times[1:]
    rel = np.abs(B.var(axis=0) / t ** (2 * H) - 1)
    assert np.max(rel) < 4 * np.sqrt(2 / m)


def test_fgn_covariance_exact():
    H = 0.7
    k = np.arange(17)
    expect = 0.5 * (np.abs(k + 1) ** (2 * H) + np.abs(k - 1) ** (2 * H) - 2 * k ** (2 * H))
    assert np.max(np.abs(fgn_autocovariance(H, k) - expect)) < 1e-12


def test_indicator_pma_reproduces_driver():
    grid = TimeGrid.span(0, 2, 0.01).extend_past(1.0)
    N = simulate_pma(Indicator(), LevyTriplet.brownian(), grid, 1.0, 9, n_paths=2)
    inc = sample_levy_increments(LevyTriplet.brownian(), N.meta["increments"].grid, 9, n_paths=2)
    k0 = N.grid.zero_index
    Z = np.cumsum(inc.values[:, -(N.grid.count - 1 - k0):], axis=1)
    assert np.max(np.abs(N.values[:, k0 + 1:] - Z)) < 1e-12


def test_fractional_pma_unit_variance():
    m = 10 ** 4
    N = simulate_pma(fractional_kernel(0.7), LevyTriplet.brownian(), TimeGrid.span(0, 1, 0.01), 10.0, 1,
                     n_paths=m, far_field=True).values[:, -1]
    assert abs(N.var() - 1) < 4 * np.sqrt(2 / m)


def test_linear_fractional_stable_motion_symmetric():
    N = simulate_pma(fractional_kernel(0.3, alpha=1.5), LevyTriplet.stable(1.5), TimeGrid.span(0, 1, 0.01), 50.0,
                     2, n_paths=2000, far_field=True).values
    assert np.all(np.isfinite(N))
    pos = int(np.sum(N[:, -1] > 0))
    assert stats.binomtest(pos, N.shape[0]).pvalue > 0.01


@pytest.mark.parametrize("spec, t, expect, tol", [
    (FBMNoise(0.5, 2.0), 3.0, 12.0, 1e-12),
    (FBMNoise(0.7), 2.0, 2 ** 1.4, 1e-12),
    (PMANoise(fractional_kernel(0.7), LevyTriplet.brownian()), 2.0, 2 ** 1.4, 1e-6),
    (PMANoise(fractional_kernel(0.75), LevyTriplet.brownian()), 1.0, 1.0, 1e-6),
])
def test_variance_function_values(spec, t, expect, tol):
    assert variance_function(spec, np.array([t]))[0] == pytest.approx(expect, rel=tol)


# kernels -----------------------------------------------------------------

def test_c_H_values_and_limits():
    assert c_H_constant(0.5) == 1.0
    H = 0.75
    assert c_H_constant(H) == pytest.approx(np.sqrt(2 * H * np.sin(np.pi * H) * gamma(2 * H)) / gamma(H + 0.5))
    vals = [c_H_constant(h) for h in np.linspace(1e-9, 1 - 1e-9, 101)]
    assert np.all(np.isfinite(vals))


def test_psi_reference_points():
    assert psi_transform(Indicator(), 1.0, [0.5]).values[0] == pytest.approx(0.606531, abs=1e-6)
    assert psi_transform(fractional_kernel(0.3), 1.0, [-1.0]).values[0] == 0.0
    H, c = 0.7, c_H_constant(0.7)
    psi100 = psi_transform(fractional_kernel(H), 1.0, [100.0], method="quadrature").values[0]
    assert psi100 * 100.0 ** (1 - (H - 0.5)) / (c * (H - 0.5)) == pytest.approx(1.0, abs=0.02)


def test_psi_tail_asymptotes():
    e, C = psi_tail_asymptote(fractional_kernel(0.7), 2.0)
    assert e == pytest.approx(-0.8) and C == pytest.approx(c_H_constant(0.7) * 0.2 / 2)
    assert psi_tail_asymptote(Indicator(), 1.0) == (None, None)
    e, C = psi_tail_asymptote(TruncPower(1.0, 1.0, 0.7), 1.0)
    assert e == pytest.approx(-0.8) and C == pytest.approx(0.2)
    q = psi_transform(TruncPower(1.0, 1.0, 0.7), 1.0, [200.0], method="quadrature").values[0]
    assert q / (C * 200.0 ** e) == pytest.approx(1.0, abs=0.02)


def test_cancellation_reference_points():
    assert cancellation_integral(Indicator(), 2.0, 200.0).closed_form == pytest.approx(0.5, abs=1e-12)
    r = cancellation_integral(Power(1.0, 0.2), 1.0, 50.0)
    assert r.quadrature == pytest.approx(r.closed_form, rel=1e-8)


# langevin ----------------------------------------------------------------

def test_zero_noise_and_drift():
    cfg = QouConfig(2.0, tol=1e-12)
    grid = TimeGrid.span(0, 1, 0.001).extend_past(cfg.burn_in)
    assert np.all(qou_from_noise(Path(grid, np.zeros((1, grid.count))), cfg).values == 0)
    N = Path(grid, grid.times[None, :])
    X = qou_from_noise(N, cfg)
    assert np.max(np.abs(X.values - 0.5)) < 1e-10
    assert langevin_residual(X, N, 2.0) < 1e-6
    assert langevin_residual(Path(X.grid, np.zeros_like(X.values)), Path(X.grid, np.zeros_like(X.values)), 2.0) == 0


def test_zero_increments_give_zero_solution():
    grid = TimeGrid.span(0, 1, 0.01).extend_past(10.0)
    inc = sample_levy_increments(LevyTriplet.brownian(), grid, 0, n_paths=2)
    inc.values[:] = 0.0
    psi = psi_transform(Indicator(), 1.0, grid.step * np.arange(grid.count))
    assert np.all(qou_ma_path(psi, inc, 10.0, check=False).values == 0)


def test_brownian_ou_variance_and_acf():
    m = 10 ** 4
    X = simulate_qou(PMANoise(Indicator(), LevyTriplet.brownian()), 1.0, TimeGrid.span(0, 2, 0.01), 21,
                     n_paths=m, route="moving-average", trunc=20.0, tol=1e-8)
    assert abs(X.values[:, 0].var() / 0.5 - 1) < 4 * np.sqrt(2 / m)
    emp = empirical_acf(X, [0.5, 1.0, 2.0])
    assert np.all(np.abs(emp.values - np.exp(-emp.lags) / 2) < 4 * emp.se)


def test_residual_convergence_order():
    lam, cfg = 1.0, QouConfig(1.0, burn_in=20.0)
    grid = TimeGrid.span(0, 1, 0.0025).extend_past(20.0)
    inc = sample_levy_increments(LevyTriplet.brownian(), grid, 5, n_paths=50)
    res = []
    for _ in range(2):
        g = inc.grid
        N = Path(g, np.concatenate([np.zeros((50, 1)), np.cumsum(inc.values, axis=1)], axis=1))
        N.values[:] -= N.values[:, [g.zero_index]]
        X = qou_from_noise(N, cfg)
        res.append(np.median(langevin_residual(X, N, lam, per_path=True)))
        inc = inc.coarsen(2)
    assert np.log2(res[1] / res[0]) >= 0.9


# analytics ---------------------------------------------------------------

def test_moment_reference_points():
    m = stationary_moments(DriftNoise(FBMNoise(0.5), 3.0), 2.0)
    assert m.mean == pytest.approx(1.5) and m.variance == pytest.approx(0.25, rel=1e-10)
    zero = stationary_moments(lambda s: np.zeros_like(np.asarray(s, dtype=float)), 1.0)
    assert zero.mean == 0 and zero.variance == 0
    v = stationary_moments(FBMNoise(0.7), 1.0).variance
    assert v == pytest.approx(gamma(2.4) / 2, rel=1e-8) and v == pytest.approx(0.621085, abs=1e-6)


def test_acf_reference_points():
    assert theoretical_acf(Indicator(), 1.0, [1.0]).values[0] == pytest.approx(np.exp(-1) / 2, rel=1e-12)
    assert np.all(theoretical_acf(Tabulated([0.0, 1.0], [0.0, 0.0]), 1.0, [0.0, 1.0]).values == 0)
    r500 = theoretical_acf(fractional_kernel(0.7), 1.0, [500.0]).values[0]
    assert r500 * 500 ** 0.6 == pytest.approx(0.28, rel=0.05)


def test_empirical_acf_trivial_ensembles():
    const = PathEnsemble(TimeGrid(0.0, 1.0, 20), np.full((50, 20), 3.0))
    c = empirical_acf(const, [0.0, 2.0])
    assert np.all(c.values == 0) and np.all(c.se == 0)
    white = PathEnsemble(TimeGrid(0.0, 1.0, 40), np.random.default_rng(3).standard_normal((3000, 40)))
    w = empirical_acf(white, [1.0, 3.0])
    assert np.all(np.abs(w.values) < 4 * w.se)


def test_constant_reference_points():
    assert j_alpha(0.0) == 1.0
    assert k_alpha(-0.75) == pytest.approx(gamma(0.25) * gamma(0.5) / gamma(0.75), rel=1e-12)
    assert k_alpha(-0.75) == pytest.approx(k_alpha(-0.75, method="quadrature"), rel=1e-6)
    # the defining integral gives 0.87402 at 1/4; 1.14414 is its reciprocal
    assert j_alpha(0.25) == pytest.approx(j_alpha(0.25, method="quadrature"), rel=1e-6)
    assert 1 / j_alpha(0.25) == pytest.approx(1.14414, abs=1e-5)


def test_prediction_reference_points():
    p = acf_tail_prediction(FBMNoise(0.7), 1.0)
    assert (p.exponent, p.constant) == (pytest.approx(-0.6), pytest.approx(0.28))
    assert acf_tail_prediction(FBMNoise(0.5), 1.0).status == "exponential"
    s = acf_short_lag_prediction(FBMNoise(0.3))
    assert (s.exponent, s.constant) == (pytest.approx(0.6), pytest.approx(0.5))
    j = acf_short_lag_prediction(PMANoise(TruncPower(2.0, 0.5, 0.7), LevyTriplet.brownian()))
    assert j.constant == pytest.approx(1.51572, abs=1e-5)
    d0 = acf_short_lag_prediction(PMANoise(TruncPower(2.0, 0.0, 0.7), LevyTriplet.brownian()))
    assert d0.exponent == pytest.approx(1.4) and j.exponent == 1.0


def test_power_fit_reference_points():
    t = np.geomspace(10, 1000, 21)
    fit = fit_power_law(CovarianceCurve(t, 2.5 * t ** -0.6), (10, 1000))
    assert fit.exponent == pytest.approx(-0.6, abs=1e-12) and fit.constant == pytest.approx(2.5)
    noisy = 2.5 * t ** -0.6 * (1 + 0.01 * np.random.default_rng(0).standard_normal(t.size))
    assert fit_power_law(CovarianceCurve(t, noisy), (10, 1000)).exponent == pytest.approx(-0.6, abs=0.02)
    with pytest.raises(QouError):
        fit_power_law(CovarianceCurve(t, 2.5 * t ** -0.6), (2000, 3000))


def test_stability_zero_bump_low_H():
    rep = stability_experiment(0.3, 1.0, Tabulated([0.0, 1.0], [0.0, 0.0]), n_lags=5)
    assert rep.perturbed.exponent == rep.unperturbed.exponent


# integrability -----------------------------------------------------------

def test_modular_reference_points():
    assert phi_value(3.0, GAUSS) == 9.0
    for spec in (GAUSS, ModularSpec(LevyTriplet.stable(1.5)), ModularSpec(LevyTriplet.compound_poisson(1.0))):
        assert phi_value(0.0, spec) == 0.0
    st15 = ModularSpec(LevyTriplet.stable(1.5))
    q1, q2 = (phi_value(y, st15, method="quadrature") for y in (1.0, 2.0))
    assert q2 / q1 <= 2 ** 1.5 * (1 + 1e-6)


def test_norm_reference_points():
    assert lphi_norm(Integrand(lambda s: np.ones_like(s), 0.0, 1.0), GAUSS) == pytest.approx(1.0, rel=1e-9)
    assert lphi_norm(Integrand(lambda s: np.zeros_like(s), 0.0, 1.0), GAUSS) == 0.0
    st15 = ModularSpec(LevyTriplet.stable(1.5))
    assert lphi_norm(Integrand.power(1.0, -0.4, 1.0), st15) == np.inf
    assert np.isfinite(lphi_norm(Integrand.power(1.0, -1.0, 1.0), st15))


def test_admissibility_reference_points():
    a = pma_admissibility(Indicator(), GAUSS, 2.0)
    assert a.admissible and a.norm == pytest.approx(np.sqrt(2.0), rel=1e-8)
    assert not pma_admissibility(Power(1.0, -0.6), GAUSS, 1.0).admissible
    assert pma_admissibility(fractional_kernel(0.4, alpha=1.5), ModularSpec(LevyTriplet.stable(1.5)), 1.0).admissible


def test_fubini_x_independent_kernel():
    one = lambda v: np.where((np.asarray(v) >= 0) & (np.asarray(v) <= 1), 1.0, 0.0)
    kern = WeightedBivariateKernel.from_separable(lambda x: np.ones_like(np.asarray(x, dtype=float)), one,
                                                  0.0, 2.0, 0.0, 1.0, density=lambda x: 1.0)
    rep = fubini_check(kern, LevyTriplet.brownian(), TimeGrid.span(0, 1, 0.1), 2, 20, halvings=1)
    assert rep.max_gap == 0.0


def test_fubini_triangle_on_wider_support():
    rep = fubini_check(WeightedBivariateKernel.exp_triangle(5.0), LevyTriplet.brownian(), TimeGrid.span(0, 5, 0.1),
                       4, 200, halvings=3)
    assert rep.refinement_slope >= 0.4


def test_growth_reference_points():
    grid = TimeGrid.span(0, 4, 0.01)
    bm = lp_growth_check(simulate_fbm(0.5, 1.0, grid, 1, n_paths=2000), 2.0)
    assert bm.violations == 0
    f08 = lp_growth_check(simulate_fbm(0.8, 1.0, grid, 1, n_paths=2000), 2.0)
    assert f08.violations == 0
    drift = lp_growth_check(PathEnsemble(grid, np.tile(grid.times, (3, 1))), 3.0)
    assert drift.alpha == pytest.approx(0.0, abs=1e-9) and drift.beta == pytest.approx(1.0, rel=1e-9)


# configuration -----------------------------------------------------------

def test_minimal_ou_config_echoes_defaults():
    cfg = parse_config("[experiment]\ncommand = simulate\nseed = 1\n\n[noise]\nkind = pma\n\n[kernel]\nkind = indicator\n")
    text = cfg.to_text()
    assert "lambda = 1.0" in text and "[driver]\nkind = brownian" in text
    assert isinstance(cfg.noise().kernel, Indicator)
