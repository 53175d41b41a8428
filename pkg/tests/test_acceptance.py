"""Acceptance suite: one test (and one printed pass/fail line) per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated
in the ``acceptance criteria`` section of the terminal summary.
"""

import time

import numpy as np
import pytest
from scipy.special import gamma

from quasiou.analytics import (acf_short_lag_prediction, complementary_acf, empirical_acf,
                               fbm_stationary_variance, fit_power_law, j_alpha, k_alpha, stability_experiment,
                               stationary_moments, theoretical_acf)
from quasiou.drivers import LevyTriplet, sample_levy_increments
from quasiou.grid import TimeGrid
from quasiou.integrability import ModularSpec, WeightedBivariateKernel, fubini_check, lp_growth_check, \
    pma_admissibility
from quasiou.kernels import Indicator, TruncPower, cancellation_integral, fractional_kernel, psi_transform, \
    unit_bump
from quasiou.langevin import QouConfig, langevin_residual, qou_from_noise, qou_ma_path, simulate_qou
from quasiou.noise import FBMNoise, PMANoise, Path, pma_from_increments, simulate_fbm, simulate_pma


def test_criterion_1_ou_baseline(report):
    t0 = time.perf_counter()
    lags = [0.0, 0.5, 1.0, 2.0]
    worst = 0.0
    for i, lam in enumerate((0.5, 1.0, 2.0)):
        spec = PMANoise(Indicator(), LevyTriplet.brownian())
        X = simulate_qou(spec, lam, TimeGrid.span(0.0, 2.5, 0.01), 100 + i, n_paths=10_000, cfg=QouConfig(lam))
        emp = empirical_acf(X, lags)
        exact = np.exp(-lam * emp.lags) / (2 * lam)
        assert abs(stationary_moments(spec, lam).variance - exact[0]) < 1e-8
        worst = max(worst, float(np.max(np.abs(emp.values - exact) / emp.se)))
    elapsed = time.perf_counter() - t0
    ok = worst < 4 and elapsed < 60
    report(1, ok, f"max |emp - exact| / SE = {worst:.2f} (< 4), runtime {elapsed:.1f}s (< 60s)")
    assert ok


def test_criterion_2_laplace_variance(report):
    t0 = time.perf_counter()
    worst = 0.0
    for H in np.arange(1, 10) / 10:
        for lam in (0.5, 1.0, 2.0):
            quad = stationary_moments(FBMNoise(H), lam).variance
            closed = gamma(1 + 2 * H) / (2 * lam ** (2 * H))
            worst = max(worst, abs(quad / closed - 1))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 1.0
    report(2, ok, f"max relative error {worst:.2e} (< 1e-8), runtime {elapsed:.2f}s (< 1s)")
    assert ok


def test_criterion_3_indicator_kernel(report):
    t = np.linspace(0.0, 10.0, 101)
    worst_q = 0.0
    exact_ok = True
    for lam in (0.5, 1.0, 2.0):
        closed = psi_transform(Indicator(), lam, t)
        exact_ok &= bool(np.array_equal(closed.values, np.exp(-lam * t)))
        quad = psi_transform(Indicator(), lam, t, method="quadrature")
        worst_q = max(worst_q, float(np.max(np.abs(quad.values - np.exp(-lam * t)))))
    ok = exact_ok and worst_q < 1e-10
    report(3, ok, f"closed form bitwise equal to exp(-lam t): {exact_ok}; quadrature max error {worst_q:.1e}")
    assert ok


def test_criterion_4_long_lag_fou(report):
    t0 = time.perf_counter()
    lags = np.geomspace(50, 500, 11)
    details, ok = [], True
    for H in (0.3, 0.7):
        curve = theoretical_acf(fractional_kernel(H), 1.0, lags)
        fit = fit_power_law(curve, (50, 500), signed=True)
        ok &= abs(fit.exponent - (2 * H - 2)) < 0.05
        details.append(f"H={H}: exponent {fit.exponent:.4f}")
        if H == 0.7:
            rel = abs(fit.constant / 0.28 - 1)
            ok &= rel < 0.05
            details.append(f"constant {fit.constant:.4f} vs 0.28 ({rel:.1%})")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 30
    report(4, ok, ", ".join(details) + f", runtime {elapsed:.1f}s")
    assert ok


def test_criterion_5_short_lag(report):
    lags = np.geomspace(1e-4, 1e-2, 9)
    details, ok = [], True
    for H in (0.3, 0.7):
        fit = fit_power_law(complementary_acf(TruncPower(1.0, 0.0, H), 1.0, lags), (1e-4, 1e-2))
        ok &= abs(fit.exponent - 2 * H) < 0.05
        details.append(f"delta=0 H={H}: {fit.exponent:.3f}")
    for r0, delta, H in ((2.0, 0.5, 0.7), (1.0, 1.0, 0.3)):
        kern = TruncPower(r0, delta, H)
        fit = fit_power_law(complementary_acf(kern, 1.0, lags), (1e-4, 1e-2))
        pred = acf_short_lag_prediction(PMANoise(kern, LevyTriplet.brownian()))
        assert abs(pred.constant - r0 ** 2 * delta ** (2 * H - 1) / 2) < 1e-12
        rel = abs(fit.constant / pred.constant - 1)
        ok &= abs(fit.exponent - 1) < 0.05 and rel < 0.05
        details.append(f"delta={delta} H={H}: {fit.exponent:.3f}, constant off {rel:.2%}")
    report(5, ok, "; ".join(details))
    assert ok


def test_criterion_6_indicator_control():
    res = cancellation_integral(Indicator(), 1.0, 1e3)
    assert abs(res.closed_form - 1.0) < 1e-8
    assert abs(res.quadrature - 1.0) < 1e-8


@pytest.mark.xfail(strict=True, reason="int_0^T psi decays like T**(H - 1/2); at T = 1e3 the ratio is ~0.17, "
                                       "see the cancellation analysis in the README")
def test_criterion_6_cancellation(report):
    res = cancellation_integral(fractional_kernel(0.3), 1.0, 1e3)
    ind = cancellation_integral(Indicator(), 1.0, 1e3)
    ratio = abs(res.quadrature) / res.abs_integral
    ind_ok = abs(ind.closed_form - 1.0) < 1e-8
    ok = ratio < 1e-2 and ind_ok
    report(6, ok, f"|int psi| / int |psi| = {ratio:.3f} at T=1e3 (target < 1e-2, unattainable: "
                  f"decays like T^-0.2); indicator 1/lam within 1e-8: {ind_ok}")
    assert ok


def test_criterion_7_stability(report):
    t0 = time.perf_counter()
    low = stability_experiment(0.3, 1.0, unit_bump())
    high = stability_experiment(0.7, 1.0, unit_bump())
    ok = (abs(low.perturbed.exponent + 1.2) < 0.08 and abs(low.unperturbed.exponent + 1.4) < 0.08
          and abs(low.ratio.exponent - 0.2) < 0.08
          and abs(high.perturbed.exponent + 0.6) < 0.05 and abs(high.unperturbed.exponent + 0.6) < 0.05)
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 60
    report(7, ok, f"H=0.3: perturbed {low.perturbed.exponent:.3f}, unperturbed {low.unperturbed.exponent:.3f}, "
                  f"ratio {low.ratio.exponent:.3f}; H=0.7: {high.perturbed.exponent:.3f} / "
                  f"{high.unperturbed.exponent:.3f}; window {low.window}, runtime {elapsed:.1f}s")
    assert ok


def test_criterion_8_constants(report):
    ka = np.linspace(-0.98, -0.52, 20)
    ja = np.linspace(-0.48, 0.48, 20)
    dk = max(abs(k_alpha(a) - k_alpha(a, method="quadrature")) / k_alpha(a) for a in ka)
    dj = max(abs(j_alpha(a) - j_alpha(a, method="quadrature")) / j_alpha(a) for a in ja)
    j0 = max(abs(j_alpha(0.0) - 1), abs(j_alpha(0.0, method="quadrature") - 1))
    ok = dk < 1e-6 and dj < 1e-6 and j0 < 1e-12
    report(8, ok, f"k_alpha max rel gap {dk:.1e}, j_alpha max rel gap {dj:.1e}, |j_0 - 1| = {j0:.1e}")
    assert ok


def test_criterion_9_fubini(report):
    t0 = time.perf_counter()
    grid = TimeGrid.span(0.0, 1.0, 0.05)
    step = fubini_check(WeightedBivariateKernel.unit_step(), LevyTriplet.brownian(), grid, 3, 500)
    smooth = fubini_check(WeightedBivariateKernel.exp_triangle(), LevyTriplet.brownian(), grid, 3, 500,
                          halvings=3)
    elapsed = time.perf_counter() - t0
    ok = step.max_gap == 0.0 and smooth.refinement_slope >= 0.4 and elapsed < 60
    report(9, ok, f"step kernel max gap {step.max_gap!r}; smooth kernel slope {smooth.refinement_slope:.2f} "
                  f"(>= 0.4), runtime {elapsed:.1f}s")
    assert ok


def route_gaps(H, rule, n_paths=40, seed=7):
    """Mean pathwise max gap between the two constructions on four nested grids (finest first)."""
    lam, T, trunc = 1.0, 4.0, 40.0
    cfg = QouConfig(lam, burn_in=25.0, tol=1e-10)
    kernel = fractional_kernel(H)
    fine = TimeGrid.span(0.0, T, 0.01 / 8).extend_past(trunc + cfg.burn_in)
    inc = sample_levy_increments(LevyTriplet.brownian(), fine, seed, n_paths=n_paths)
    steps, gaps = [], []
    for _ in range(4):
        g = inc.grid
        ngrid = g.nonnegative().extend_past(cfg.burn_in)
        N = Path(ngrid, pma_from_increments(kernel, inc, ngrid, rule=rule))
        X1 = qou_from_noise(N, cfg)
        psi = psi_transform(kernel, lam, g.step * np.arange(g.count))
        X2 = qou_ma_path(psi, inc, (g.count - X1.grid.count) * g.step, out_grid=X1.grid, check=False, rule=rule)
        steps.append(g.step)
        gaps.append(float(np.mean(np.max(np.abs(X1.values - X2.values), axis=1))))
        inc = inc.coarsen(2)
    return np.array(steps), np.array(gaps)


def test_criterion_10_route_equivalence(report):
    details, ok = [], True
    for H in (0.3, 0.7):
        _, gaps = route_gaps(H, "left-point")
        ratios = gaps[:-1] / gaps[1:]
        ok &= bool(np.all((ratios >= 0.4) & (ratios <= 0.6)))
        details.append(f"H={H}: gap ratios per halving {np.round(ratios, 3).tolist()}")
    report(10, ok, "; ".join(details) + " (band 0.5 +- 20%, left-point kernel evaluation)")
    assert ok


def test_criterion_11_stable_existence(report):
    H, alpha, lam = 0.4, 1.5, 1.0
    kernel = fractional_kernel(H, alpha=alpha)
    driver = LevyTriplet.stable(alpha)
    adm = pma_admissibility(kernel, ModularSpec(driver), 1.0)
    cfg = QouConfig(lam, tol=1e-6)
    finite, residuals = True, []
    for step in (0.01, 0.005, 0.0025):
        grid = TimeGrid.span(0.0, 2.0, step).extend_past(cfg.burn_in)
        N = simulate_pma(kernel, driver, grid, 50.0, 5, n_paths=20, far_field=True)
        X = qou_from_noise(N, cfg)
        finite &= bool(np.all(np.isfinite(N.values)) and np.all(np.isfinite(X.values)))
        residuals.append(float(np.median(langevin_residual(X, N, lam, per_path=True))))
    decreasing = all(b < a for a, b in zip(residuals, residuals[1:]))
    ok = adm.admissible and finite and decreasing
    report(11, ok, f"admissible {adm.admissible}, finite {finite}, median residuals "
                   f"{[f'{r:.1e}' for r in residuals]}")
    assert ok


def test_criterion_12_growth_bound(report):
    details, ok = [], True
    grid = TimeGrid.span(0.0, 5.0, 0.01)
    for H in (0.2, 0.8):
        ens = simulate_fbm(H, 1.0, grid, 12, n_paths=2000)
        rep = lp_growth_check(ens, 2.0)
        ok &= rep.violations == 0
        details.append(f"H={H}: alpha {rep.alpha:.3f}, beta {rep.beta:.3f}, violations {rep.violations}")
    report(12, ok, "; ".join(details))
    assert ok
