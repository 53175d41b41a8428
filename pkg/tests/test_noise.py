import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasiou.drivers import LevyTriplet, sample_levy_increments
from quasiou.exceptions import QouError, TruncationError
from quasiou.grid import TimeGrid
from quasiou.kernels import Indicator, TruncPower, fractional_kernel
from quasiou.noise import (FBMNoise, PMANoise, circulant_eigenvalues, fgn_autocovariance, kernel_weights,
                           pma_from_increments, simulate_fbm, simulate_noise, simulate_pma, variance_function)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.02, 0.98), st.integers(4, 12))
def test_circulant_embedding_nonnegative(H, log_m):
    eig = circulant_eigenvalues(H, 2 ** log_m)
    assert np.min(eig) > -1e-10 * np.max(eig)


def test_fgn_autocovariance_closed_form():
    H = 0.7
    k = np.arange(5)
    expect = 0.5 * (np.abs(k + 1) ** (2 * H) - 2 * k ** (2 * H) + np.abs(k - 1) ** (2 * H))
    assert np.allclose(fgn_autocovariance(H, k), expect)


@pytest.mark.parametrize("H", [0.3, 0.7])
def test_fbm_variance_and_increments(H):
    grid = TimeGrid.span(0, 2, 0.01)
    B = simulate_fbm(H, 1.5, grid, 5, n_paths=3000).values
    assert np.all(B[:, 0] == 0)
    n = B.shape[0]
    for j in (50, 200):
        v = B[:, j].var()
        assert abs(v / (1.5 ** 2 * grid.times[j] ** (2 * H)) - 1) < 5 * np.sqrt(2 / n)
    inc = np.diff(B, axis=1)
    # lag-one correlation of increments
    rho = np.mean(inc[:, :-1] * inc[:, 1:]) / np.mean(inc ** 2)
    assert rho == pytest.approx(2 ** (2 * H - 1) - 1, abs=0.03)


def test_fbm_seeded_and_path_addressable():
    grid = TimeGrid.span(0, 1, 0.01)
    a = simulate_fbm(0.3, 1.0, grid, 9, n_paths=4).values
    b = simulate_fbm(0.3, 1.0, grid, 9, n_paths=4).values
    assert np.array_equal(a, b)


def test_indicator_pma_is_brownian_motion():
    grid = TimeGrid.span(0, 1, 0.01).extend_past(1.0)
    inc = sample_levy_increments(LevyTriplet.brownian(), grid, 4, n_paths=3)
    out = grid.nonnegative()
    N = pma_from_increments(Indicator(), inc, out)
    Z = np.cumsum(inc.values[:, grid.zero_index:], axis=1)
    assert np.allclose(N[:, 1:], Z, atol=1e-12)
    assert np.all(N[:, 0] == 0)


def test_kernel_weights_rules():
    k = TruncPower(1.0, 0.0, 0.7)
    h = 0.1
    cell = kernel_weights(k, h, 4)
    left = kernel_weights(k, h, 4, rule="left-point")
    assert np.allclose(left, k(h * np.arange(1, 5)))
    # cell averages of u**0.2 on [(j-1)h, jh]
    j = np.arange(1, 5)
    expect = ((j * h) ** 1.2 - ((j - 1) * h) ** 1.2) / (1.2 * h)
    assert np.allclose(cell, expect, rtol=1e-10)
    with pytest.raises(QouError):
        kernel_weights(k, h, 4, rule="midpoint")


def test_pma_variance_matches_variance_function():
    k = TruncPower(1.0, 0.5, 0.7)
    grid = TimeGrid.span(0, 1, 0.01)
    N = simulate_pma(k, LevyTriplet.brownian(), grid, 60.0, 3, n_paths=2000, far_field=True).values
    t = np.array([0.5, 1.0])
    v = variance_function(PMANoise(k, LevyTriplet.brownian()), t)
    emp = N[:, [50, 100]].var(axis=0)
    assert np.all(np.abs(emp / v - 1) < 5 * np.sqrt(2 / N.shape[0]))


def test_short_truncation_is_refused():
    with pytest.raises(TruncationError) as info:
        simulate_pma(fractional_kernel(0.3), LevyTriplet.brownian(), TimeGrid.span(0, 1, 0.01), 2.0, 1,
                     n_paths=2, tol=1e-6)
    assert info.value.suggested is None or info.value.suggested > 2.0


def test_fbm_variance_function():
    t = np.array([0.5, 2.0])
    assert np.allclose(variance_function(FBMNoise(0.3, 2.0), t), 4.0 * t ** 0.6)


def test_simulate_noise_dispatch():
    grid = TimeGrid.span(0, 1, 0.05)
    a = simulate_noise(FBMNoise(0.7), grid, 1, n_paths=2).values
    assert np.array_equal(a, simulate_fbm(0.7, 1.0, grid, 1, n_paths=2).values)
