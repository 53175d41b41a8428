import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasiou.special import damped_power_integral, damped_power_residual


def mp_M(beta, x):
    # confluent hypergeometric form, independent of the series used by the library
    b = mp.mpf(beta) + 1
    return float(mp.mpf(x) ** b * mp.e ** (-x) * mp.hyp1f1(b, b + 1, x) / b)


@pytest.mark.parametrize("beta", [-0.8, -0.3, 0.0, 0.4, 1.7])
@pytest.mark.parametrize("x", [1e-3, 0.5, 5.0, 39.9, 40.0, 80.0])
def test_damped_integral_matches_mpmath(beta, x):
    got = float(damped_power_integral(beta, np.array([x]))[0])
    assert got == pytest.approx(mp_M(beta, x), rel=1e-12)


@pytest.mark.parametrize("beta", [-0.6, 0.3])
@pytest.mark.parametrize("x", [45.0, 200.0, 1e4])
def test_residual_large_argument(beta, x):
    with mp.workdps(60):
        b = mp.mpf(beta) + 1
        exact = mp.mpf(x) ** beta - mp.mpf(x) ** b * mp.e ** (-x) * mp.hyp1f1(b, b + 1, x) / b
    got = float(damped_power_residual(beta, np.array([x]))[0])
    assert got == pytest.approx(float(exact), rel=1e-10)


def test_zero_argument_and_domain():
    assert damped_power_integral(0.5, np.array([0.0]))[0] == 0.0
    with pytest.raises(ValueError):
        damped_power_integral(-1.0, np.array([1.0]))


def test_beta_zero_is_one_minus_exp():
    x = np.linspace(0.01, 100, 50)
    assert np.allclose(damped_power_integral(0.0, x), -np.expm1(-x), rtol=1e-13, atol=0)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.95, 2.0), st.floats(0.01, 60.0))
def test_ode_identity(beta, x):
    # M' = x**beta - M, checked by a central difference
    h = 1e-5 * x
    d = (damped_power_integral(beta, np.array([x + h]))[0] - damped_power_integral(beta, np.array([x - h]))[0]) / (2 * h)
    resid = damped_power_residual(beta, np.array([x]))[0]
    assert d == pytest.approx(resid, rel=1e-4, abs=1e-8)
