"""Special functions for exponentially damped power integrals.

The central object is

    M(beta, x) = exp(-x) * integral_0^x exp(v) v**beta dv,   beta > -1,

together with ``h(beta, x) = x**beta - M(beta, x)``.  Scaled versions of
these give the moving-average kernel and its running integral for power
noise kernels in closed form.

For ``x < 40`` the Kummer form ``M = x**(beta+1) e^{-x} sum_k x^k / (k! (beta+1+k))``
is summed directly; all terms are positive, so there is no cancellation.
For ``x >= 40`` the asymptotic expansion
``h ~ x**beta * sum_{k>=1} (-1)**(k+1) beta(beta-1)...(beta-k+1) x**(-k)``
is used; its smallest term is ``O(e^{-40})`` relative.
"""

import numpy as np

_SWITCH = 40.0
_SERIES_TERMS = 170
_ASYM_TERMS = 40


def _kummer_sum(beta, x):
    term = np.ones_like(x)
    total = term / (beta + 1.0)
    for k in range(1, _SERIES_TERMS):
        term = term * x / k
        total = total + term / (beta + 1.0 + k)
    return x ** (beta + 1.0) * np.exp(-x) * total


def _h_asymptotic(beta, x):
    total = np.zeros_like(x)
    falling = 1.0
    inv = 1.0 / x
    power = np.ones_like(x)
    for k in range(1, _ASYM_TERMS):
        falling *= beta - k + 1.0
        power = power * inv
        if falling == 0.0:
            break
        total = total + (-1.0) ** (k + 1) * falling * power
    return x ** beta * total


def damped_power_integral(beta, x):
    """``M(beta, x)``, vectorised over ``x >= 0``."""
    if beta <= -1:
        raise ValueError("beta must exceed -1")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    small = (x > 0) & (x < _SWITCH)
    large = x >= _SWITCH
    out[small] = _kummer_sum(beta, x[small])
    out[large] = x[large] ** beta - _h_asymptotic(beta, x[large])
    return out


def damped_power_residual(beta, x):
    """``h(beta, x) = x**beta - M(beta, x)`` for ``x > 0``; zero elsewhere.

    Accurate without cancellation for large ``x``, where ``h`` is of order
    ``beta * x**(beta-1)``.
    """
    if beta <= -1:
        raise ValueError("beta must exceed -1")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    small = (x > 0) & (x < _SWITCH)
    large = x >= _SWITCH
    xs = x[small]
    out[small] = xs ** beta - _kummer_sum(beta, xs)
    out[large] = _h_asymptotic(beta, x[large])
    return out
