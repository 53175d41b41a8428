"""Quadrature primitives.

Two tools cover every integral in the package:

* :func:`adaptive` wraps QUADPACK's adaptive Gauss-Kronrod rules
  (``scipy.integrate.quad``), switching to the algebraic-weight rule when
  an endpoint carries a known power singularity.
* :class:`PanelRule` is a composite Gauss-Legendre rule on geometrically
  graded panels.  Nodes are fixed, so vectorised integrands are evaluated
  once per call and the same nodes can be reused across many integrals.
"""

import warnings

import numpy as np
from scipy import integrate

from .exceptions import NumericError

EPSABS = 1e-10
EPSREL = 1e-8

_GL_CACHE = {}


def _legendre(order):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def adaptive(func, a, b, *, points=None, left_power=None, right_power=None,
             epsabs=EPSABS, epsrel=EPSREL, limit=400, module="quadrature"):
    """Adaptive integral of ``func`` over ``[a, b]``.

    Parameters
    ----------
    func : callable
        Scalar integrand.
    a, b : float
        Limits; ``b`` may be ``np.inf``.
    points : sequence of float, optional
        Interior breakpoints (kinks, jumps).  The interval is split there.
    left_power, right_power : float, optional
        If given, the integrand behaves like ``(x - a)**left_power`` near
        ``a`` (resp. ``(b - x)**right_power`` near ``b``).  ``func`` must
        then return the *regular* factor only, and the algebraic-weight
        rule QAWS integrates the product.

    Returns
    -------
    float

    Raises
    ------
    NumericError
        If the achieved error estimate exceeds the tolerance.
    """
    if a == b:
        return 0.0
    if left_power is not None or right_power is not None:
        if not np.isfinite(b):
            raise ValueError("algebraic weights need finite limits")
        wvar = (0.0 if left_power is None else left_power,
                0.0 if right_power is None else right_power)
        val, err = _run(integrate.quad, func, a, b, weight="alg", wvar=wvar,
                        epsabs=epsabs, epsrel=epsrel, limit=limit)
    elif points is not None and len(points) and np.isfinite(b):
        pts = [p for p in sorted(set(points)) if a < p < b]
        val, err = _run(integrate.quad, func, a, b, points=pts or None,
                        epsabs=epsabs, epsrel=epsrel, limit=limit)
    elif points is not None and len(points):
        pts = [p for p in sorted(set(points)) if a < p]
        edges = [a] + pts
        val = err = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            v, e = _run(integrate.quad, func, lo, hi, epsabs=epsabs, epsrel=epsrel, limit=limit)
            val += v
            err += e
        v, e = _run(integrate.quad, func, edges[-1], b, epsabs=epsabs, epsrel=epsrel, limit=limit)
        val += v
        err += e
    else:
        val, err = _run(integrate.quad, func, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
    if not np.isfinite(val) or err > max(epsabs, epsrel * abs(val)) * 50:
        raise NumericError(
            f"quadrature on [{a}, {b}] did not converge: value {val:.6g}, "
            f"achieved error {err:.3g}", module=module)
    return float(val)


def _run(fn, *args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return fn(*args, **kwargs)


class PanelRule:
    """Composite Gauss-Legendre rule over given panel edges.

    Parameters
    ----------
    edges : array_like
        Increasing panel boundaries.
    order : int
        Gauss-Legendre points per panel.
    """

    def __init__(self, edges, order=20):
        edges = np.unique(np.asarray(edges, dtype=float))
        x, w = _legendre(order)
        a, b = edges[:-1, None], edges[1:, None]
        self.edges = edges
        self.nodes = ((a + b) / 2 + (b - a) / 2 * x).ravel()
        self.weights = ((b - a) / 2 * w).ravel()

    def __call__(self, values):
        return float(np.dot(self.weights, values))

    def integrate(self, func):
        return self(func(self.nodes))

    @classmethod
    def graded(cls, lo, hi, *, floor, breakpoints=(), ratio=2.0, order=20):
        """Rule on ``[lo, hi]`` graded geometrically towards ``lo``.

        Panel edges are ``lo + floor * ratio**k``, which resolves an
        algebraic singularity at ``lo`` on every scale down to ``floor``;
        the piece ``[lo, lo + floor]`` gets a single panel.
        """
        span = hi - lo
        if span <= 0:
            raise ValueError("empty interval")
        k = max(1, int(np.ceil(np.log(span / floor) / np.log(ratio))))
        edges = lo + floor * ratio ** np.arange(k + 1)
        edges = np.concatenate([[lo], edges[edges < hi], [hi]])
        extra = [p for p in breakpoints if lo < p < hi]
        return cls(np.concatenate([edges, extra]), order=order)
