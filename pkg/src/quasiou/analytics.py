"""Second-order analytics of stationary Langevin solutions.

Exact quantities (stationary moments, autocovariance from the
moving-average kernel, the constants ``k_alpha`` and ``j_alpha``) come
with an independent second route so each can be cross-checked; the
empirical side provides an ensemble autocovariance estimator with
jackknife errors and log-log power-law fits.

Every asymptotic prediction carries a ``source`` tag naming the law that
produced it:

``"variance-curvature"``
    ``r_X(t) ~ V_N''(t) / (2 lam**2)`` for noise with a closed-form
    variance function.
``"kernel-derivative"``
    ``r_X(t) ~ c**2 k_alpha / lam**2 * t**(2 alpha + 1)`` when the noise
    kernel derivative behaves like ``c t**alpha`` with
    ``alpha in (-1, -1/2)``.
``"variance-short-lag"``
    ``rbar_X(t) ~ V_N(t) / 2`` as ``t -> 0``.
``"kernel-short-lag"``
    ``rbar_X(t) ~ c**2 j_beta / 2 * t**(2 beta + 1)`` for a kernel
    ``c t**beta`` near 0.
``"kernel-jump"``
    ``rbar_X(t) ~ f(0+)**2 / 2 * t`` for a kernel with a jump at 0.
``"estimator"``
    Fitted from data or quadrature output.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import gamma, gammaln

from .exceptions import (DomainError, GridError, IntegrabilityError, NumericError, ParameterError,
                         PreconditionError, UnsupportedMomentError, UnsupportedSpecError)
from .kernels import (Indicator, KernelSpec, MovingAverageKernel, Power, Tabulated, TruncPower,
                      _check_lambda, c_H_constant, fractional_kernel)
from .noise import DriftNoise, FBMNoise, PMANoise, SVNoise, noise_mean_slope, variance_function
from .quadrature import PanelRule, adaptive

_REL = 1e-9


# --------------------------------------------------------------------------- curves


@dataclass
class CovarianceCurve:
    """Autocovariance ``r_X`` or complementary ``rbar_X = r_X(0) - r_X`` on a set of lags.

    Attributes
    ----------
    lags, values : ndarray
    kind : {"acf", "complementary"}
    source : {"theoretical", "empirical"}
    se : ndarray or None
        Jackknife standard errors (empirical curves).
    n_paths : int or None
    complementary : CovarianceCurve or None
        The companion ``rbar_X`` of a theoretical ``r_X`` curve.
    """

    lags: np.ndarray
    values: np.ndarray
    kind: str = "acf"
    source: str = "theoretical"
    se: Optional[np.ndarray] = None
    n_paths: Optional[int] = None
    complementary: Optional["CovarianceCurve"] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lags = np.atleast_1d(np.asarray(self.lags, dtype=float))
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if self.lags.shape != self.values.shape:
            raise ParameterError("lags and values differ in shape", module="analytics")
        if np.any(self.lags < 0) or np.any(np.diff(self.lags) <= 0):
            raise ParameterError("lags must be nonnegative and increasing", module="analytics")
        if self.kind not in ("acf", "complementary"):
            raise ParameterError(f"unknown curve kind {self.kind!r}", module="analytics")
        if self.se is not None:
            self.se = np.atleast_1d(np.asarray(self.se, dtype=float))

    def restrict(self, lo, hi):
        sel = (self.lags >= lo * (1 - _REL)) & (self.lags <= hi * (1 + _REL))
        se = None if self.se is None else self.se[sel]
        return CovarianceCurve(self.lags[sel], self.values[sel], self.kind, self.source, se, self.n_paths)

    def rows(self, series_id):
        """Long-format rows ``(series_id, lag, value, se)``."""
        se = self.se if self.se is not None else np.full(self.lags.shape, np.nan)
        return [(series_id, float(t), float(v), float(s)) for t, v, s in zip(self.lags, self.values, se)]


class AsymptoticFit(NamedTuple):
    """``values ~ sign * exp(log_constant) * t**exponent`` on ``window``."""

    exponent: float
    log_constant: float
    window: tuple
    residual: float
    sign: float = 1.0

    @property
    def constant(self):
        return float(self.sign * np.exp(self.log_constant))

    def to_dict(self):
        return {"exponent": self.exponent, "constant": self.constant, "window": list(self.window),
                "residual": self.residual, "source": "estimator"}


class Prediction(NamedTuple):
    """Predicted power law ``constant * t**exponent``.

    ``status`` is ``"ok"``, ``"exponential"`` (no power law: the curve
    decays exponentially) or ``"unavailable"`` (no law is known for this
    case); ``exponent`` and ``constant`` are ``None`` unless ``"ok"``.
    """

    exponent: Optional[float]
    constant: Optional[float]
    source: str
    status: str = "ok"

    def to_dict(self):
        return dict(self._asdict())


class Moments(NamedTuple):
    mean: float
    variance: float


# --------------------------------------------------------------------------- stationary moments


def fbm_stationary_variance(H, sigma, lam):
    """Closed form ``sigma**2 Gamma(1 + 2H) / (2 lam**(2H))``."""
    return float(sigma ** 2 * gamma(1 + 2 * H) / (2 * lam ** (2 * H)))


def _laplace(V, lam, small_power=None, regular=None):
    """``int_0^inf e^{-lam s} V(s) ds``.

    With ``small_power`` and ``regular`` given, ``V(s) = s**small_power * regular(s)``
    on the first piece and the algebraic-weight rule integrates it.
    """
    a = 1.0 / lam
    tail = np.array([20.0, 40.0, 80.0]) / lam
    w = np.array([np.exp(-lam * s) * float(V(s)) for s in tail])
    if not np.all(np.isfinite(w)) or (abs(w[0]) > 0 and not abs(w[2]) < abs(w[1]) < abs(w[0])):
        raise DomainError("variance function grows at least like exp(lam t); the stationary variance"
                          " is infinite", module="analytics")
    try:
        if small_power is not None:
            head = adaptive(lambda s: np.exp(-lam * s) * regular(s), 0.0, a, left_power=small_power,
                            epsabs=0.0, epsrel=1e-12, module="analytics")
        else:
            head = adaptive(lambda s: np.exp(-lam * s) * float(V(s)), 0.0, a, epsabs=1e-13,
                            epsrel=1e-10, module="analytics")
        rest = adaptive(lambda s: np.exp(-lam * s) * float(V(s)), a, np.inf, epsabs=1e-13,
                        epsrel=1e-11, module="analytics")
    except NumericError as exc:
        raise DomainError(f"Laplace integral of the variance function failed: {exc}",
                          module="analytics") from None
    return head + rest


def stationary_moments(spec, lam, *, method="quadrature"):
    """Mean and variance of the stationary solution ``X_0``.

    ``E X_0 = E[N_1] / lam`` and ``Var X_0 = lam/2 int_0^inf e^{-lam s} V_N(s) ds``.

    Parameters
    ----------
    spec : noise spec or callable
        A callable is taken as the variance function ``V_N`` of driftless
        noise.
    lam : float
    method : {"quadrature", "closed-form"}
        ``"closed-form"`` is available for fBm (with or without drift).

    Returns
    -------
    Moments

    Raises
    ------
    UnsupportedMomentError
        Stable drivers with ``alpha < 2``.
    DomainError
        If the Laplace integral diverges.
    """
    lam = _check_lambda(lam)
    base = spec.base if isinstance(spec, DriftNoise) else spec
    mean = noise_mean_slope(spec) / lam if not callable(spec) else 0.0
    if method == "closed-form":
        if not isinstance(base, FBMNoise):
            raise UnsupportedSpecError("closed-form variance is available for fBm noise only",
                                       module="analytics")
        return Moments(mean, fbm_stationary_variance(base.H, base.sigma, lam))
    if method != "quadrature":
        raise ParameterError(f"unknown method {method!r}", module="analytics")
    if callable(spec) and not isinstance(spec, (FBMNoise, PMANoise, SVNoise, DriftNoise)):
        return Moments(mean, 0.5 * lam * _laplace(spec, lam))
    if isinstance(base, PMANoise) and not base.driver.finite_variance:
        raise UnsupportedMomentError("stationary variance is infinite for a stable driver with alpha < 2",
                                     module="analytics")
    V = lambda s: variance_function(base, s)
    if isinstance(base, FBMNoise):
        sig2 = base.sigma ** 2
        return Moments(mean, 0.5 * lam * _laplace(V, lam, 2 * base.H, lambda s: sig2))
    return Moments(mean, 0.5 * lam * _laplace(V, lam))


# --------------------------------------------------------------------------- theoretical ACF


def _as_ma_kernel(kernel, lam):
    if isinstance(kernel, MovingAverageKernel):
        if lam is not None and abs(lam - kernel.lam) > _REL * kernel.lam:
            raise ParameterError("lambda differs from the moving-average kernel's", module="analytics")
        return kernel
    if isinstance(kernel, KernelSpec):
        return MovingAverageKernel.from_noise_kernel(kernel, lam)
    raise ParameterError("expected a KernelSpec or MovingAverageKernel", module="analytics")


_FLOOR = 1e-14
_FAR = 1e6


class _LagQuadrature:
    """Composite rule for ``int_0^inf F(s) ds`` with ``F`` built from ``psi``.

    Panels are graded geometrically from ``floor`` to ``S`` (plus kernel
    breakpoints); the first panel ``[0, floor]`` is integrated assuming
    ``F(s) ~ F(floor) (s/floor)**p`` and the piece beyond ``S`` uses the
    tail asymptote of ``psi``.
    """

    def __init__(self, psi, lag):
        self.psi = psi
        lam = psi.lam
        scale = max(lag, 1.0 / lam)
        self.floor = _FLOOR * scale
        self.S = _FAR * scale
        shifted = [b - lag for b in psi.breakpoints if b - lag > 0]
        pts = [b for b in psi.breakpoints if 0 < b < self.S] + [b for b in shifted if b < self.S]
        if 0 < lag < self.S:
            pts.append(lag)
        self.rule = PanelRule.graded(0.0, self.S, floor=self.floor, breakpoints=pts)
        first = self.rule.edges[1]
        keep = self.rule.nodes > first
        self.nodes = self.rule.nodes[keep]
        self.weights = self.rule.weights[keep]
        self.first = first

    def head(self, F, p):
        """``int_0^first F`` for ``F ~ s**p`` there."""
        if p is None:
            p = 0.0
        if p <= -1:
            raise IntegrabilityError("integrand is not integrable at 0", module="analytics")
        return float(F(np.array([self.first]))[0]) * self.first / (p + 1.0)

    def body(self, F):
        return float(np.dot(self.weights, F(self.nodes)))


def _tail_product(C, e, S, t):
    """``C**2 int_S^inf s**e (s + t)**e ds`` for ``t << S``, ``e < -1/2``."""
    return C * C * (S ** (2 * e + 1) / (-2 * e - 1) + e * t * S ** (2 * e) / (-2 * e))


def _tail_difference(C, e, S, t):
    """``C**2 int_S^inf ((s + t)**e - s**e)**2 ds`` to leading order."""
    return C * C * e * e * t * t * S ** (2 * e - 1) / (1 - 2 * e)


def _check_square_integrable(psi):
    e, _ = psi.tail
    if e is not None and e >= -0.5:
        raise IntegrabilityError(f"psi decays like t**{e:g}, which is not square integrable",
                                 module="analytics")
    b = psi.singular_exponent
    if b is not None and b <= -0.5:
        raise IntegrabilityError(f"psi behaves like t**{b:g} at 0, which is not square integrable",
                                 module="analytics")


def _acf_value(psi, t):
    q = _LagQuadrature(psi, t)
    e, C = psi.tail
    b = psi.singular_exponent
    F = lambda s: psi(s + t) * psi(s)
    val = q.head(F, (2 * b if t == 0 else b) if b is not None and b < 0 else 0.0) + q.body(F)
    if e is not None:
        val += _tail_product(C, e, q.S, t)
    return val


def _complementary_value(psi, t):
    """``rbar(t) = 1/2 int_0^t psi**2 + 1/2 int_0^inf (psi(t+s) - psi(s))**2``, no cancellation."""
    if t == 0:
        return 0.0
    b = psi.singular_exponent
    p2 = 2 * b if b is not None and b < 0 else 0.0
    near = PanelRule.graded(0.0, t, floor=_FLOOR * t, breakpoints=[x for x in psi.breakpoints if 0 < x < t])
    keep = near.nodes > near.edges[1]
    sq = lambda s: psi(s) ** 2
    first = near.edges[1]
    part1 = float(sq(np.array([first]))[0]) * first / (p2 + 1) + float(np.dot(near.weights[keep],
                                                                              sq(near.nodes[keep])))
    q = _LagQuadrature(psi, t)
    D = lambda s: (psi(s + t) - psi(s)) ** 2
    part2 = q.head(D, p2) + q.body(D)
    e, C = psi.tail
    if e is not None:
        part2 += _tail_difference(C, e, q.S, t)
    return 0.5 * (part1 + part2)


def theoretical_acf(kernel, lam, lags, *, variance=1.0):
    """``r_X(t) = Var(Z_1) int_0^inf psi(t + s) psi(s) ds`` and its complement.

    Parameters
    ----------
    kernel : KernelSpec or MovingAverageKernel
        A noise kernel (transformed with ``lam``) or ``psi`` itself.
    lam : float or None
        Ignored (may be ``None``) for a :class:`MovingAverageKernel`.
    lags : array_like
        Nonnegative, increasing.
    variance : float
        ``Var(Z_1)`` of the driver.

    Returns
    -------
    CovarianceCurve
        ``kind="acf"``, with ``complementary`` holding ``rbar_X``
        computed directly from ``psi`` (not by subtraction).

    Raises
    ------
    IntegrabilityError
        If ``psi`` is not square integrable.
    """
    psi = _as_ma_kernel(kernel, lam)
    if not np.isfinite(variance) or variance < 0:
        raise UnsupportedMomentError("driver variance must be finite", module="analytics")
    _check_square_integrable(psi)
    lags = np.atleast_1d(np.asarray(lags, dtype=float))
    r = np.array([_acf_value(psi, t) for t in lags]) * variance
    rbar = np.array([_complementary_value(psi, t) for t in lags]) * variance
    meta = {"lambda": psi.lam, "kernel": psi.label, "variance": float(variance)}
    comp = CovarianceCurve(lags, rbar, "complementary", "theoretical", meta=dict(meta))
    return CovarianceCurve(lags, r, "acf", "theoretical", complementary=comp, meta=meta)


def complementary_acf(kernel, lam, lags, *, variance=1.0):
    """``rbar_X`` alone; see :func:`theoretical_acf`."""
    psi = _as_ma_kernel(kernel, lam)
    _check_square_integrable(psi)
    lags = np.atleast_1d(np.asarray(lags, dtype=float))
    vals = np.array([_complementary_value(psi, t) for t in lags]) * variance
    return CovarianceCurve(lags, vals, "complementary", "theoretical",
                           meta={"lambda": psi.lam, "kernel": psi.label, "variance": float(variance)})


def _noise_kernel(spec):
    """``(kernel, variance)`` representing ``spec`` as a moving average of a finite-variance driver."""
    if isinstance(spec, DriftNoise):
        return _noise_kernel(spec.base)
    if isinstance(spec, FBMNoise):
        return fractional_kernel(spec.H), spec.sigma ** 2
    if isinstance(spec, SVNoise):
        return Indicator(), spec.vol.second_moment
    if isinstance(spec, PMANoise):
        if not spec.driver.finite_variance:
            raise UnsupportedMomentError("autocovariance is undefined for a stable driver with alpha < 2",
                                         module="analytics")
        return spec.kernel, spec.driver.second_moment
    raise UnsupportedSpecError(f"no moving-average representation for {spec!r}", module="analytics")


def noise_acf(spec, lam, lags):
    """Theoretical autocovariance of the stationary solution driven by ``spec``.

    fBm is represented by the fractional kernel with a Brownian driver;
    volatility-modulated Brownian noise has uncorrelated increments, so
    its solution has the autocovariance of an OU process with
    ``Var(Z_1) = E sigma**2``.
    """
    kernel, var = _noise_kernel(spec)
    return theoretical_acf(kernel, lam, lags, variance=var)


# --------------------------------------------------------------------------- empirical ACF


def empirical_acf(ens, lags):
    """Ensemble autocovariance with jackknife standard errors.

    For lag ``h`` the cross-sectional covariance of ``(X_{t0+h}, X_{t0})``
    over the ``m`` paths is averaged over every admissible ``t0``; the
    standard error is the delete-one-path jackknife of that average.

    Parameters
    ----------
    ens : PathEnsemble
        ``m >= 2`` paths.
    lags : array_like
        Lags on the grid, smaller than the grid span.

    Returns
    -------
    CovarianceCurve
    """
    X = np.atleast_2d(np.asarray(ens.values, dtype=float))
    m, n = X.shape
    if m < 2:
        raise ParameterError("an empirical autocovariance needs at least two paths", module="analytics")
    step = ens.grid.step
    lags = np.atleast_1d(np.asarray(lags, dtype=float))
    idx = np.rint(lags / step).astype(int)
    if np.any(np.abs(idx * step - lags) > 1e-6 * step) or np.any(idx < 0):
        raise GridError("lags must be nonnegative multiples of the grid step", module="analytics")
    if np.any(idx >= n):
        raise GridError(f"lag {lags[idx >= n][0]:g} exceeds the grid span {step * (n - 1):g}",
                        module="analytics")
    X = X - X.mean(axis=0)
    est = np.empty(lags.shape)
    se = np.empty(lags.shape)
    for i, k in enumerate(idx):
        A, B = X[:, k:], X[:, :n - k]
        Sab, Sa, Sb = (A * B).sum(axis=0), A.sum(axis=0), B.sum(axis=0)
        est[i] = float(np.mean(Sab / (m - 1)))
        if m < 3:
            se[i] = np.nan
            continue
        # delete-one covariances, averaged over t0
        loo = ((Sab - A * B) - (Sa - A) * (Sb - B) / (m - 1)) / (m - 2)
        theta = loo.mean(axis=1)
        se[i] = float(np.sqrt((m - 1) / m * np.sum((theta - theta.mean()) ** 2)))
    return CovarianceCurve(lags, est, "acf", "empirical", se=se, n_paths=m,
                           meta={"step": step, "points": n})


# --------------------------------------------------------------------------- constants


def k_alpha(alpha, *, method="gamma"):
    """``k_alpha = int_0^inf (1 + s)**alpha s**alpha ds = Gamma(1+alpha) Gamma(-1-2 alpha) / Gamma(-alpha)``.

    Defined for ``alpha in (-1, -1/2)``.  ``method="quadrature"`` evaluates
    the integral directly (``s = 1/u`` on ``[1, inf)``).
    """
    a = float(alpha)
    if not -1 < a < -0.5:
        raise ParameterError(f"k_alpha needs alpha in (-1, -1/2), got {a}", module="analytics")
    if method == "gamma":
        return float(np.exp(gammaln(1 + a) + gammaln(-1 - 2 * a) - gammaln(-a)))
    if method != "quadrature":
        raise ParameterError(f"unknown method {method!r}", module="analytics")
    near = adaptive(lambda s: (1 + s) ** a, 0.0, 1.0, left_power=a, epsabs=0.0, epsrel=1e-12,
                    module="analytics")
    far = adaptive(lambda u: (1 + u) ** a, 0.0, 1.0, left_power=-2 * a - 2, epsabs=0.0, epsrel=1e-12,
                   module="analytics")
    return near + far


def j_alpha(alpha, *, method="gamma"):
    """``j_alpha = int ((s + 1)_+**alpha - s_+**alpha)**2 ds`` over the real line.

    Closed form ``Gamma(alpha+1)**2 / (Gamma(2 alpha + 2) sin(pi (alpha + 1/2)))``
    for ``alpha in (-1/2, 1/2)``.  ``method="quadrature"`` integrates the
    definition.
    """
    a = float(alpha)
    if not -0.5 < a < 0.5:
        raise ParameterError(f"j_alpha needs alpha in (-1/2, 1/2), got {a}", module="analytics")
    if method == "gamma":
        return float(np.exp(2 * gammaln(a + 1) - gammaln(2 * a + 2)) / np.sin(np.pi * (a + 0.5)))
    if method != "quadrature":
        raise ParameterError(f"unknown method {method!r}", module="analytics")
    left = 1.0 / (2 * a + 1)
    mid = adaptive(lambda s: ((1 + s) ** a - s ** a) ** 2, 0.0, 1.0, epsabs=0.0, epsrel=1e-12,
                   limit=1000, module="analytics")

    def reg(u):
        # ((1+u)**a - 1)**2 / u**2, s = 1/u on [1, inf)
        return (np.expm1(a * np.log1p(u)) / u) ** 2 if u > 0 else a * a

    far = adaptive(reg, 0.0, 1.0, left_power=-2 * a, epsabs=0.0, epsrel=1e-12, module="analytics")
    return left + mid + far


def asymptotic_constants(alpha):
    """``{"k": k_alpha or None, "j": j_alpha or None}`` with both routes for each defined one."""
    out = {}
    if -1 < alpha < -0.5:
        out["k"] = {"gamma": k_alpha(alpha), "quadrature": k_alpha(alpha, method="quadrature")}
    if -0.5 < alpha < 0.5:
        out["j"] = {"gamma": j_alpha(alpha), "quadrature": j_alpha(alpha, method="quadrature")}
    if not out:
        raise ParameterError(f"no constant is defined at alpha = {alpha}", module="analytics")
    return out


# --------------------------------------------------------------------------- predictions


def _power_form(kernel):
    """``(c, beta, delta)`` for power-type kernels ``c (t + delta)**beta``."""
    if isinstance(kernel, Power):
        return kernel.c, kernel.beta, 0.0
    if isinstance(kernel, TruncPower):
        return kernel.r0, kernel.beta, kernel.delta
    return None


def acf_tail_prediction(spec, lam):
    """Leading power law of ``r_X(t)`` as ``t -> inf``.

    fBm uses the variance-curvature law, power-type PMA kernels with
    ``beta in (0, 1/2)`` the kernel-derivative law with
    ``alpha = beta - 1``.  For ``beta < 0`` the moving-average kernel
    integrates to zero and no law is known (``status="unavailable"``).

    Returns
    -------
    Prediction
    """
    lam = _check_lambda(lam)
    if isinstance(spec, DriftNoise):
        return acf_tail_prediction(spec.base, lam)
    if isinstance(spec, FBMNoise):
        H = spec.H
        if H == 0.5:
            return Prediction(None, None, "variance-curvature", "exponential")
        return Prediction(2 * H - 2, spec.sigma ** 2 * H * (2 * H - 1) / lam ** 2, "variance-curvature")
    if isinstance(spec, SVNoise):
        return Prediction(None, None, "variance-curvature", "exponential")
    if not isinstance(spec, PMANoise):
        raise UnsupportedSpecError(f"no tail law for {spec!r}", module="analytics")
    if not spec.driver.finite_variance:
        raise UnsupportedMomentError("autocovariance is undefined for a stable driver with alpha < 2",
                                     module="analytics")
    var = spec.driver.second_moment
    if isinstance(spec.kernel, Indicator):
        return Prediction(None, None, "kernel-derivative", "exponential")
    form = _power_form(spec.kernel)
    if form is None:
        raise UnsupportedSpecError(f"no tail law for kernel {spec.kernel!r}", module="analytics")
    c, beta, _ = form
    if beta == 0:
        return Prediction(None, None, "kernel-derivative", "exponential")
    if beta < 0:
        return Prediction(None, None, "kernel-derivative", "unavailable")
    if beta >= 0.5:
        raise UnsupportedSpecError("kernel exponent >= 1/2 gives no stationary finite variance",
                                   module="analytics")
    alpha = beta - 1.0
    return Prediction(2 * alpha + 1, var * (c * beta) ** 2 * k_alpha(alpha) / lam ** 2, "kernel-derivative")


def acf_short_lag_prediction(spec, lam=None):
    """Leading power law of ``rbar_X(t)`` as ``t -> 0``.

    fBm: ``(2H, sigma**2/2)``; power kernel ``c t**beta``:
    ``(2 beta + 1, c**2 j_beta / 2)``; kernels with a jump ``f(0+)`` at 0
    (truncated power with ``delta > 0``, indicator): ``(1, f(0+)**2 / 2)``.
    All constants are scaled by ``Var(Z_1)``; ``lam`` does not enter.
    """
    if isinstance(spec, DriftNoise):
        return acf_short_lag_prediction(spec.base, lam)
    if isinstance(spec, FBMNoise):
        return Prediction(2 * spec.H, spec.sigma ** 2 / 2, "variance-short-lag")
    if isinstance(spec, SVNoise):
        return Prediction(1.0, spec.vol.second_moment / 2, "variance-short-lag")
    if not isinstance(spec, PMANoise):
        raise UnsupportedSpecError(f"no short-lag law for {spec!r}", module="analytics")
    if not spec.driver.finite_variance:
        raise UnsupportedMomentError("autocovariance is undefined for a stable driver with alpha < 2",
                                     module="analytics")
    var = spec.driver.second_moment
    k = spec.kernel
    if isinstance(k, Indicator):
        return Prediction(1.0, var / 2, "kernel-jump")
    form = _power_form(k)
    if form is None:
        raise UnsupportedSpecError(f"no short-lag law for kernel {k!r}", module="analytics")
    c, beta, delta = form
    if delta > 0:
        return Prediction(1.0, var * c ** 2 * delta ** (2 * beta) / 2, "kernel-jump")
    if not -0.5 < beta < 0.5:
        raise UnsupportedSpecError("short-lag law needs a kernel exponent in (-1/2, 1/2)", module="analytics")
    return Prediction(2 * beta + 1, var * c ** 2 * j_alpha(beta) / 2, "kernel-short-lag")


# --------------------------------------------------------------------------- fitting


def fit_power_law(curve, window, *, signed=False):
    """Least-squares line through ``(log t, log |value|)`` on ``window``.

    Parameters
    ----------
    curve : CovarianceCurve
    window : (float, float)
    signed : bool
        Allow a curve that is negative throughout the window; the sign is
        recorded in the fit.  Mixed signs or zeros always fail.

    Raises
    ------
    DomainError
        Empty window, fewer than two points, or values of the wrong sign.
    """
    lo, hi = map(float, window)
    if not 0 < lo < hi:
        raise DomainError(f"invalid fit window [{lo}, {hi}]", module="analytics")
    part = curve.restrict(lo, hi)
    if part.lags.size < 2:
        raise DomainError(f"fewer than two lags in the window [{lo:g}, {hi:g}]", module="analytics")
    v = part.values
    if np.all(v > 0):
        sign = 1.0
    elif signed and np.all(v < 0):
        sign = -1.0
    else:
        raise DomainError("curve is not of one strict sign on the fit window"
                          + ("" if signed else " (pass signed=True for negative curves)"), module="analytics")
    x, y = np.log(part.lags), np.log(np.abs(v))
    slope, icpt = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + icpt))))
    return AsymptoticFit(float(slope), float(icpt), (lo, hi), resid, sign)


# --------------------------------------------------------------------------- stability


@dataclass
class StabilityReport:
    H: float
    lam: float
    window: tuple
    unperturbed: AsymptoticFit
    perturbed: AsymptoticFit
    ratio: AsymptoticFit
    predicted: dict
    curves: dict = field(default_factory=dict)

    def to_dict(self):
        return {"H": self.H, "lambda": self.lam, "window": list(self.window),
                "unperturbed": self.unperturbed.to_dict(), "perturbed": self.perturbed.to_dict(),
                "ratio": self.ratio.to_dict(), "predicted": self.predicted}


def _bump_integral(bump):
    return float(bump._cum[-1])


def stability_experiment(H, lam, bump, window=None, *, n_lags=13):
    """Tail of ``r_X`` for ``psi_H`` and for ``psi_H - bump``.

    ``psi_H`` is the moving-average kernel of fBm with index ``H``.  For
    ``H < 1/2``, ``psi_H`` integrates to zero, so a bump with nonzero
    integral changes the tail exponent from ``2H - 2`` to ``H - 3/2``; for
    ``H > 1/2`` both tails are ``t**(2H - 2)``.

    Parameters
    ----------
    H : float
        In ``(0, 1)``, not 1/2.
    lam : float
    bump : Tabulated
        Bounded, compactly supported.
    window : (float, float), optional
        Fit window; defaults to ``[1e4, 1e5] / lam``.
    n_lags : int
        Log-spaced lags in the window.

    Raises
    ------
    PreconditionError
        ``H < 1/2`` with a nonzero bump of zero integral.
    """
    if not 0 < H < 1 or H == 0.5:
        raise ParameterError("H must lie in (0, 1) and differ from 1/2", module="analytics")
    lam = _check_lambda(lam)
    if not isinstance(bump, Tabulated) or bump.tail_exponent is not None:
        raise ParameterError("bump must be a compactly supported Tabulated kernel", module="analytics")
    zero = not np.any(bump.values)
    area = _bump_integral(bump)
    if H < 0.5 and not zero and abs(area) < 1e-12 * max(1.0, np.max(np.abs(bump.values))):
        raise PreconditionError("for H < 1/2 the bump must have a nonzero integral", module="analytics")
    window = tuple(window) if window is not None else (1e4 / lam, 1e5 / lam)
    lags = np.geomspace(window[0], window[1], n_lags)
    psi = MovingAverageKernel.from_noise_kernel(fractional_kernel(H), lam)
    pert = psi if zero else psi - bump
    r0 = theoretical_acf(psi, None, lags)
    r1 = theoretical_acf(pert, None, lags)
    f0 = fit_power_law(r0, window, signed=True)
    f1 = fit_power_law(r1, window, signed=True)
    ratio = CovarianceCurve(lags, r1.values / r0.values, "acf", "theoretical")
    fr = fit_power_law(ratio, window, signed=True)
    if H < 0.5 and not zero:
        pred = {"unperturbed": 2 * H - 2, "perturbed": H - 1.5, "ratio": 0.5 - H}
    else:
        pred = {"unperturbed": 2 * H - 2, "perturbed": 2 * H - 2, "ratio": 0.0}
    return StabilityReport(float(H), lam, window, f0, f1, fr, pred,
                           {"unperturbed": r0, "perturbed": r1, "ratio": ratio})
