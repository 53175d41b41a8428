"""Noise kernels ``f`` and the moving-average kernel ``psi_f``.

For a noise kernel ``f`` vanishing on the negative half-line and a
mean-reversion rate ``lam > 0`` define

    g(t)   = integral_0^t exp(-lam (t - u)) f(u) du,
    psi(t) = f(t) - lam * g(t).

``psi`` is the kernel of the moving-average representation of the
stationary Langevin solution driven by the noise ``int (f(t-s) - f(-s)) dZ_s``,
and ``g(t) = integral_0^t psi``.  Every kernel family here evaluates
``(psi, g)`` in closed form; an independent adaptive-quadrature route is
kept for cross-checking.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gamma as _gamma

from .exceptions import NumericError, ParameterError, UnsupportedSpecError
from .quadrature import EPSABS, EPSREL, adaptive
from .special import damped_power_integral, damped_power_residual


def c_H_constant(H):
    """Normalising constant making ``c_H int ((t-s)_+^{H-1/2} - (-s)_+^{H-1/2}) dB_s`` a standard fBm.

    ``c_H = sqrt(2H sin(pi H) Gamma(2H)) / Gamma(H + 1/2)``.
    """
    H = float(H)
    if not 0 < H < 1:
        raise ParameterError(f"H must lie in (0, 1), got {H}", module="kernels")
    return float(np.sqrt(2 * H * np.sin(np.pi * H) * _gamma(2 * H)) / _gamma(H + 0.5))


def _check_lambda(lam):
    if not np.isfinite(lam) or lam <= 0:
        raise ParameterError(f"lambda must be positive, got {lam}", module="kernels")
    return float(lam)


def _as_times(t):
    return np.atleast_1d(np.asarray(t, dtype=float))


def _exp_ramp(x):
    """``(x - 1 + exp(-x))`` without cancellation for small ``x >= 0``."""
    x = np.asarray(x, dtype=float)
    out = x + np.expm1(-x)
    small = x < 1e-3
    xs = x[small]
    out[small] = xs ** 2 / 2 - xs ** 3 / 6 + xs ** 4 / 24 - xs ** 5 / 120
    return out


def _power_difference(c, beta, u, D):
    """``c ((u + D)**beta - u**beta)`` for ``u > 0``, without cancellation when ``D << u``."""
    return c * u ** beta * np.expm1(beta * np.log1p(D / u))


def _power_increment(c, beta, x, tau):
    """``c/(beta+1) ((x + tau)**(beta+1) - x**(beta+1))`` for ``x >= 0``, stable for ``tau << x``."""
    x = np.asarray(x, dtype=float)
    tau = np.broadcast_to(np.asarray(tau, dtype=float), x.shape)
    p = beta + 1.0
    out = np.empty(x.shape)
    pos = x > 0
    xp, tp = x[pos], tau[pos]
    out[pos] = xp ** p * np.expm1(p * np.log1p(tp / xp))
    out[~pos] = tau[~pos] ** p
    return c * out / p


class KernelSpec:
    """Base class of noise kernels ``f`` with ``f = 0`` on ``(-inf, 0)``.

    Subclasses provide ``__call__``, :meth:`antiderivative`,
    :meth:`psi_closed` and the metadata attributes below.

    Attributes
    ----------
    singular_exponent : float or None
        ``beta`` if ``f(u) ~ const * u**beta`` with ``beta < 0`` at ``0+``.
    tail_exponent : float or None
        ``gamma`` if ``f(u) ~ const * u**gamma`` at infinity; ``None`` for
        kernels that are eventually zero.
    """

    kind = "kernel"
    singular_exponent = None

    @property
    def breakpoints(self):
        return (0.0,)

    def increment_integral(self, x, tau):
        """``integral_x^{x+tau} f``, vectorised over ``x``."""
        x = np.asarray(x, dtype=float)
        return self.antiderivative(x + tau) - self.antiderivative(x)

    def difference(self, u, D):
        """``f(u + D) - f(u)``, vectorised over ``u``."""
        u = np.asarray(u, dtype=float)
        return self(u + D) - self(u)

    def _power_tail_difference(self, u, D, start, c, beta):
        u = np.asarray(u, dtype=float)
        out = self(u + D) - self(u)
        far = u >= start
        if np.any(far):
            out = np.where(far, _power_difference(c, beta, np.where(far, u, 1.0), D), out)
        return out

    def regular_factor(self, u):
        """``f(u) / u**singular_exponent`` (only used when that exponent is set)."""
        return self(u) / np.asarray(u, dtype=float) ** self.singular_exponent

    @property
    def vanishes_at_infinity(self):
        return self.tail_exponent is None or self.tail_exponent < 0

    def __sub__(self, other):
        if not isinstance(other, KernelSpec):
            return NotImplemented
        return Perturbed(self, other)

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=True)
class Indicator(KernelSpec):
    """``f = 1`` on ``[0, inf)``; the noise is the driver itself."""

    kind = "indicator"
    tail_exponent = 0.0

    def __call__(self, t):
        return (np.asarray(t, dtype=float) >= 0).astype(float)

    def antiderivative(self, t):
        return np.maximum(np.asarray(t, dtype=float), 0.0)

    def increment_integral(self, x, tau):
        x = np.asarray(x, dtype=float)
        return np.clip(x + tau, 0.0, None) - np.clip(x, 0.0, None)

    @property
    def vanishes_at_infinity(self):
        return False

    def psi_closed(self, lam, t):
        t = _as_times(t)
        pos = t >= 0
        psi = np.where(pos, np.exp(-lam * np.where(pos, t, 0.0)), 0.0)
        g = np.where(pos, -np.expm1(-lam * np.where(pos, t, 0.0)) / lam, 0.0)
        return psi, g

    def to_dict(self):
        return {"kind": "indicator"}


@dataclass(frozen=True, eq=True)
class Power(KernelSpec):
    """``f(t) = c t**beta`` for ``t > 0``.

    ``beta > -1`` is required for local integrability; whether the kernel
    is admissible for a given driver is decided in :mod:`quasiou.integrability`.
    """

    c: float
    beta: float
    kind = "power"

    def __post_init__(self):
        if not np.isfinite(self.c) or not np.isfinite(self.beta):
            raise ParameterError("power kernel parameters must be finite", module="kernels")
        if self.beta <= -1:
            raise ParameterError(f"power exponent must exceed -1, got {self.beta}", module="kernels")

    @property
    def tail_exponent(self):
        return self.beta

    @property
    def singular_exponent(self):
        return self.beta if self.beta < 0 else None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        pos = t > 0
        return np.where(pos, self.c * np.where(pos, t, 1.0) ** self.beta, 0.0)

    def regular_factor(self, u):
        return np.full(np.shape(u), self.c, dtype=float)

    def difference(self, u, D):
        return self._power_tail_difference(u, D, np.finfo(float).tiny, self.c, self.beta)

    def antiderivative(self, t):
        t = np.clip(np.asarray(t, dtype=float), 0.0, None)
        return self.c * t ** (self.beta + 1) / (self.beta + 1)

    def increment_integral(self, x, tau):
        x = np.asarray(x, dtype=float)
        lo = np.clip(x, 0.0, None)
        hi = np.clip(x + tau, 0.0, None)
        return _power_increment(self.c, self.beta, lo, hi - lo)

    def psi_closed(self, lam, t):
        t = _as_times(t)
        x = lam * np.clip(t, 0.0, None)
        scale = self.c * lam ** (-self.beta)
        psi = scale * damped_power_residual(self.beta, x)
        g = scale / lam * damped_power_integral(self.beta, x)
        if self.beta == 0:
            psi = np.where(t == 0, self.c, psi)
        return np.where(t >= 0, psi, 0.0), np.where(t >= 0, g, 0.0)

    def to_dict(self):
        return {"kind": "power", "c": self.c, "beta": self.beta}


@dataclass(frozen=True, eq=True)
class TruncPower(KernelSpec):
    """``f(t) = r0 * max(delta, t)**(H - 1/2)`` for ``t > 0``.

    With ``delta = 0`` every method delegates to ``Power(r0, H - 1/2)``.
    """

    r0: float
    delta: float
    H: float
    kind = "trunc_power"

    def __post_init__(self):
        if not np.isfinite(self.r0) or self.r0 == 0:
            raise ParameterError("r0 must be finite and nonzero", module="kernels")
        if not np.isfinite(self.delta) or self.delta < 0:
            raise ParameterError("delta must be finite and nonnegative", module="kernels")
        if not 0 < self.H < 1:
            raise ParameterError(f"H must lie in (0, 1), got {self.H}", module="kernels")

    @property
    def beta(self):
        return self.H - 0.5

    @property
    def _power(self):
        return Power(self.r0, self.beta)

    @property
    def tail_exponent(self):
        return self.beta

    @property
    def singular_exponent(self):
        return self._power.singular_exponent if self.delta == 0 else None

    @property
    def breakpoints(self):
        return (0.0,) if self.delta == 0 else (0.0, self.delta)

    def __call__(self, t):
        if self.delta == 0:
            return self._power(t)
        t = np.asarray(t, dtype=float)
        return np.where(t > 0, self.r0 * np.maximum(t, self.delta) ** self.beta, 0.0)

    def regular_factor(self, u):
        return self._power.regular_factor(u)

    def difference(self, u, D):
        return self._power_tail_difference(u, D, max(self.delta, np.finfo(float).tiny), self.r0, self.beta)

    def antiderivative(self, t):
        if self.delta == 0:
            return self._power.antiderivative(t)
        t = np.clip(np.asarray(t, dtype=float), 0.0, None)
        d, b, r = self.delta, self.beta, self.r0
        inner = r * d ** b * np.minimum(t, d)
        outer = r * (np.maximum(t, d) ** (b + 1) - d ** (b + 1)) / (b + 1)
        return inner + outer

    def increment_integral(self, x, tau):
        if self.delta == 0:
            return self._power.increment_integral(x, tau)
        x = np.asarray(x, dtype=float)
        d, r, b = self.delta, self.r0, self.beta
        lo = np.clip(x, 0.0, None)
        hi = np.clip(x + tau, 0.0, None)
        flat = r * d ** b * (np.clip(hi, None, d) - np.clip(lo, None, d))
        a = np.maximum(lo, d)
        tail = _power_increment(r, b, a, np.maximum(hi, d) - a)
        return flat + tail

    def psi_closed(self, lam, t):
        if self.delta == 0:
            return self._power.psi_closed(lam, t)
        t = _as_times(t)
        d, r, b = self.delta, self.r0, self.beta
        level = r * d ** b
        psi = np.zeros(t.shape)
        g = np.zeros(t.shape)
        near = (t >= 0) & (t <= d)
        tn = t[near]
        psi[near] = level * np.exp(-lam * tn)
        g[near] = -level * np.expm1(-lam * tn) / lam
        far = t > d
        tf = t[far]
        scale = r * lam ** (-b)
        m_d = damped_power_integral(b, np.array([lam * d]))[0]
        decay = np.exp(-lam * (tf - d))
        shift = scale * m_d - level * -np.expm1(-lam * d)
        psi[far] = scale * damped_power_residual(b, lam * tf) + decay * shift
        g[far] = scale / lam * damped_power_integral(b, lam * tf) - decay * shift / lam
        return psi, g

    def to_dict(self):
        return {"kind": "trunc_power", "r0": self.r0, "delta": self.delta, "H": self.H}


class Tabulated(KernelSpec):
    """Piecewise-linear kernel through ``(knots, values)``.

    Knots are nondecreasing and nonnegative; a repeated knot encodes a
    jump (the kernel is right-continuous).  Before the first knot ``f = 0``.
    After the last knot ``K`` the kernel is ``0`` if ``tail_exponent`` is
    ``None`` and ``values[-1] * (t / K)**tail_exponent`` otherwise.
    """

    kind = "tabulated"

    def __init__(self, knots, values, tail_exponent=None):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape or knots.size < 2:
            raise ParameterError("knots and values must be 1-d arrays of equal length >= 2", module="kernels")
        if not (np.all(np.isfinite(knots)) and np.all(np.isfinite(values))):
            raise ParameterError("knots and values must be finite", module="kernels")
        if knots[0] < 0 or np.any(np.diff(knots) < 0):
            raise ParameterError("knots must be nonnegative and nondecreasing", module="kernels")
        if np.any(knots[2:] == knots[:-2]):
            raise ParameterError("a knot may be repeated at most twice", module="kernels")
        if knots[-1] == knots[0]:
            raise ParameterError("tabulated kernel needs a nondegenerate support", module="kernels")
        if tail_exponent is not None:
            tail_exponent = float(tail_exponent)
            if not -1 < tail_exponent < 0.5:
                raise ParameterError("tail exponent must lie in (-1, 1/2)", module="kernels")
            if knots[-1] == 0:
                raise ParameterError("a power tail needs a positive last knot", module="kernels")
        self.knots = knots
        self.values = values
        self.tail_exponent = tail_exponent
        widths = np.diff(knots)
        self._seg_area = 0.5 * widths * (values[:-1] + values[1:])
        self._cum = np.concatenate([[0.0], np.cumsum(self._seg_area)])

    def __eq__(self, other):
        return (isinstance(other, Tabulated) and np.array_equal(self.knots, other.knots)
                and np.array_equal(self.values, other.values)
                and self.tail_exponent == other.tail_exponent)

    __hash__ = None

    def __repr__(self):
        return f"Tabulated(knots={self.knots.tolist()}, values={self.values.tolist()}, tail_exponent={self.tail_exponent})"

    @property
    def breakpoints(self):
        return tuple(np.unique(np.concatenate([[0.0], self.knots])))

    @property
    def _tail_coef(self):
        return self.values[-1] * self.knots[-1] ** (-self.tail_exponent)

    @property
    def support_end(self):
        return np.inf if self.tail_exponent is not None else float(self.knots[-1])

    @property
    def vanishes_at_infinity(self):
        return self.tail_exponent is None or self.tail_exponent < 0 or self.values[-1] == 0

    def _segment(self, t):
        idx = np.searchsorted(self.knots, t, side="right") - 1
        return np.clip(idx, 0, self.knots.size - 2)

    def _linear(self, t):
        k, v = self.knots, self.values
        i = self._segment(t)
        w = k[i + 1] - k[i]
        slope = np.where(w > 0, (v[i + 1] - v[i]) / np.where(w > 0, w, 1.0), 0.0)
        return i, v[i] + slope * (t - k[i]), slope

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = self.knots
        _, lin, _ = self._linear(t)
        out = np.where((t >= k[0]) & (t < k[-1]), lin, 0.0)
        if self.tail_exponent is not None:
            tt = np.where(t >= k[-1], t, k[-1])
            out = np.where(t >= k[-1], self._tail_coef * tt ** self.tail_exponent, out)
        return out

    def difference(self, u, D):
        if self.tail_exponent is None:
            return super().difference(u, D)
        return self._power_tail_difference(u, D, self.knots[-1], self._tail_coef, self.tail_exponent)

    def antiderivative(self, t):
        t = np.asarray(t, dtype=float)
        k, v = self.knots, self.values
        tc = np.clip(t, k[0], k[-1])
        i, lin, _ = self._linear(tc)
        inside = self._cum[i] + 0.5 * (tc - k[i]) * (v[i] + lin)
        out = np.where(t <= k[0], 0.0, inside)
        if self.tail_exponent is not None:
            te = np.maximum(t, k[-1])
            a = k[-1]
            out = out + np.where(t > a, _power_increment(self._tail_coef, self.tail_exponent, a, te - a), 0.0)
        return out

    def _g_at_knots(self, lam):
        k, v = self.knots, self.values
        w = np.diff(k)
        x = lam * w
        e = np.exp(-x)
        slope = np.where(w > 0, np.diff(v) / np.where(w > 0, w, 1.0), 0.0)
        add = v[:-1] * -np.expm1(-x) / lam + slope * _exp_ramp(x) / lam ** 2
        G = np.zeros(k.size)
        for j in range(w.size):
            G[j + 1] = e[j] * G[j] + add[j]
        return G

    def psi_closed(self, lam, t):
        t = _as_times(t)
        k = self.knots
        G = self._g_at_knots(lam)
        g = np.zeros(t.shape)
        inside = (t >= k[0]) & (t < k[-1])
        ti = t[inside]
        i, lin, slope = self._linear(ti)
        tau = ti - k[i]
        x = lam * tau
        g[inside] = (np.exp(-x) * G[i] + self.values[i] * -np.expm1(-x) / lam
                     + slope * _exp_ramp(x) / lam ** 2)
        f = self(t)
        past = t >= k[-1]
        tp = t[past]
        decay = np.exp(-lam * (tp - k[-1]))
        psi = f - lam * g
        if self.tail_exponent is None:
            g[past] = decay * G[-1]
            psi[past] = -lam * g[past]
        else:
            gam, c = self.tail_exponent, self._tail_coef
            scale = c * lam ** (-gam)
            m_k = damped_power_integral(gam, np.array([lam * k[-1]]))[0]
            g[past] = decay * G[-1] + scale / lam * (damped_power_integral(gam, lam * tp) - decay * m_k)
            psi[past] = scale * damped_power_residual(gam, lam * tp) + decay * (scale * m_k - lam * G[-1])
        return psi, g

    def to_dict(self):
        return {"kind": "tabulated", "knots": self.knots.tolist(), "values": self.values.tolist(),
                "tail_exponent": self.tail_exponent}


def unit_bump(a=0.0, b=1.0, height=1.0):
    """Tabulated ``height * 1_[a, b)``."""
    if not b > a >= 0:
        raise ParameterError("bump needs 0 <= a < b", module="kernels")
    if a == 0:
        return Tabulated([0.0, b, b], [height, height, 0.0])
    return Tabulated([a, a, b, b], [0.0, height, height, 0.0])


class Perturbed(KernelSpec):
    """``f = base - bump`` with a compactly supported tabulated ``bump``."""

    kind = "perturbed"

    def __init__(self, base, bump):
        if not isinstance(base, KernelSpec):
            raise ParameterError("base must be a KernelSpec", module="kernels")
        if not isinstance(bump, Tabulated) or bump.tail_exponent is not None:
            raise ParameterError("bump must be a compactly supported tabulated kernel", module="kernels")
        self.base = base
        self.bump = bump

    def __eq__(self, other):
        return isinstance(other, Perturbed) and self.base == other.base and self.bump == other.bump

    __hash__ = None

    def __repr__(self):
        return f"Perturbed({self.base!r}, {self.bump!r})"

    @property
    def tail_exponent(self):
        return self.base.tail_exponent

    @property
    def singular_exponent(self):
        return self.base.singular_exponent

    @property
    def vanishes_at_infinity(self):
        return self.base.vanishes_at_infinity

    @property
    def breakpoints(self):
        return tuple(sorted(set(self.base.breakpoints) | set(self.bump.breakpoints)))

    def __call__(self, t):
        return self.base(t) - self.bump(t)

    def regular_factor(self, u):
        u = np.asarray(u, dtype=float)
        pos = u > 0
        scaled = np.where(pos, self.bump(u) * np.where(pos, u, 1.0) ** -self.singular_exponent, 0.0)
        return self.base.regular_factor(u) - scaled

    def difference(self, u, D):
        return self.base.difference(u, D) - self.bump.difference(u, D)

    def antiderivative(self, t):
        return self.base.antiderivative(t) - self.bump.antiderivative(t)

    def increment_integral(self, x, tau):
        return self.base.increment_integral(x, tau) - self.bump.increment_integral(x, tau)

    def psi_closed(self, lam, t):
        pb, gb = self.base.psi_closed(lam, t)
        pu, gu = self.bump.psi_closed(lam, t)
        psi = pb - pu
        if self.singular_exponent is not None:
            psi = np.where(_as_times(t) == 0, 0.0, psi)
        return psi, gb - gu

    def to_dict(self):
        return {"kind": "perturbed", "base": self.base.to_dict(), "bump": self.bump.to_dict()}


def kernel_from_dict(d):
    """Inverse of ``KernelSpec.to_dict``."""
    d = dict(d)
    kind = d.pop("kind", None)
    try:
        if kind == "indicator":
            return Indicator()
        if kind == "power":
            return Power(float(d["c"]), float(d["beta"]))
        if kind == "trunc_power":
            return TruncPower(float(d["r0"]), float(d["delta"]), float(d["H"]))
        if kind == "tabulated":
            return Tabulated(d["knots"], d["values"], d.get("tail_exponent"))
        if kind == "perturbed":
            return Perturbed(kernel_from_dict(d["base"]), kernel_from_dict(d["bump"]))
    except KeyError as exc:
        raise ParameterError(f"kernel of kind {kind!r} is missing field {exc}", module="kernels") from None
    raise ParameterError(f"unknown kernel kind {kind!r}", module="kernels")


def fractional_kernel(H, alpha=2.0):
    """``c_H t_+**(H - 1/alpha)``; ``alpha = 2`` gives the fBm kernel."""
    return Power(c_H_constant(H), H - 1.0 / alpha)


@dataclass
class PsiEval:
    """Moving-average kernel values on a set of times.

    ``values`` holds ``psi_f(t)`` and ``integral`` holds ``g(t) = int_0^t psi_f``.
    """

    lam: float
    times: np.ndarray
    values: np.ndarray
    integral: np.ndarray
    method: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise NumericError("moving-average kernel has non-finite values", module="kernels")


def _g_quadrature(kernel, lam, t):
    """``g(t) - f(t) (1 - e^{-lam t}) / lam``, i.e. ``int_0^t e^{-lam(t-u)} (f(u) - f(t)) du``.

    Subtracting ``f(t)`` keeps the integrand small where the weight is
    large, so ``psi = f(t) e^{-lam t} - lam * (this)`` has no cancellation.
    """
    ft = float(kernel(t))
    beta = kernel.singular_exponent
    pts = [p for p in kernel.breakpoints if 0 < p < t]
    total = 0.0
    a = 0.0
    if beta is not None:
        a = min(t, pts[0] if pts else t, 1.0 / lam)
        total += adaptive(lambda u: np.exp(-lam * (t - u)) * float(kernel.regular_factor(u)),
                          0.0, a, left_power=beta, module="kernels")
        total -= ft * np.exp(-lam * t) * np.expm1(lam * a) / lam
    if a < t:
        pts = [p for p in pts if p > a]
        near = t - 40.0 / lam
        if near > a:
            pts.append(near)
        total += adaptive(lambda u: np.exp(-lam * (t - u)) * (float(kernel(u)) - ft),
                          a, t, points=pts, module="kernels")
    return total


def psi_transform(kernel, lam, times, method="auto"):
    """Evaluate ``psi_f`` and ``g = int_0^t psi_f``.

    Parameters
    ----------
    kernel : KernelSpec
    lam : float
        Mean-reversion rate, positive.
    times : array_like
    method : {"auto", "closed-form", "quadrature"}
        ``"auto"`` uses the closed form, which every kernel family has.
        ``"quadrature"`` integrates ``e^{lam u} f(u)`` adaptively instead,
        splitting at kernel knots and weighting the ``u**beta`` singularity
        at 0 analytically.

    Returns
    -------
    PsiEval
    """
    lam = _check_lambda(lam)
    t = _as_times(times)
    if method in ("auto", "closed-form"):
        psi, g = kernel.psi_closed(lam, t)
        return PsiEval(lam, t, psi, g, "closed-form")
    if method != "quadrature":
        raise ParameterError(f"unknown method {method!r}", module="kernels")
    psi = np.zeros(t.shape)
    g = np.zeros(t.shape)
    for i, ti in enumerate(t):
        if ti <= 0:
            if ti == 0 and kernel.singular_exponent is None:
                psi[i] = float(kernel(np.nextafter(0.0, 1.0)))
            continue
        ft = float(kernel(ti))
        rest = _g_quadrature(kernel, lam, ti)
        psi[i] = ft * np.exp(-lam * ti) - lam * rest
        g[i] = ft * -np.expm1(-lam * ti) / lam + rest
    return PsiEval(lam, t, psi, g, "quadrature")


def psi_tail_asymptote(kernel, lam):
    """Leading power law ``psi_f(t) ~ constant * t**exponent`` as ``t -> inf``.

    Returns
    -------
    (exponent, constant) : tuple of float
        ``(None, None)`` when ``psi_f`` decays exponentially (indicator,
        compactly supported tabulated kernels, or a zero-exponent power).

    Raises
    ------
    UnsupportedSpecError
        If the kernel declares no tail behaviour.
    """
    lam = _check_lambda(lam)
    if isinstance(kernel, Perturbed):
        return psi_tail_asymptote(kernel.base, lam)
    if isinstance(kernel, Indicator):
        return None, None
    if isinstance(kernel, Power):
        c, b = kernel.c, kernel.beta
    elif isinstance(kernel, TruncPower):
        c, b = kernel.r0, kernel.beta
    elif isinstance(kernel, Tabulated):
        if kernel.tail_exponent is None:
            return None, None
        c, b = kernel._tail_coef, kernel.tail_exponent
    else:
        raise UnsupportedSpecError(f"no tail law for kernel {kernel!r}", module="kernels")
    if b == 0 or c == 0:
        return None, None
    return b - 1.0, c * b / lam


@dataclass
class CancellationResult:
    """``int_0^T psi_f`` by quadrature and by the identity ``int_0^T psi_f = g(T)``."""

    T: float
    quadrature: float
    closed_form: float
    abs_integral: float

    @property
    def relative_size(self):
        return abs(self.closed_form) / self.abs_integral if self.abs_integral > 0 else 0.0


def cancellation_integral(kernel, lam, T):
    """Integral of ``psi_f`` over ``[0, T]`` two ways, plus ``int_0^T |psi_f|``.

    For kernels vanishing at infinity the integral tends to 0 as
    ``T -> inf``; for the indicator it tends to ``1/lam``.
    """
    lam = _check_lambda(lam)
    if not T > 0:
        raise ParameterError("T must be positive", module="kernels")

    def psi(u):
        return float(kernel.psi_closed(lam, np.array([u]))[0][0])

    edges = sorted({0.0, T, *[p for p in kernel.breakpoints if 0 < p < T]}
                   | {x for x in np.geomspace(1e-3 / lam, T, 30) if x < T})
    beta = kernel.singular_exponent
    quad = absq = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if lo == 0 and beta is not None:
            reg = lambda u: psi(u) / u ** beta if u > 0 else float(kernel.regular_factor(1e-300))
            quad += adaptive(reg, lo, hi, left_power=beta, module="kernels")
            absq += adaptive(lambda u: abs(reg(u)), lo, hi, left_power=beta, module="kernels")
        else:
            quad += adaptive(psi, lo, hi, epsabs=EPSABS * 1e-2, epsrel=EPSREL * 1e-2, module="kernels")
            absq += adaptive(lambda u: abs(psi(u)), lo, hi, module="kernels")
    closed = float(kernel.psi_closed(lam, np.array([T]))[1][0])
    return CancellationResult(float(T), quad, closed, absq)


class MovingAverageKernel:
    """Callable ``psi`` with the metadata the autocovariance quadrature needs.

    Built from a noise kernel via :meth:`from_noise_kernel`; subtracting a
    compactly supported :class:`Tabulated` bump perturbs ``psi`` directly.

    Attributes
    ----------
    lam : float
    breakpoints : tuple of float
        Points where ``psi`` has kinks or jumps.
    tail : (exponent, constant) or (None, None)
        Leading power law at infinity.
    singular_exponent : float or None
        Exponent of the algebraic singularity at ``0+``.
    """

    def __init__(self, func, lam, breakpoints=(0.0,), tail=(None, None), singular_exponent=None,
                 label="psi"):
        self._func = func
        self.lam = _check_lambda(lam)
        self.breakpoints = tuple(sorted(set(float(b) for b in breakpoints)))
        self.tail = tail
        self.singular_exponent = singular_exponent
        self.label = label

    @classmethod
    def from_noise_kernel(cls, kernel, lam):
        lam = _check_lambda(lam)
        return cls(lambda t: kernel.psi_closed(lam, t)[0], lam, kernel.breakpoints,
                   psi_tail_asymptote(kernel, lam), kernel.singular_exponent, label=kernel.kind)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self._func(t.ravel()).reshape(t.shape)

    def __sub__(self, bump):
        if not isinstance(bump, Tabulated) or bump.tail_exponent is not None:
            return NotImplemented
        base = self._func
        return MovingAverageKernel(lambda t: base(t) - bump(t), self.lam,
                                   self.breakpoints + bump.breakpoints, self.tail,
                                   self.singular_exponent, label=self.label + "-bump")
