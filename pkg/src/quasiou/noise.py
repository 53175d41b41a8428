"""Stationary-increment noise processes and their variance functions.

Noise families
--------------
* :class:`FBMNoise` -- fractional Brownian motion ``sigma * B^H``.
* :class:`PMANoise` -- pseudo moving average ``int (f(t-s) - f(-s)) dZ_s``.
* :class:`SVNoise` -- ``int_0^t sigma_s dB_s`` with stationary volatility.
* :class:`DriftNoise` -- ``mu * t`` plus another noise.

All paths are pinned to ``N_0 = 0``; grids must therefore contain 0.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg, signal

from ._rng import substream
from .drivers import (IncrementSeries, LevyTriplet, VolatilitySpec, _rows, levy_increments,
                      sample_sv_increments)
from .exceptions import (GridError, IntegrabilityError, NumericError, ParameterError,
                         TruncationError, UnsupportedMomentError)
from .grid import TimeGrid
from .kernels import KernelSpec
from .quadrature import adaptive

CHOLESKY_LIMIT = 4096
DEFAULT_TRUNC_TOL = 1e-6


def _check_H(H):
    if not 0 < H < 1:
        raise ParameterError(f"H must lie in (0, 1), got {H}", module="noise")


@dataclass(frozen=True)
class FBMNoise:
    """``sigma * B^H`` with ``Var(N_t) = sigma**2 |t|**(2H)``."""

    H: float
    sigma: float = 1.0
    past_horizon: float = 0.0
    kind = "fbm"

    def __post_init__(self):
        _check_H(self.H)
        if not self.sigma > 0:
            raise ParameterError("sigma must be positive", module="noise")
        if self.past_horizon < 0:
            raise ParameterError("past_horizon must be nonnegative", module="noise")

    def to_dict(self):
        return {"kind": "fbm", "H": self.H, "sigma": self.sigma}


@dataclass(frozen=True)
class PMANoise:
    """``N_t = int (f(t-s) - f(-s)) dZ_s`` for a kernel ``f`` and Levy driver ``Z``."""

    kernel: KernelSpec
    driver: LevyTriplet
    past_horizon: float = 0.0
    kind = "pma"

    def __post_init__(self):
        if not isinstance(self.kernel, KernelSpec):
            raise ParameterError("kernel must be a KernelSpec", module="noise")
        if not isinstance(self.driver, LevyTriplet):
            raise ParameterError("driver must be a LevyTriplet", module="noise")
        if self.past_horizon < 0:
            raise ParameterError("past_horizon must be nonnegative", module="noise")

    def to_dict(self):
        return {"kind": "pma", "kernel": self.kernel.to_dict(), "driver": self.driver.to_dict()}


@dataclass(frozen=True)
class SVNoise:
    """``N_t = int_0^t sigma_s dB_s``."""

    vol: VolatilitySpec
    past_horizon: float = 0.0
    kind = "sv"

    def to_dict(self):
        return {"kind": "sv", "vol": self.vol.to_dict()}


@dataclass(frozen=True)
class DriftNoise:
    """``N_t = mu * t + base_t``."""

    base: object
    mu: float
    past_horizon: float = 0.0
    kind = "drift"

    def __post_init__(self):
        if isinstance(self.base, DriftNoise):
            raise ParameterError("nested drift noise; add the drifts instead", module="noise")
        if not np.isfinite(self.mu):
            raise ParameterError("drift must be finite", module="noise")

    def to_dict(self):
        return {"kind": "drift", "mu": self.mu, "base": self.base.to_dict()}


@dataclass
class Path:
    """Sample path(s) on a grid.

    ``values`` has shape ``(count,)`` or ``(m, count)``.
    """

    grid: TimeGrid
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[-1] != self.grid.count:
            raise GridError(f"{self.values.shape[-1]} values for a grid of {self.grid.count} points",
                            module="noise")

    @property
    def n_paths(self):
        return 1 if self.values.ndim == 1 else self.values.shape[0]

    @property
    def times(self):
        return self.grid.times

    def restrict(self, grid):
        """Values on a sub-grid with the same step."""
        if abs(grid.step - self.grid.step) > 1e-9 * grid.step:
            raise GridError("restriction needs a common step", module="noise")
        k0 = self.grid.index_of(grid.origin)
        if k0 + grid.count > self.grid.count:
            raise GridError("sub-grid extends beyond the path", module="noise")
        return Path(grid, self.values[..., k0:k0 + grid.count], dict(self.meta))

    def path(self, i):
        return Path(self.grid, self.values if self.values.ndim == 1 else self.values[i], dict(self.meta))


def _pin(values, grid):
    try:
        k0 = grid.zero_index
    except GridError:
        raise GridError("noise grids must contain t = 0 (paths are pinned to N_0 = 0)", module="noise") from None
    values = values - values[..., k0:k0 + 1]
    values[..., k0] = 0.0
    return values


def fgn_autocovariance(H, lags):
    """Unit fractional Gaussian noise covariance ``(|k+1|^{2H} + |k-1|^{2H} - 2|k|^{2H}) / 2``."""
    k = np.abs(np.asarray(lags, dtype=float))
    h2 = 2.0 * H
    return 0.5 * (np.abs(k + 1) ** h2 + np.abs(k - 1) ** h2 - 2.0 * k ** h2)


def circulant_eigenvalues(H, M):
    """Eigenvalues of the minimal circulant embedding of ``M`` unit fGn variables."""
    gam = fgn_autocovariance(H, np.arange(M + 1))
    row = np.concatenate([gam, gam[-2:0:-1]]) if M > 1 else gam[:1]
    return np.fft.fft(row).real


def embedding_covariance(H, M, lags):
    """Covariance implied by the circulant embedding at the given lags.

    Recovered from the eigenvalues by inverse FFT; for a valid embedding
    it equals :func:`fgn_autocovariance` up to round-off.
    """
    eig = circulant_eigenvalues(H, M)
    return np.fft.ifft(eig).real[np.asarray(lags, dtype=int)]


def _fgn_circulant(eig, M, rng):
    L = eig.size
    z = rng.standard_normal(L) + 1j * rng.standard_normal(L)
    w = np.fft.fft(np.sqrt(np.maximum(eig, 0.0) / L) * z)
    return w.real[:M]


def simulate_fbm(H, sigma, grid, seed, *, n_paths=None, method="auto", workers=None):
    """Exact fractional Brownian motion on ``grid``, pinned at ``N_0 = 0``.

    Parameters
    ----------
    H : float
        Hurst index in ``(0, 1)``.
    sigma : float
        Scale, ``Var(N_1) = sigma**2``.
    grid : TimeGrid
        Must contain 0.
    seed : int
    n_paths : int, optional
        Ensemble size; path ``i`` uses its own substream.
    method : {"auto", "circulant", "cholesky"}
        ``"auto"`` uses circulant embedding and falls back to a dense
        Cholesky factor when the embedding has negative eigenvalues.

    Returns
    -------
    Path
    """
    _check_H(H)
    if not sigma > 0:
        raise ParameterError("sigma must be positive", module="noise")
    M = grid.count - 1
    if M == 0:
        return Path(grid, np.zeros(grid.count) if n_paths is None else np.zeros((n_paths, 1)))
    scale = sigma * grid.step ** H
    used = method
    eig = None
    if method in ("auto", "circulant"):
        eig = circulant_eigenvalues(H, M)
        if eig.min() < -1e-10 * eig.max():
            if method == "circulant":
                raise NumericError(f"circulant embedding is not nonnegative definite for {M} increments",
                                   module="noise")
            used = "cholesky"
        else:
            used = "circulant"
    if used == "cholesky":
        if M > CHOLESKY_LIMIT:
            raise NumericError(f"embedding failed and a dense factor of size {M} exceeds the limit "
                               f"{CHOLESKY_LIMIT}", module="noise")
        cov = linalg.toeplitz(fgn_autocovariance(H, np.arange(M)))
        chol = linalg.cholesky(cov, lower=True)

    def fill(i):
        rng = substream(seed, i, "driver")
        if used == "circulant":
            inc = _fgn_circulant(eig, M, rng)
        else:
            inc = chol @ rng.standard_normal(M)
        return np.concatenate([[0.0], np.cumsum(scale * inc)])

    values = _pin(_rows(n_paths, fill, workers), grid)
    return Path(grid, values, {"noise": {"kind": "fbm", "H": H, "sigma": sigma}, "seed": seed,
                               "method": used})


def _kernel_lp_tail(kernel, D, start, p):
    """``int_start^inf |f(u + D) - f(u)|**p du``."""
    pts = [b for b in kernel.breakpoints if b > start] + [b - D for b in kernel.breakpoints if b - D > start]
    tail = kernel.tail_exponent
    if tail is None and not pts:
        return 0.0
    if tail is None:
        end = max(pts) + 1.0
        return adaptive(lambda u: abs(float(kernel.difference(u, D))) ** p, start, end,
                        points=pts, epsabs=1e-14, module="noise")
    # finite part up to M, then u = M e^y so the power-law tail decays exponentially in y
    M = max([start, D, *pts]) * 2.0 if start > 0 else max([D, 1.0, *pts]) * 2.0
    head = adaptive(lambda u: abs(float(kernel.difference(u, D))) ** p, start, M,
                    points=pts, epsabs=1e-14, epsrel=1e-8, module="noise")
    decay = -(p * (tail - 1.0) + 1.0)
    if decay <= 0:
        return np.inf
    Y = min(40.0 / decay, 600.0)
    far = adaptive(lambda y: abs(float(kernel.difference(M * np.exp(y), D))) ** p * M * np.exp(y),
                   0.0, Y, epsabs=1e-14, epsrel=1e-8, limit=1000, module="noise")
    U = M * np.exp(Y)
    # beyond U the integrand is its leading power law
    rest = abs(float(kernel.difference(U, D))) ** p * U / decay
    return head + far + rest


def _kernel_lp_total(kernel, D, p):
    """``int |f(D - s) - f(-s)|**p ds`` over the real line."""
    beta = kernel.singular_exponent
    a = min(D, 1.0)
    if beta is not None:
        head = adaptive(lambda u: abs(float(kernel.regular_factor(u))) ** p, 0.0, a,
                        left_power=p * beta, module="noise")
        near = adaptive(lambda u: abs(float(kernel.difference(u, D))) ** p / u ** (p * beta)
                        if u > 0 else abs(float(kernel.regular_factor(1e-300))) ** p,
                        0.0, a, left_power=p * beta, module="noise")
    else:
        head = adaptive(lambda u: abs(float(kernel(u))) ** p, 0.0, a, points=kernel.breakpoints,
                        module="noise")
        near = adaptive(lambda u: abs(float(kernel.difference(u, D))) ** p, 0.0, a,
                        points=kernel.breakpoints, module="noise")
    if D > a:
        head += adaptive(lambda u: abs(float(kernel(u))) ** p, a, D, points=kernel.breakpoints,
                         module="noise")
    return head + near + _kernel_lp_tail(kernel, D, a, p)


def truncation_ratio(kernel, driver, span, trunc):
    """Relative size of the driver mass neglected beyond ``trunc``.

    Uses the ``L^2`` norm of ``f(D - .) - f(-.)`` for finite-variance
    drivers and the ``L^alpha`` norm for stable drivers; ``D`` is the grid span.
    """
    p = 2.0 if driver.finite_variance else driver.stable_alpha
    total = _kernel_lp_total(kernel, span, p)
    if total == 0:
        return 0.0
    return _kernel_lp_tail(kernel, span, trunc, p) / total


def _suggest_horizon(kernel, driver, span, trunc, ratio, tol):
    gam = kernel.tail_exponent
    p = 2.0 if driver.finite_variance else driver.stable_alpha
    if gam is None or gam == 0:
        return 2.0 * trunc
    decay = p * (1.0 - gam) - 1.0
    if decay <= 0:
        return None
    return float(trunc * (ratio / tol) ** (1.0 / decay) * 1.1)


def _far_cells(start, step, kernel, driver, span, tol, max_cells, growth=0.05):
    """Geometric cells ``[a_i, b_i]`` to the left of ``start`` (< 0).

    Cell widths are ``growth`` times the distance to 0, so the kernel
    varies by a relative ``O(growth)`` across each cell.
    """
    edges = [start]
    b = start
    while len(edges) <= max_cells:
        b -= max(step, growth * -b)
        edges.append(b)
        if len(edges) % 20 == 0 and truncation_ratio(kernel, driver, span, -b) < tol * 1e-2:
            break
    else:
        raise TruncationError("far field did not reach the tolerance within the cell budget",
                              module="noise")
    e = np.asarray(edges[::-1])
    return e[:-1], e[1:]


RULES = ("cell-average", "left-point")


def _check_rule(rule, module):
    if rule not in RULES:
        raise ParameterError(f"unknown discretisation rule {rule!r}; use one of {RULES}", module=module)


def _cell_means(kernel, step, count):
    m = np.arange(count, dtype=float)
    return kernel.increment_integral(m * step, step) / step


def kernel_weights(kernel, step, count, rule="cell-average"):
    """Discrete kernel ``a[i]`` for lag cell ``[i step, (i+1) step]``, ``i < count``.

    ``"cell-average"`` integrates the kernel over the cell exactly;
    ``"left-point"`` evaluates it at the lag ``(i+1) step`` seen from the
    left end of the driver cell.
    """
    _check_rule(rule, "noise")
    if rule == "cell-average":
        return _cell_means(kernel, step, count)
    return kernel(step * np.arange(1, count + 1, dtype=float))


def pma_from_increments(kernel, increments, grid, *, far=None, rule="cell-average"):
    """Discretised pseudo moving average from given driver increments.

    ``increments`` lives on a grid whose last point is ``grid.end`` and
    which extends into the past.  With ``rule="cell-average"`` the kernel
    is averaged over each driver cell exactly
    (``(F((m+1) step) - F(m step)) / step``), so the indicator kernel
    reproduces the driver path without error; ``rule="left-point"``
    evaluates it at the lag seen from the left end of each cell.

    Parameters
    ----------
    kernel : KernelSpec
    increments : IncrementSeries
        Fine driver increments on ``[origin - trunc, end]``.
    grid : TimeGrid
        Output grid; must contain 0 and share the step and end point.
    far : tuple, optional
        ``(a, b, dz)`` far-field cells and their increments, shape
        ``dz: (..., n_far)``.
    rule : {"cell-average", "left-point"}
    """
    ig = increments.grid
    if abs(ig.step - grid.step) > 1e-9 * grid.step or abs(ig.end - grid.end) > 1e-9 * max(1.0, abs(grid.end)):
        raise GridError("increments and output grid must share step and end point", module="noise")
    L = ig.count - grid.count
    if L < 0:
        raise GridError("increments must extend at least to the output grid origin", module="noise")
    z = increments.values
    J = z.shape[-1]
    a = kernel_weights(kernel, grid.step, J, rule)
    full = signal.fftconvolve(z, a if z.ndim == 1 else a[None, :], axes=-1)
    y = full[..., L + np.arange(grid.count) - 1] if L > 0 else np.concatenate(
        [np.zeros(z.shape[:-1] + (1,)), full[..., np.arange(grid.count - 1)]], axis=-1)
    if far is not None:
        fa, fb, dz = far
        w = far_weights(kernel, grid.times, fa, fb)
        y = y + dz @ w.T
    return _pin(y, grid)


def far_weights(kernel, times, a, b):
    """Cell-averaged weights ``mean_{s in [a, b]} f(t - s)`` for far cells."""
    t = np.asarray(times)[:, None]
    w = b - a
    return kernel.increment_integral(t - b[None, :], w[None, :]) / w[None, :]


def simulate_pma(kernel, driver, grid, trunc, seed, *, n_paths=None, tol=DEFAULT_TRUNC_TOL,
                 far_field=False, workers=None, check=True, rule="cell-average"):
    """Simulate PMA noise ``N_t = int (f(t-s) - f(-s)) dZ_s`` on ``grid``.

    Parameters
    ----------
    kernel : KernelSpec
    driver : LevyTriplet
    grid : TimeGrid
        Output grid containing 0.
    trunc : float
        Driver increments are simulated on ``[grid.origin - trunc, grid.end]``.
    seed : int
    n_paths : int, optional
    tol : float
        Maximal relative neglected driver mass (``L^2`` or ``L^alpha``).
    far_field : bool
        Add geometric coarse cells beyond ``trunc`` until the neglected
        mass drops below ``tol / 100``.  Coarse increments are exact
        Levy increments over the wider cells.
    check : bool
        Run the admissibility and truncation checks.
    rule : {"cell-average", "left-point"}
        Kernel discretisation, see :func:`kernel_weights`.

    Returns
    -------
    Path
        ``meta["increments"]`` holds the fine :class:`IncrementSeries`.

    Raises
    ------
    IntegrabilityError
        If the kernel is not admissible for the driver.
    TruncationError
        If ``trunc`` neglects more than ``tol``; ``suggested`` holds a
        horizon that would pass.
    """
    from .integrability import ModularSpec, pma_admissibility

    if not trunc > 0:
        raise ParameterError("trunc must be positive", module="noise")
    _check_rule(rule, "noise")
    span = grid.end - grid.origin
    ratio = None
    if check:
        ok, _, diag = pma_admissibility(kernel, ModularSpec(driver), max(span, grid.step))
        if not ok:
            raise IntegrabilityError(f"kernel {kernel!r} is not admissible for this driver: {diag}",
                                     module="noise")
        ratio = truncation_ratio(kernel, driver, span, trunc)
        if ratio > tol and not far_field:
            sug = _suggest_horizon(kernel, driver, span, trunc, ratio, tol)
            raise TruncationError(
                f"truncation at {trunc} neglects a relative mass {ratio:.3g} > {tol:g}"
                + (f"; try trunc >= {sug:.4g} or far_field=True" if sug else "; use far_field=True"),
                suggested=sug, module="noise")
    fine = TimeGrid(grid.origin, grid.step, grid.count).extend_past(trunc)
    inc = sample_levy_increments_grid(driver, fine, seed, n_paths=n_paths, workers=workers)
    far = None
    if far_field and (ratio is None or ratio > tol * 1e-2):
        fa, fb = _far_cells(fine.origin, grid.step, kernel, driver, span, tol, 20000)

        def fill(i):
            return levy_increments(driver, fb - fa, substream(seed, i, "far"))

        dz = _rows(n_paths, fill, workers)
        far = (fa, fb, dz)
    values = pma_from_increments(kernel, inc, grid, far=far, rule=rule)
    if not np.all(np.isfinite(values)):
        raise NumericError("simulated noise has non-finite values", module="noise")
    meta = {"noise": {"kind": "pma", "kernel": kernel.to_dict(), "driver": driver.to_dict()},
            "seed": seed, "trunc": float(trunc), "truncation_ratio": ratio, "rule": rule,
            "far_cells": 0 if far is None else int(far[0].size), "increments": inc}
    return Path(grid, values, meta)


def sample_levy_increments_grid(driver, grid, seed, *, n_paths=None, workers=None):
    from .drivers import sample_levy_increments

    return sample_levy_increments(driver, grid, seed, n_paths=n_paths, workers=workers)


def simulate_sv(vol, grid, seed, *, n_paths=None, workers=None):
    """``N_t = int_0^t sigma dB`` on ``grid`` (left-point Euler sum)."""
    inc = sample_sv_increments(vol, grid, seed, n_paths=n_paths, workers=workers)
    values = inc.cumulative(grid.zero_index)
    return Path(grid, values, {"noise": {"kind": "sv", "vol": vol.to_dict()}, "seed": seed,
                               "increments": inc})


def simulate_noise(spec, grid, seed, *, n_paths=None, trunc=None, tol=DEFAULT_TRUNC_TOL,
                   far_field=False, workers=None, rule="cell-average"):
    """Dispatch on the noise family; drift is added deterministically."""
    if isinstance(spec, DriftNoise):
        base = simulate_noise(spec.base, grid, seed, n_paths=n_paths, trunc=trunc, tol=tol,
                              far_field=far_field, workers=workers, rule=rule)
        base.values = base.values + spec.mu * grid.times
        base.meta["noise"] = spec.to_dict()
        return base
    if isinstance(spec, FBMNoise):
        return simulate_fbm(spec.H, spec.sigma, grid, seed, n_paths=n_paths, workers=workers)
    if isinstance(spec, PMANoise):
        horizon = trunc if trunc is not None else max(spec.past_horizon, grid.end - grid.origin)
        return simulate_pma(spec.kernel, spec.driver, grid, horizon, seed, n_paths=n_paths, tol=tol,
                            far_field=far_field, workers=workers, rule=rule)
    if isinstance(spec, SVNoise):
        return simulate_sv(spec.vol, grid, seed, n_paths=n_paths, workers=workers)
    raise ParameterError(f"unknown noise spec {spec!r}", module="noise")


def _pma_variance(kernel, var_z1, t):
    t = abs(float(t))
    if t == 0:
        return 0.0
    return var_z1 * _kernel_lp_total(kernel, t, 2.0)


def variance_function(spec, t):
    """``V_N(t) = Var(N_t)``, vectorised over ``t``.

    fBm uses ``sigma**2 |t|**(2H)``; PMA noise uses the isometry
    ``Var(Z_1) int (f(t-s) - f(-s))**2 ds`` by adaptive quadrature split
    at 0 and ``t`` with the ``u**(2 beta)`` singularity weighted exactly.

    Raises
    ------
    UnsupportedMomentError
        For stable drivers with ``alpha < 2``.
    """
    t = np.asarray(t, dtype=float)
    if isinstance(spec, DriftNoise):
        return variance_function(spec.base, t)
    if isinstance(spec, FBMNoise):
        return spec.sigma ** 2 * np.abs(t) ** (2 * spec.H)
    if isinstance(spec, SVNoise):
        return spec.vol.second_moment * np.abs(t)
    if isinstance(spec, PMANoise):
        v = spec.driver.second_moment
        if not np.isfinite(v):
            raise UnsupportedMomentError("variance is infinite for a stable driver with alpha < 2",
                                         module="noise")
        flat = np.array([_pma_variance(spec.kernel, v, x) for x in t.ravel()])
        return flat.reshape(t.shape) if t.ndim else float(flat[0])
    raise ParameterError(f"unknown noise spec {spec!r}", module="noise")


def noise_mean_slope(spec):
    """``E[N_1]``; nonzero only for drift noise."""
    return float(spec.mu) if isinstance(spec, DriftNoise) else 0.0
