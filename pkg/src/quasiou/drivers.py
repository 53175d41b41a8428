"""Driving processes: Levy increments and stochastic-volatility noise.

All samplers are pure functions of ``(spec, grid, seed)``.  Path ``i`` of
an ensemble draws from its own Philox substream, so a path is identical
whether it is generated alone, inside a larger ensemble, or on another
worker thread.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from ._rng import substream
from .exceptions import GridError, ParameterError
from .grid import TimeGrid


@dataclass(frozen=True)
class StableJumps:
    """Symmetric alpha-stable jump part: ``E exp(iy Z_1) = exp(-scale**alpha |y|**alpha)``."""

    alpha: float
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha <= 2:
            raise ParameterError(f"stable alpha must lie in (0, 2], got {self.alpha}", module="drivers")
        if not self.scale > 0:
            raise ParameterError(f"stable scale must be positive, got {self.scale}", module="drivers")

    @property
    def levy_density_constant(self):
        """``C`` in the Levy density ``C |u|**(-1-alpha)`` (``alpha < 2``)."""
        from scipy.special import gamma

        a = self.alpha
        if a == 2:
            return 0.0
        if a == 1:
            return self.scale / np.pi
        return self.scale ** a * a / (2.0 * gamma(1.0 - a) * np.cos(np.pi * a / 2.0))


@dataclass(frozen=True)
class CompoundPoisson:
    """Compound Poisson jumps with normal jump sizes ``N(jump_mean, jump_sd**2)``.

    The process is centered exactly by the compensator ``rate * dt * jump_mean``.
    """

    rate: float
    jump_mean: float = 0.0
    jump_sd: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise ParameterError(f"compound Poisson rate must be positive, got {self.rate}", module="drivers")
        if self.jump_sd < 0:
            raise ParameterError("jump_sd must be nonnegative", module="drivers")
        if self.jump_mean == 0 and self.jump_sd == 0:
            raise ParameterError("jump law is degenerate at 0", module="drivers")


JumpSpec = Union[StableJumps, CompoundPoisson]


@dataclass(frozen=True)
class LevyTriplet:
    """Centered Levy driver ``Z`` with ``Z_0 = 0``.

    Parameters
    ----------
    gaussian_var : float
        Brownian variance per unit time.
    jumps : StableJumps or CompoundPoisson or None
        Jump component.
    """

    gaussian_var: float = 0.0
    jumps: Optional[JumpSpec] = None

    def __post_init__(self):
        if not np.isfinite(self.gaussian_var) or self.gaussian_var < 0:
            raise ParameterError("gaussian_var must be finite and nonnegative", module="drivers")
        if self.gaussian_var == 0 and self.jumps is None:
            raise ParameterError("driver has no activity (zero variance and no jumps)", module="drivers")

    @classmethod
    def brownian(cls, variance=1.0):
        return cls(gaussian_var=variance)

    @classmethod
    def stable(cls, alpha, scale=1.0):
        return cls(jumps=StableJumps(alpha, scale))

    @classmethod
    def compound_poisson(cls, rate, jump_mean=0.0, jump_sd=1.0, gaussian_var=0.0):
        return cls(gaussian_var=gaussian_var, jumps=CompoundPoisson(rate, jump_mean, jump_sd))

    @property
    def is_stable(self):
        return isinstance(self.jumps, StableJumps)

    @property
    def stable_alpha(self):
        return self.jumps.alpha if self.is_stable else 2.0

    @property
    def second_moment(self):
        """``Var(Z_1)``; ``inf`` for stable jumps with ``alpha < 2``."""
        v = self.gaussian_var
        j = self.jumps
        if isinstance(j, StableJumps):
            if j.alpha < 2:
                return np.inf
            v += 2.0 * j.scale ** 2
        elif isinstance(j, CompoundPoisson):
            v += j.rate * (j.jump_mean ** 2 + j.jump_sd ** 2)
        return float(v)

    @property
    def finite_variance(self):
        return np.isfinite(self.second_moment)

    def to_dict(self):
        d = {"gaussian_var": self.gaussian_var}
        j = self.jumps
        if isinstance(j, StableJumps):
            d["jumps"] = {"kind": "stable", "alpha": j.alpha, "scale": j.scale}
        elif isinstance(j, CompoundPoisson):
            d["jumps"] = {"kind": "compound_poisson", "rate": j.rate,
                          "jump_mean": j.jump_mean, "jump_sd": j.jump_sd}
        return d


def symmetric_stable(alpha, size, rng):
    """Standard symmetric stable draws by the Chambers-Mallows-Stuck transform.

    The characteristic function is ``exp(-|y|**alpha)``; ``alpha = 2``
    gives ``N(0, 2)``.
    """
    v = rng.uniform(-np.pi / 2, np.pi / 2, size)
    w = rng.standard_exponential(size)
    if alpha == 1:
        return np.tan(v)
    return (np.sin(alpha * v) / np.cos(v) ** (1.0 / alpha)
            * (np.cos((1.0 - alpha) * v) / w) ** ((1.0 - alpha) / alpha))


def levy_increments(triplet, widths, rng):
    """Increments of ``Z`` over consecutive cells of the given widths.

    Every cell law is exact: Gaussian, stable (self-similar scaling
    ``width**(1/alpha)``) and compound Poisson with normal jumps (sum of a
    Poisson number of normals, minus the compensator).
    """
    widths = np.asarray(widths, dtype=float)
    out = np.zeros(widths.shape)
    if triplet.gaussian_var > 0:
        out += np.sqrt(triplet.gaussian_var * widths) * rng.standard_normal(widths.shape)
    j = triplet.jumps
    if isinstance(j, StableJumps):
        out += j.scale * widths ** (1.0 / j.alpha) * symmetric_stable(j.alpha, widths.shape, rng)
    elif isinstance(j, CompoundPoisson):
        counts = rng.poisson(j.rate * widths)
        sums = counts * j.jump_mean + np.sqrt(counts) * j.jump_sd * rng.standard_normal(widths.shape)
        out += sums - j.rate * widths * j.jump_mean
    return out


@dataclass
class IncrementSeries:
    """Driver increments ``Z(t_{k+1}) - Z(t_k)`` on a grid.

    ``values`` has shape ``(grid.count - 1,)`` for one path or
    ``(m, grid.count - 1)`` for an ensemble.
    """

    grid: TimeGrid
    values: np.ndarray
    seed: int
    driver: object
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[-1] != self.grid.count - 1:
            raise GridError(
                f"{self.values.shape[-1]} increments do not match a grid of {self.grid.count} points",
                module="drivers")

    @property
    def n_paths(self):
        return 1 if self.values.ndim == 1 else self.values.shape[0]

    def coarsen(self, factor=2):
        """Aggregate ``factor`` consecutive increments (same underlying path)."""
        grid = self.grid.coarsen(factor)
        shape = self.values.shape[:-1] + (grid.count - 1, factor)
        return IncrementSeries(grid, self.values.reshape(shape).sum(axis=-1), self.seed,
                               self.driver, dict(self.meta, coarsened=factor))

    def cumulative(self, zero_index=0):
        """Path of ``Z`` on the grid, pinned to 0 at ``zero_index``."""
        z = np.concatenate([np.zeros(self.values.shape[:-1] + (1,)),
                            np.cumsum(self.values, axis=-1)], axis=-1)
        return z - z[..., zero_index:zero_index + 1]


def _rows(n_paths, fill, workers):
    if n_paths is None:
        return fill(0)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            return np.stack(list(ex.map(fill, range(n_paths))))
    return np.stack([fill(i) for i in range(n_paths)])


def sample_levy_increments(triplet, grid, seed, *, n_paths=None, path=0, workers=None):
    """Sample driver increments on ``grid``.

    Parameters
    ----------
    triplet : LevyTriplet
    grid : TimeGrid
    seed : int
    n_paths : int, optional
        Return an ``(n_paths, count - 1)`` ensemble; path ``i`` uses
        substream ``(seed, i)``.  If omitted a single path with index
        ``path`` is returned.
    workers : int, optional
        Threads used to fill an ensemble.  Output does not depend on it.

    Returns
    -------
    IncrementSeries
    """
    if not isinstance(triplet, LevyTriplet):
        raise ParameterError("triplet must be a LevyTriplet", module="drivers")
    widths = np.full(grid.count - 1, grid.step)

    def fill(i):
        return levy_increments(triplet, widths, substream(seed, path + i, "driver"))

    values = _rows(n_paths, fill, workers)
    return IncrementSeries(grid, values, seed, triplet, {"path_offset": path})


@dataclass(frozen=True)
class VolatilitySpec:
    """Stationary volatility ``sigma_t > 0``.

    ``kind="constant"``: ``sigma_t = level``.
    ``kind="exp_ou"``: ``sigma_t = exp(Y_t)`` with ``Y`` a stationary
    Gaussian OU process of mean-reversion ``kappa`` and variance ``v``;
    the mean of ``Y`` is set so that ``E[sigma_0**2] = mean_square``.
    """

    kind: str = "constant"
    level: float = 1.0
    kappa: float = 1.0
    v: float = 0.0
    mean_square: float = 1.0

    def __post_init__(self):
        if self.kind == "constant":
            if not self.level > 0:
                raise ParameterError("constant volatility must be positive", module="drivers")
        elif self.kind == "exp_ou":
            if not self.kappa > 0:
                raise ParameterError("exp-OU volatility needs kappa > 0 to be stationary", module="drivers")
            if self.v < 0 or not np.isfinite(self.v):
                raise ParameterError("exp-OU variance must be finite and nonnegative", module="drivers")
            if not self.mean_square > 0:
                raise ParameterError("mean_square must be positive", module="drivers")
        else:
            raise ParameterError(f"unknown volatility kind {self.kind!r}", module="drivers")

    @property
    def log_mean(self):
        return 0.5 * np.log(self.mean_square) - self.v

    @property
    def second_moment(self):
        return self.level ** 2 if self.kind == "constant" else self.mean_square

    def to_dict(self):
        if self.kind == "constant":
            return {"kind": "constant", "level": self.level}
        return {"kind": "exp_ou", "kappa": self.kappa, "v": self.v, "mean_square": self.mean_square}


def sample_volatility(vol, grid, rng):
    """``sigma`` at the grid points, started from its stationary law."""
    n = grid.count
    if vol.kind == "constant":
        return np.full(n, vol.level)
    rho = np.exp(-vol.kappa * grid.step)
    innov_sd = np.sqrt(vol.v * -np.expm1(-2.0 * vol.kappa * grid.step))
    eps = rng.standard_normal(n)
    y = np.empty(n)
    y[0] = np.sqrt(vol.v) * eps[0]
    for k in range(1, n):
        y[k] = rho * y[k - 1] + innov_sd * eps[k]
    return np.exp(vol.log_mean + y)


def sample_sv_increments(vol, grid, seed, *, n_paths=None, path=0, workers=None):
    """Increments ``sigma(t_k) (B(t_{k+1}) - B(t_k))`` of ``N = int sigma dB``.

    ``sigma`` and ``B`` use independent substreams (tags ``"vol"`` and
    ``"driver"``) of the same seed, so the Brownian draws coincide with
    those of :func:`sample_levy_increments` for a unit Brownian driver.
    """
    if not isinstance(vol, VolatilitySpec):
        raise ParameterError("vol must be a VolatilitySpec", module="drivers")
    widths = np.full(grid.count - 1, grid.step)
    unit = LevyTriplet.brownian(1.0)

    def fill(i):
        sigma = sample_volatility(vol, grid, substream(seed, path + i, "vol"))
        db = levy_increments(unit, widths, substream(seed, path + i, "driver"))
        return sigma[:-1] * db

    values = _rows(n_paths, fill, workers)
    return IncrementSeries(grid, values, seed, vol, {"path_offset": path, "kind": "sv"})
