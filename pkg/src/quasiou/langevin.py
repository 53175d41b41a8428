"""Stationary Langevin solutions ``dX = -lam X dt + dN``.

Two constructions are provided:

* :func:`qou_from_noise` applies the explicit solution
  ``X_t = N_t - lam * int_{-inf}^t exp(-lam (t - s)) N_s ds`` to a noise
  path that reaches ``burn_in`` time units into the past;
* :func:`qou_ma_path` convolves driver increments with the
  moving-average kernel ``psi_f``.

Both agree pathwise (up to discretisation) when fed the same driver.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .exceptions import GridError, ParameterError, TruncationError
from .grid import TimeGrid
from .kernels import PsiEval, _exp_ramp, psi_transform
from .noise import DEFAULT_TRUNC_TOL, RULES, PMANoise, Path, simulate_noise

_REL = 1e-9


@dataclass(frozen=True)
class QouConfig:
    """Mean reversion and burn-in for the explicit solution.

    Parameters
    ----------
    lam : float
        Mean-reversion rate, positive.
    burn_in : float, optional
        Past window used for the exponentially weighted integral; defaults
        to ``log(1/tol) / lam``.
    tol : float
        Allowed size of ``exp(-lam * burn_in)``.
    rule : str
        Integration rule; only ``"exp-trapezoid"`` (exact exponential
        weights against the linear interpolant of ``N``) is implemented.
    """

    lam: float
    burn_in: float = None
    tol: float = 1e-8
    rule: str = "exp-trapezoid"

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise ParameterError(f"lambda must be positive, got {self.lam}", module="langevin")
        if not 0 < self.tol < 1:
            raise ParameterError("tol must lie in (0, 1)", module="langevin")
        if self.rule != "exp-trapezoid":
            raise ParameterError(f"unknown integration rule {self.rule!r}", module="langevin")
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", float(np.log(1.0 / self.tol) / self.lam))
        elif not self.burn_in > 0:
            raise ParameterError("burn_in must be positive", module="langevin")

    @property
    def burn_in_bias(self):
        return float(np.exp(-self.lam * self.burn_in))

    def to_dict(self):
        return {"lambda": self.lam, "burn_in": self.burn_in, "tol": self.tol, "rule": self.rule}


class PathEnsemble(Path):
    """``m >= 1`` paths on a common grid with provenance metadata."""

    def __post_init__(self):
        super().__post_init__()
        if self.values.ndim == 1:
            self.values = self.values[None, :]
        if self.values.ndim != 2 or self.values.shape[0] < 1:
            raise GridError("an ensemble needs a 2-d array with at least one path", module="langevin")

    @classmethod
    def from_path(cls, path):
        return cls(path.grid, path.values, dict(path.meta))


def exp_trapezoid_weights(lam, step):
    """Weights ``(a, b)`` with ``int_0^step e^{-lam(step - v)} l(v) dv = a l(0) + b l(step)`` for linear ``l``."""
    x = lam * step
    b = float(_exp_ramp(np.array([x]))[0]) / (lam * x)
    a = float(-np.expm1(-x)) / lam - b
    return a, b


def qou_from_noise(noise, cfg):
    """Stationary solution from a noise path via the explicit formula.

    Parameters
    ----------
    noise : Path
        Noise on a grid covering ``[-burn_in, t_max]`` and containing 0.
    cfg : QouConfig

    Returns
    -------
    Path
        ``X`` on the nonnegative part of the noise grid.  ``meta`` records
        ``truncation_bound = exp(-lam B) sup |N|`` with ``B`` the available
        past.

    Raises
    ------
    TruncationError
        If the noise grid reaches less than ``cfg.burn_in`` into the past,
        or ``exp(-lam B)`` exceeds ``cfg.tol``.
    """
    grid = noise.grid
    k0 = grid.zero_index
    past = -grid.origin
    lam = cfg.lam
    if past < cfg.burn_in * (1 - _REL) or np.exp(-lam * past) > cfg.tol:
        need = max(cfg.burn_in, np.log(1.0 / cfg.tol) / lam)
        raise TruncationError(f"noise reaches {past:g} into the past but burn-in {need:g} is required",
                              suggested=float(need), module="langevin")
    a, b = exp_trapezoid_weights(lam, grid.step)
    rho = np.exp(-lam * grid.step)
    N = noise.values
    u = np.zeros_like(N)
    u[..., 1:] = a * N[..., :-1] + b * N[..., 1:]
    J = signal.lfilter([1.0], [1.0, -rho], u, axis=-1)
    X = (N - lam * J)[..., k0:]
    bound = float(np.exp(-lam * past) * np.max(np.abs(N))) if N.size else 0.0
    meta = dict(noise.meta)
    meta.update({"lambda": lam, "route": "explicit", "burn_in": float(past), "truncation_bound": bound})
    meta.pop("increments", None)
    return Path(grid.nonnegative(), X, meta)


def _psi_cell_means(psi, step, count):
    lags = np.asarray(psi.times)
    if lags.size < count or abs(lags[0]) > _REL * step:
        raise GridError("psi must be evaluated on lags 0, step, 2 step, ... covering the convolution",
                        module="langevin")
    d = np.diff(lags[:count])
    if np.any(np.abs(d - step) > _REL * step):
        raise GridError("psi lags must be spaced by the increment step", module="langevin")
    return np.diff(np.asarray(psi.integral)[:count]) / step


def _ma_tail_ratio(psi, step, count):
    """Estimated relative L^2 mass of psi beyond the last used lag."""
    vals = np.asarray(psi.values)[:count]
    lags = np.asarray(psi.times)[:count]
    mass = float(np.sum(vals[1:] ** 2) * step)
    if mass == 0:
        return 0.0
    T = lags[-1]
    sel = (lags >= T / 10) & (vals != 0)
    if sel.sum() < 4 or abs(vals[-1]) < 1e-300:
        return 0.0
    slope = np.polyfit(np.log(lags[sel]), np.log(np.abs(vals[sel])), 1)[0]
    if 2 * slope >= -1:
        return np.inf
    return float(vals[-1] ** 2 * T / (-2 * slope - 1) / mass)


def qou_ma_path(psi, increments, trunc, *, out_grid=None, tol=DEFAULT_TRUNC_TOL, check=True,
                rule="cell-average"):
    """Moving-average construction ``X_t = sum_j psi_bar(t - s_j) dZ_j``.

    ``psi_bar`` is the average of ``psi`` over each driver cell, computed
    from ``psi.integral`` (``rule="cell-average"``), or ``psi`` at the lag
    seen from the left end of the cell (``rule="left-point"``).  Only the driver cells within ``trunc`` of the
    output origin (and later) are used.

    Parameters
    ----------
    psi : PsiEval
        Evaluated on lags ``0, step, 2 step, ...``.
    increments : IncrementSeries
        Driver increments; their grid must end at the output grid end.
    trunc : float
        Past extension of the driver used before the output origin.
    out_grid : TimeGrid, optional
        Defaults to the nonnegative part of the increment grid.
    tol : float
        Allowed relative ``L^2`` mass of ``psi`` beyond the used lags.

    Raises
    ------
    TruncationError
        If the increments do not reach ``trunc`` into the past or the
        estimated neglected mass exceeds ``tol``.
    """
    ig = increments.grid
    grid = out_grid if out_grid is not None else ig.nonnegative()
    if abs(ig.step - grid.step) > _REL * grid.step or abs(ig.end - grid.end) > _REL * max(1.0, abs(grid.end)):
        raise GridError("increments and output grid must share step and end point", module="langevin")
    L = int(np.ceil(trunc / grid.step - _REL))
    avail = ig.count - grid.count
    if L > avail:
        raise TruncationError(f"increments reach {avail * grid.step:g} into the past, {trunc:g} requested",
                              suggested=float(trunc), module="langevin")
    z = increments.values[..., avail - L:]
    J = z.shape[-1]
    if rule not in RULES:
        raise ParameterError(f"unknown discretisation rule {rule!r}", module="langevin")
    means = _psi_cell_means(psi, grid.step, J + 1)
    if rule == "left-point":
        means = np.asarray(psi.values)[1:J + 1]
    if check and tol is not None:
        ratio = _ma_tail_ratio(psi, grid.step, J + 1)
        if ratio > tol:
            raise TruncationError(f"estimated relative bias {ratio:.3g} from truncating psi at {J * grid.step:g}",
                                  suggested=None, module="langevin")
    full = signal.fftconvolve(z, means if z.ndim == 1 else means[None, :], axes=-1)
    if L > 0:
        X = full[..., L - 1 + np.arange(grid.count)]
    else:
        X = np.concatenate([np.zeros(z.shape[:-1] + (1,)), full[..., :grid.count - 1]], axis=-1)
    meta = {"lambda": psi.lam, "route": "moving-average", "trunc": float(L * grid.step), "rule": rule,
            "seed": increments.seed}
    return Path(grid, X, meta)


def langevin_residual(X, N, lam, *, per_path=False):
    """Discrete defect of ``X_t = X_0 - lam int_0^t X_s ds + N_t - N_0``.

    The time integral is the trapezoid rule on the grid.  ``N`` may live on
    a larger grid with the same step; it is restricted to the grid of ``X``.

    Returns
    -------
    float or ndarray
        Maximum over the grid (and over paths unless ``per_path``).
    """
    if abs(X.grid.step - N.grid.step) > _REL * X.grid.step:
        raise GridError("X and N must share the grid step", module="langevin")
    if not X.grid.same_as(N.grid):
        try:
            N = N.restrict(X.grid)
        except GridError:
            raise GridError("the grid of X is not contained in the grid of N", module="langevin") from None
    k0 = X.grid.zero_index
    x = np.atleast_2d(X.values)
    n = np.atleast_2d(N.values)
    h = X.grid.step
    cum = np.concatenate([np.zeros((x.shape[0], 1)), np.cumsum(0.5 * h * (x[:, 1:] + x[:, :-1]), axis=1)], axis=1)
    cum -= cum[:, k0:k0 + 1]
    d = np.abs(x - x[:, k0:k0 + 1] + lam * cum - (n - n[:, k0:k0 + 1]))
    per = d.max(axis=1)
    if per_path:
        return per
    return float(per.max())


def simulate_qou(spec, lam, grid, seed, *, n_paths=None, route="explicit", cfg=None, trunc=None,
                 tol=DEFAULT_TRUNC_TOL, far_field=False, workers=None, rule="cell-average"):
    """Stationary QOU paths on ``grid`` (which must start at 0).

    ``route="explicit"`` simulates the noise on ``[-burn_in, end]`` and
    applies :func:`qou_from_noise`; ``route="moving-average"`` (PMA noise
    only) convolves the driver with ``psi_f``.  ``rule`` selects the kernel
    discretisation of either convolution (see ``noise.kernel_weights``).

    Returns
    -------
    PathEnsemble or Path
        The noise path (on the extended grid) is in ``meta["noise_path"]``
        for the explicit route.
    """
    if abs(grid.origin) > _REL * grid.step:
        raise GridError("QOU output grids start at t = 0", module="langevin")
    cfg = cfg or QouConfig(lam)
    if route == "explicit":
        ext = grid.extend_past(cfg.burn_in)
        N = simulate_noise(spec, ext, seed, n_paths=n_paths, trunc=trunc, tol=tol, far_field=far_field,
                           workers=workers, rule=rule)
        X = qou_from_noise(N, cfg)
        X.meta["noise_path"] = N
    elif route == "moving-average":
        if not isinstance(spec, PMANoise):
            raise ParameterError("the moving-average route needs PMA noise", module="langevin")
        from .drivers import sample_levy_increments

        horizon = trunc if trunc is not None else cfg.burn_in
        ext = grid.extend_past(horizon)
        inc = sample_levy_increments(spec.driver, ext, seed, n_paths=n_paths, workers=workers)
        psi = psi_transform(spec.kernel, lam, ext.step * np.arange(ext.count))
        X = qou_ma_path(psi, inc, horizon, out_grid=grid, tol=tol, rule=rule)
    else:
        raise ParameterError(f"unknown route {route!r}", module="langevin")
    return PathEnsemble.from_path(X) if n_paths is not None else X
