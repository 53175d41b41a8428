"""scikit-learn style wrappers.

Arrays follow the library convention: one row per path, one column per
grid point (or per driver cell for increments).  The transformers are
stateless apart from input-shape bookkeeping, so ``fit`` only validates.
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .analytics import CovarianceCurve, empirical_acf, fit_power_law
from .drivers import IncrementSeries
from .exceptions import ParameterError
from .grid import TimeGrid
from .kernels import KernelSpec, psi_transform
from .langevin import PathEnsemble, QouConfig, qou_from_noise, qou_ma_path
from .noise import Path, pma_from_increments


class QOUTransformer(TransformerMixin, BaseEstimator):
    """Noise paths to the stationary Langevin solution.

    Each input row is a noise path on ``-burn_in, ..., t_max`` with spacing
    ``step``; the output keeps the columns with ``t >= 0``.

    Parameters
    ----------
    lam : float
        Mean-reversion rate.
    step : float
        Grid spacing of the input.
    burn_in : float, optional
        Past window; defaults to ``log(1/tol) / lam``.
    tol : float
    """

    def __init__(self, lam=1.0, step=0.01, burn_in=None, tol=1e-8):
        self.lam = lam
        self.step = step
        self.burn_in = burn_in
        self.tol = tol

    def fit(self, X, y=None):
        X = check_array(X)
        self.config_ = QouConfig(self.lam, self.burn_in, self.tol)
        if not self.step > 0:
            raise ParameterError("step must be positive", module="estimators")
        self.burn_points_ = int(np.ceil(self.config_.burn_in / self.step - 1e-9))
        if X.shape[1] <= self.burn_points_:
            raise ParameterError(f"rows need more than {self.burn_points_} points to cover the burn-in",
                                 module="estimators")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "config_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        grid = TimeGrid(-self.burn_points_ * self.step, self.step, X.shape[1])
        return qou_from_noise(Path(grid, X), self.config_).values


class PMANoiseTransformer(TransformerMixin, BaseEstimator):
    """Driver increments to PMA noise ``sum_j a(t - s_j) dZ_j``.

    Rows hold ``n`` increments on cells of width ``step``; the output has
    ``n + 1 - past`` columns, the noise on the grid points from
    ``past * step`` onward (pinned to 0 at the first output point).

    Parameters
    ----------
    kernel : KernelSpec
    step : float
    past : int
        Number of leading cells used only as past.
    rule : {"cell-average", "left-point"}
    """

    def __init__(self, kernel=None, step=0.01, past=0, rule="cell-average"):
        self.kernel = kernel
        self.step = step
        self.past = past
        self.rule = rule

    def fit(self, X, y=None):
        X = check_array(X)
        if not isinstance(self.kernel, KernelSpec):
            raise ParameterError("kernel must be a KernelSpec", module="estimators")
        if not 0 <= self.past < X.shape[1]:
            raise ParameterError("past must lie in [0, number of increments)", module="estimators")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X)
        n = X.shape[1]
        full = TimeGrid(-self.past * self.step, self.step, n + 1)
        out = full.nonnegative()
        inc = IncrementSeries(full, X, seed=None, driver=None)
        return np.atleast_2d(pma_from_increments(self.kernel, inc, out, rule=self.rule))


class MovingAverageTransformer(TransformerMixin, BaseEstimator):
    """Driver increments to the stationary solution via ``psi_f``.

    Rows hold increments on ``-past * step, ..., t_max``; output columns
    are the grid points ``0, step, ..., t_max``.
    """

    def __init__(self, kernel=None, lam=1.0, step=0.01, past=0, tol=1e-6, rule="cell-average"):
        self.kernel = kernel
        self.lam = lam
        self.step = step
        self.past = past
        self.tol = tol
        self.rule = rule

    def fit(self, X, y=None):
        X = check_array(X)
        if not isinstance(self.kernel, KernelSpec):
            raise ParameterError("kernel must be a KernelSpec", module="estimators")
        if not 0 < self.past < X.shape[1]:
            raise ParameterError("past must lie in (0, number of increments)", module="estimators")
        self.n_features_in_ = X.shape[1]
        self.psi_ = psi_transform(self.kernel, self.lam, self.step * np.arange(X.shape[1] + 1))
        return self

    def transform(self, X):
        check_is_fitted(self, "psi_")
        X = check_array(X)
        n = X.shape[1]
        grid = TimeGrid(-self.past * self.step, self.step, n + 1)
        inc = IncrementSeries(grid, X, seed=None, driver=None)
        return np.atleast_2d(qou_ma_path(self.psi_, inc, self.past * self.step, tol=self.tol,
                                         rule=self.rule).values)


class PowerLawRegressor(RegressorMixin, BaseEstimator):
    """Log-log least squares ``y ~ constant * t**exponent`` on ``window``.

    ``X`` is a single column of positive lags.  ``signed=True`` accepts a
    target that is negative throughout.
    """

    def __init__(self, window=None, signed=False):
        self.window = window
        self.signed = signed

    def fit(self, X, y):
        X = check_array(X)
        y = np.asarray(y, dtype=float).ravel()
        if X.shape[1] != 1 or y.shape[0] != X.shape[0]:
            raise ValueError("X must be one column of lags matching y")
        t = X[:, 0]
        order = np.argsort(t)
        window = self.window or (t.min(), t.max())
        fit = fit_power_law(CovarianceCurve(t[order], y[order]), window, signed=self.signed)
        self.fit_ = fit
        self.exponent_ = fit.exponent
        self.constant_ = fit.constant
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        X = check_array(X)
        return self.constant_ * X[:, 0] ** self.exponent_

    def score(self, X, y):
        """R^2 in log space."""
        check_is_fitted(self, "fit_")
        y = np.abs(np.asarray(y, dtype=float).ravel())
        p = np.abs(self.predict(X))
        ly, lp = np.log(y), np.log(p)
        return float(1 - np.sum((ly - lp) ** 2) / np.sum((ly - ly.mean()) ** 2))


class EmpiricalACF(BaseEstimator):
    """Ensemble autocovariance estimator with jackknife errors.

    ``fit`` takes paths as rows on a grid of spacing ``step``; the
    estimate is in ``acf_`` and ``se_``.
    """

    def __init__(self, lags=(0.0,), step=0.01):
        self.lags = lags
        self.step = step

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2)
        ens = PathEnsemble(TimeGrid(0.0, self.step, X.shape[1]), X)
        self.curve_ = empirical_acf(ens, self.lags)
        self.acf_ = self.curve_.values
        self.se_ = self.curve_.se
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Per-lag estimates for a new ensemble, shape ``(1, n_lags)``."""
        check_is_fitted(self, "curve_")
        X = check_array(X, ensure_min_samples=2)
        ens = PathEnsemble(TimeGrid(0.0, self.step, X.shape[1]), X)
        return empirical_acf(ens, self.lags).values[None, :]
