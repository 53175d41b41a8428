import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from quasiou.drivers import LevyTriplet, sample_levy_increments
from quasiou.estimators import (EmpiricalACF, MovingAverageTransformer, PMANoiseTransformer, PowerLawRegressor,
                                QOUTransformer)
from quasiou.grid import TimeGrid
from quasiou.kernels import Indicator, TruncPower
from quasiou.langevin import QouConfig, qou_from_noise
from quasiou.noise import Path, pma_from_increments


def test_qou_transformer_matches_function():
    rng = np.random.default_rng(0)
    step, burn = 0.01, 20.0
    grid = TimeGrid.span(0, 1, step).extend_past(burn)
    N = np.cumsum(rng.standard_normal((3, grid.count)), axis=1) * 0.1
    tr = QOUTransformer(lam=1.0, step=step, burn_in=burn).fit(N)
    X = tr.transform(N)
    ref = qou_from_noise(Path(grid, N), QouConfig(1.0, burn_in=burn)).values
    assert np.array_equal(X, ref)
    assert X.shape == (3, 101)


def test_not_fitted_and_clone():
    tr = QOUTransformer(lam=2.0)
    with pytest.raises(NotFittedError):
        tr.transform(np.zeros((1, 5)))
    assert clone(tr).get_params() == tr.get_params()


def test_pma_transformer_and_pipeline():
    step, past = 0.01, 300
    grid = TimeGrid(-past * step, step, 401)
    inc = sample_levy_increments(LevyTriplet.brownian(), grid, 1, n_paths=2)
    k = TruncPower(1.0, 0.5, 0.7)
    N = PMANoiseTransformer(k, step, past).fit_transform(inc.values)
    assert np.array_equal(N, pma_from_increments(k, inc, grid.nonnegative()))
    pipe = make_pipeline(PMANoiseTransformer(Indicator(), step, 0))
    out = pipe.fit_transform(inc.values)
    assert np.allclose(out[:, 1:], np.cumsum(inc.values, axis=1))


def test_moving_average_transformer_ou():
    step, past = 0.01, 3000
    grid = TimeGrid(-past * step, step, past + 101)
    inc = sample_levy_increments(LevyTriplet.brownian(), grid, 2, n_paths=2)
    X = MovingAverageTransformer(Indicator(), 1.0, step, past, tol=1e-6).fit_transform(inc.values)
    w = np.exp(-1.0 * step * (np.arange(past, 0, -1) - 0.5))
    # X_0 is the exponentially weighted sum of past increments
    assert X[:, 0] == pytest.approx(inc.values[:, :past] @ w, rel=1e-3)


def test_power_law_regressor():
    t = np.geomspace(1, 100, 20)[:, None]
    y = 3.0 * t[:, 0] ** -0.6
    reg = PowerLawRegressor().fit(t, y)
    assert reg.exponent_ == pytest.approx(-0.6) and reg.constant_ == pytest.approx(3.0)
    assert reg.score(t, y) == pytest.approx(1.0)
    assert np.allclose(reg.predict(t), y)


def test_empirical_acf_estimator():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((2000, 30))
    est = EmpiricalACF(lags=(0.0, 0.1), step=0.1).fit(X)
    assert est.acf_[0] == pytest.approx(1.0, abs=5 * est.se_[0])
    assert est.transform(X).shape == (1, 2)
