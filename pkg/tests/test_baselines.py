import numpy as np
import pytest

from tensorcast.baselines import ArModel, ArPredictor, LstmPredictor, ar_fit, ar_forecast, make_predictor
from tensorcast.lstm import TrainConfig


def test_ar1_coefficient_recovered():
    rng = np.random.default_rng(0)
    x = np.empty(500)
    x[0] = 1.0
    for t in range(1, x.size):
        x[t] = 0.9 * x[t - 1] + 1e-3 * rng.standard_normal()
    model = ar_fit(x, 1)
    assert model.coef[0] == pytest.approx(0.9, abs=0.02)


def test_constant_series_forecast_is_constant():
    model = ar_fit(np.full(20, 3.5), 1)
    np.testing.assert_allclose(ar_forecast(model, np.full(20, 3.5), 5), 3.5, rtol=1e-10)


def test_white_noise_coefficients_near_zero():
    x = np.random.default_rng(1).standard_normal(1000)
    np.testing.assert_allclose(ar_fit(x, 2).coef, 0.0, atol=0.1)


def test_random_walk_persistence():
    model = ArModel(np.array([1.0]), 0.0)
    np.testing.assert_array_equal(ar_forecast(model, [3.0, 7.0, 2.5], 4), [2.5] * 4)


def test_geometric_decay_by_hand():
    model = ArModel(np.array([0.5]), 0.0)
    np.testing.assert_allclose(ar_forecast(model, [8.0], 3), [4.0, 2.0, 1.0])


def test_horizon_one_matches_least_squares_prediction():
    x = np.random.default_rng(2).standard_normal(60).cumsum()
    model = ar_fit(x, 3)
    lags = x[-1:-4:-1]
    assert ar_forecast(model, x, 1)[0] == pytest.approx(model.intercept + model.coef @ lags, abs=1e-12)


def test_lag_order_is_newest_first():
    # x_t = 2 x_{t-2} exactly: coefficient on lag 2, none on lag 1
    x = np.array([1.0, 1.0, 2, 2, 4, 4, 8, 8, 16, 16])
    model = ar_fit(x, 2)
    np.testing.assert_allclose(model.coef, [0.0, 2.0], atol=1e-8)
    np.testing.assert_allclose(ar_forecast(model, x, 2), [32.0, 32.0], rtol=1e-8)


def test_short_series_rejected():
    with pytest.raises(ValueError, match="too short"):
        ar_fit(np.arange(5.0), 3)


def test_make_predictor():
    assert isinstance(make_predictor("ar", ar_order=2), ArPredictor)
    p = make_predictor("lstm", seed=5, train=TrainConfig(epochs=3))
    assert isinstance(p, LstmPredictor) and p.cfg.seed == 5 and p.cfg.epochs == 3
    with pytest.raises(ValueError):
        make_predictor("svm")


def test_predictors_share_protocol():
    series = np.sin(np.arange(30) / 3.0)
    for p in (ArPredictor(2), LstmPredictor(TrainConfig(num_layers=1, layer_width=2, epochs=3))):
        assert p.fit(series).forecast(4).shape == (4,)
