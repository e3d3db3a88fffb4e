import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensorcast.lstm import (
    LstmDivergenceError,
    LstmModel,
    TrainConfig,
    forecast,
    init_model,
    loss_and_grad,
    lstm_forward,
    param_count,
    train_lstm,
)


def finite_difference(model, inputs, targets, step=1e-5):
    grad = np.empty_like(model.params)
    for i in range(model.params.size):
        keep = model.params[i]
        model.params[i] = keep + step
        up, _ = loss_and_grad(model, inputs, targets)
        model.params[i] = keep - step
        down, _ = loss_and_grad(model, inputs, targets)
        model.params[i] = keep
        grad[i] = (up - down) / (2 * step)
    return grad


def max_relative_gap(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)))


def test_param_count():
    # layer 0: W (4H x 1), layers > 0: W (4H x H); each also U (4H x H), b (4H); readout H + 1
    assert param_count(1, 2) == 8 + 16 + 8 + 3
    assert param_count(4, 4) == (16 + 64 + 16) + 3 * (64 + 64 + 16) + 5


def test_gradient_matches_finite_differences_small():
    model = init_model(1, 2, seed=3)
    rng = np.random.default_rng(0)
    model.params[:] = rng.uniform(-0.8, 0.8, model.params.size)
    seq = rng.standard_normal(6)
    _, grad = loss_and_grad(model, seq[:-1], seq[1:])
    assert max_relative_gap(grad, finite_difference(model, seq[:-1], seq[1:])) <= 1e-4


def test_gradient_matches_finite_differences_stacked():
    model = init_model(3, 3, seed=1)
    seq = np.sin(np.linspace(0, 3, 9))
    _, grad = loss_and_grad(model, seq[:-1], seq[1:])
    np.testing.assert_allclose(grad, finite_difference(model, seq[:-1], seq[1:]), rtol=1e-4, atol=1e-9)


def test_zero_weights_collapse_to_readout_bias():
    model = LstmModel(2, 3, np.zeros(param_count(2, 3)))
    model.params[-1] = 0.7
    out, (h, c) = lstm_forward(model, np.array([1.0, -2.0, 3.0]))
    np.testing.assert_array_equal(out, [0.7, 0.7, 0.7])
    np.testing.assert_array_equal(h, 0.0)
    np.testing.assert_array_equal(c, 0.0)


def test_single_step_advances_state_once():
    model = init_model(2, 3, seed=0)
    out, state = lstm_forward(model, [0.4])
    assert out.shape == (1,)
    out2, _ = lstm_forward(model, [0.4, 0.9])
    # stepping from the returned state matches a two-step run
    step, _ = lstm_forward(model, [0.9], state)
    assert step[0] == pytest.approx(out2[1], abs=1e-14)
    assert out[0] == pytest.approx(out2[0], abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.lists(st.floats(-50, 50), min_size=1, max_size=12))
def test_hidden_state_bounded(seed, seq):
    model = init_model(2, 3, seed=seed)
    model.params[:] *= 10
    _, (h, _) = lstm_forward(model, np.array(seq))
    assert np.all(np.abs(h) <= 1.0)


def test_constant_series_forecast():
    model, history = train_lstm(np.full(80, 5.0), TrainConfig(epochs=200))
    np.testing.assert_allclose(forecast(model, np.full(80, 5.0), 10), 5.0, atol=1e-2)


def test_sine_training_reduces_loss():
    series = np.sin(2 * np.pi * np.arange(80) / 7)
    _, history = train_lstm(series, TrainConfig(epochs=150))
    assert np.all(np.isfinite(history))
    assert history[-1] < history[0]


def test_retrain_is_bitwise_reproducible():
    series = np.cos(np.arange(40) / 3.0) + np.arange(40) / 40
    a, ha = train_lstm(series, TrainConfig(epochs=30, seed=11))
    b, hb = train_lstm(series, TrainConfig(epochs=30, seed=11))
    assert a.params.tobytes() == b.params.tobytes()
    assert ha == hb


def test_horizon_one_is_last_forward_output():
    series = np.sin(np.arange(30) / 2.0)
    model, _ = train_lstm(series, TrainConfig(epochs=20))
    out, _ = lstm_forward(model, model.standardize(series))
    assert forecast(model, series, 1)[0] == pytest.approx(model.destandardize(out[-1]), abs=1e-12)


def test_forecast_shape_for_pipeline_horizon():
    series = np.random.default_rng(0).random(80)
    model, _ = train_lstm(series, TrainConfig(epochs=5))
    assert forecast(model, series, 20).shape == (20,)


def test_save_load_round_trip(tmp_path):
    model, _ = train_lstm(np.arange(12.0), TrainConfig(num_layers=2, layer_width=3, epochs=5))
    model.save(tmp_path / "m.json")
    back = LstmModel.load(tmp_path / "m.json")
    assert back.params.tobytes() == model.params.tobytes()
    assert (back.mean, back.scale) == (model.mean, model.scale)


def test_divergence_raises():
    with pytest.raises(LstmDivergenceError) as info:
        train_lstm(np.sin(np.arange(30.0)), TrainConfig(learning_rate=1e300, epochs=5))
    assert info.value.epoch is not None


def test_input_validation():
    with pytest.raises(ValueError):
        train_lstm([1.0, 2.0])
    with pytest.raises(ValueError):
        train_lstm([1.0, np.nan, 2.0, 3.0])
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
