import math

import numpy as np
import pytest

from preambledet.channel_sim import ScenarioConfig
from preambledet.dataset import Dataset, build_dataset
from preambledet.mlp import (
    TrainConfig,
    TrainingDiverged,
    forward,
    init_model,
    load_model,
    loss_and_gradients,
    predict,
    save_model,
    train,
)


def _small(K, seed=0):
    rng = np.random.default_rng(seed)
    m = init_model(K, rng, hidden=(8, 8))
    for b in m.biases:
        b[:] = rng.normal(0, 0.3, b.shape)
    m.mean = rng.normal(0, 1, 17)
    m.std = rng.uniform(0.5, 2.0, 17)
    return m


def _numeric_grad(model, X, y, param, eps=1e-5):
    g = np.zeros_like(param)
    it = np.nditer(param, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = param[i]
        param[i] = old + eps
        up = loss_and_gradients(model, X, y)[0]
        param[i] = old - eps
        down = loss_and_gradients(model, X, y)[0]
        param[i] = old
        g[i] = (up - down) / (2 * eps)
    return g


@pytest.mark.parametrize("K", [2, 4, 6])
def test_gradients_match_finite_differences(K):
    model = _small(K, seed=K)
    rng = np.random.default_rng(100 + K)
    X = rng.normal(0, 1.5, (12, 17))
    y = rng.integers(0, K, 12)
    _, gW, gb = loss_and_gradients(model, X, y)
    for analytic, param in list(zip(gW, model.weights)) + list(zip(gb, model.biases)):
        numeric = _numeric_grad(model, X, y, param)
        rel = np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-6)
        assert rel.max() <= 1e-4


def test_probabilities_sum_to_one():
    model = init_model(6, np.random.default_rng(1))
    X = np.random.default_rng(2).normal(0, 50, (200, 17))
    P = forward(model, X)
    assert np.all(P >= 0)
    assert np.max(np.abs(P.sum(axis=1) - 1)) <= 1e-12
    assert forward(model, X[0]).shape == (6,)


def test_loss_of_uniform_and_certain_predictors():
    model = init_model(2, np.random.default_rng(0), hidden=(4,))
    model.weights[-1][:] = 0
    model.biases[-1][:] = 0
    x = np.ones((1, 17))
    assert loss_and_gradients(model, x, [1])[0] == pytest.approx(math.log(2), rel=1e-12)
    model.biases[-1][:] = [0.0, 1000.0]
    assert loss_and_gradients(model, x, [1])[0] == 0.0


def test_predict_tie_goes_to_lowest_index():
    model = init_model(4, np.random.default_rng(0), hidden=(4,))
    model.weights[-1][:] = 0
    model.biases[-1][:] = 0
    assert predict(model, np.ones(17)) == 0


def test_wrong_feature_count():
    model = init_model(2, np.random.default_rng(0), hidden=(4,))
    with pytest.raises(ValueError):
        forward(model, np.ones(16))


def _constant_set(x, label, copies, scheme="binary"):
    X = np.tile(x, (copies, 1))
    n = len(X)
    return Dataset(X, np.full(n, label), np.zeros(n, int), np.zeros(n, int), scheme, ScenarioConfig("awgn", 3))


def test_memorizes_repeated_sample():
    x = np.random.default_rng(3).normal(size=17)
    ds = _constant_set(x, 1, 50)
    model = train(init_model(2, np.random.default_rng(0), hidden=(16, 16)), ds, TrainConfig(epochs=20, seed=1))
    assert np.all(predict(model, ds.X) == 1)


def test_separates_two_repeated_samples():
    rng = np.random.default_rng(4)
    a, b = rng.normal(size=17), rng.normal(size=17)
    X = np.vstack([np.tile(a, (50, 1)), np.tile(b, (50, 1))])
    y = np.array([0] * 50 + [1] * 50)
    ds = Dataset(X, y, np.zeros(100, int), np.zeros(100, int), "binary", ScenarioConfig("awgn", 3))
    model = train(init_model(2, np.random.default_rng(0), hidden=(16, 16)), ds, TrainConfig(epochs=50, seed=1))
    assert np.mean(predict(model, X) == y) == 1.0


def _real_set():
    return build_dataset(ScenarioConfig("awgn", 3, seed=21), "binary", 1200)


def test_training_is_deterministic():
    ds = _real_set()
    cfg = TrainConfig(epochs=3, seed=5)
    a = train(init_model(2, np.random.default_rng(9)), ds, cfg)
    b = train(init_model(2, np.random.default_rng(9)), ds, cfg)
    for wa, wb in zip(a.weights + a.biases, b.weights + b.biases):
        assert wa.tobytes() == wb.tobytes()
    assert a.history == b.history


def test_training_loss_decreases():
    ds = _real_set()
    model = train(init_model(2, np.random.default_rng(9)), ds, TrainConfig(epochs=20, seed=5, patience=None))
    losses = [h["loss"] for h in model.history]
    assert len(losses) == 20
    assert np.mean(losses[-2:]) < np.mean(losses[:2])


def test_divergence_is_reported():
    ds = _real_set()
    with pytest.raises(TrainingDiverged):
        train(init_model(2, np.random.default_rng(9)), ds, TrainConfig(epochs=3, learning_rate=1e6))


def test_class_count_mismatch():
    with pytest.raises(ValueError):
        train(init_model(6, np.random.default_rng(0), hidden=(4,)), _real_set(), TrainConfig(epochs=1))


def test_save_load_round_trip(tmp_path):
    ds = _real_set()
    model = train(init_model(2, np.random.default_rng(9), hidden=(8,)), ds, TrainConfig(epochs=2))
    save_model(model, tmp_path / "m.json")
    back = load_model(tmp_path / "m.json")
    assert back.layer_sizes == model.layer_sizes
    assert back.labels == ("np", "p")
    np.testing.assert_array_equal(forward(back, ds.X), forward(model, ds.X))


def test_default_architecture():
    m = init_model(6, np.random.default_rng(0))
    assert m.layer_sizes == [17, 325, 320, 6]
