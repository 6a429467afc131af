"""Tests for the shared multi-label model."""

import numpy as np
import pytest

from models.mlp import (
    Architecture,
    ModelParams,
    ShapeError,
    TrainingError,
    bce_gradient,
    bce_loss,
    extract_features,
    init_params,
    predict_proba,
    sgd,
)


def _linear(weights, bias):
    weights = np.asarray(weights, dtype=np.float64)
    arch = Architecture(weights.shape[0], 0, weights.shape[1])
    return ModelParams(arch, np.concatenate([weights.ravel(), np.asarray(bias, dtype=np.float64)]))


def test_zero_weights_predict_one_half():
    params = ModelParams(Architecture(3, 0, 2), np.zeros(8))
    np.testing.assert_array_equal(predict_proba(params, np.ones((4, 3))), np.full((4, 2), 0.5))


def test_hand_weights_give_sigmoid_of_logit():
    params = _linear([[1.0], [-1.0]], [0.0])
    assert predict_proba(params, np.array([2.0, 1.0]))[0] == pytest.approx(0.7310585786, abs=1e-10)


def test_probability_grows_with_weight():
    x = np.array([1.0, 0.0])
    probs = [predict_proba(_linear([[w], [0.0]], [0.0]), x)[0] for w in (0.0, 1.0, 5.0, 20.0, 40.0)]
    assert all(b > a for a, b in zip(probs, probs[1:]))
    assert probs[-1] < 1.0


def test_dimension_mismatch_raises_shape_error():
    params = init_params(Architecture(3, 4, 2), seed=0)
    with pytest.raises(ShapeError):
        predict_proba(params, np.ones((2, 5)))
    with pytest.raises(ShapeError):
        extract_features(params, np.ones(2))


def test_parameter_vector_must_match_architecture():
    with pytest.raises(ShapeError):
        ModelParams(Architecture(3, 0, 2), np.zeros(7))
    with pytest.raises(ShapeError):
        ModelParams(Architecture(1, 0, 1), np.array([np.nan, 0.0]))


def test_linear_features_are_the_input():
    params = init_params(Architecture(3, 0, 2), seed=0)
    x = np.array([[1.0, -2.0, 0.5]])
    np.testing.assert_array_equal(extract_features(params, x), x)


def test_hidden_features_have_hidden_width():
    params = init_params(Architecture(3, 7, 2), seed=0)
    x = np.random.default_rng(0).normal(size=(5, 3))
    features = extract_features(params, x)
    assert features.shape == (5, 7)
    assert np.all(features >= 0)
    np.testing.assert_array_equal(features, extract_features(params, x))


def test_lr_zero_returns_params_unchanged():
    params = init_params(Architecture(2, 3, 1), seed=1)
    out = sgd(params, np.ones((4, 2)), np.ones((4, 1)), lr=0.0)
    np.testing.assert_array_equal(out.vector, params.vector)


def test_one_step_matches_hand_gradient():
    params = _linear([[0.3], [-0.2]], [0.1])
    x = np.array([[1.0, 2.0]])
    y = np.array([[1]])
    # logit = 0.3 - 0.4 + 0.1 = 0, so p = 0.5 and the gradient is -0.5 * (x, 1)
    out = sgd(params, x, y, lr=0.1, batch=1)
    np.testing.assert_allclose(out.vector, [0.35, -0.1, 0.15], rtol=0, atol=1e-10)


def test_single_sample_loss_is_non_increasing():
    params = _linear(np.zeros((2, 2)), np.zeros(2))
    x = np.array([[1.0, 2.0]])
    y = np.array([[1, 0]])
    losses = [bce_loss(params, x, y)]
    for epoch in range(30):
        params = sgd(params, x, y, lr=0.1, batch=1, seed=epoch)
        losses.append(bce_loss(params, x, y))
    assert all(b <= a for a, b in zip(losses, losses[1:]))
    assert losses[-1] < losses[0]


@pytest.mark.parametrize("hidden", [0, 5])
def test_gradient_matches_finite_differences(hidden):
    rng = np.random.default_rng(hidden)
    arch = Architecture(4, hidden, 3)
    params = ModelParams(arch, rng.normal(0.0, 0.5, size=arch.n_params))
    x = rng.normal(size=(6, 4))
    y = rng.integers(0, 2, size=(6, 3))
    _, grad = bce_gradient(params, x, y)
    eps = 1e-5
    numeric = np.empty_like(grad)
    for k in range(arch.n_params):
        up = params.vector.copy()
        down = params.vector.copy()
        up[k] += eps
        down[k] -= eps
        numeric[k] = (bce_loss(params.with_vector(up), x, y) - bce_loss(params.with_vector(down), x, y)) / (2 * eps)
    rel = np.linalg.norm(grad - numeric) / max(np.linalg.norm(grad), np.linalg.norm(numeric))
    assert rel < 1e-4


def test_training_is_bit_reproducible():
    rng = np.random.default_rng(3)
    params = init_params(Architecture(4, 6, 2), seed=3)
    x = rng.normal(size=(50, 4))
    y = rng.integers(0, 2, size=(50, 2))
    a = sgd(params, x, y, epochs=2, lr=0.1, batch=8, seed=11)
    b = sgd(params, x, y, epochs=2, lr=0.1, batch=8, seed=11)
    np.testing.assert_array_equal(a.vector, b.vector)
    c = sgd(params, x, y, epochs=2, lr=0.1, batch=8, seed=12)
    assert not np.array_equal(a.vector, c.vector)


def test_divergence_raises_training_error():
    params = _linear(np.zeros((1, 1)), np.zeros(1))
    x = np.array([[1e300], [-1e300]])
    y = np.array([[1], [0]])
    with pytest.raises(TrainingError) as info:
        sgd(params, x, y, lr=1e300, batch=1, round_index=4)
    assert info.value.round_index == 4
    assert info.value.batch_index == 0


def test_empty_training_set_is_rejected():
    params = _linear(np.zeros((2, 1)), np.zeros(1))
    with pytest.raises(ValueError):
        sgd(params, np.empty((0, 2)), np.empty((0, 1)))
