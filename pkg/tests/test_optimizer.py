import numpy as np
import pytest

from latent_tsf.services.layers import LinearLayer
from latent_tsf.services.optimizer import AdamOptimizer, AdamState, ParamGroup, adam_step, cosine_lr
from latent_tsf.utils.errors import ConfigError, TrainingDivergenceError


def test_zero_gradient_leaves_parameters():
    params = {"w": np.array([1.0, -2.0])}
    state = AdamState()
    adam_step(params, {"w": np.zeros(2)}, state, lr=1e-3)
    np.testing.assert_array_equal(params["w"], [1.0, -2.0])
    assert state.t == 1


def test_first_step_moves_by_lr_times_sign():
    lr = 1e-3
    params = {"w": np.array([0.0, 0.0, 0.0])}
    grad = np.array([0.5, -3.0, 1e-2])
    adam_step(params, {"w": grad}, AdamState(), lr=lr)
    np.testing.assert_allclose(params["w"], -lr * np.sign(grad), atol=lr * 1e-4)


def test_reversed_gradient_second_step():
    # m_hat = -g/19 and v_hat = g^2 after (g, -g), so the net move is 18/19 of the first step
    lr = 1e-3
    grad = np.array([0.5, -2.0])
    params = {"w": np.zeros(2)}
    state = AdamState()
    adam_step(params, {"w": grad}, state, lr=lr)
    adam_step(params, {"w": -grad}, state, lr=lr)
    np.testing.assert_allclose(params["w"], -lr * np.sign(grad) * 18.0 / 19.0, atol=lr * 1e-4)
    assert state.t == 2


@pytest.mark.parametrize("lr", [0.0, -1e-3])
def test_non_positive_lr_rejected(lr):
    params = {"w": np.zeros(2)}
    with pytest.raises(ConfigError):
        adam_step(params, {"w": np.ones(2)}, AdamState(), lr=lr)
    np.testing.assert_array_equal(params["w"], np.zeros(2))


def test_non_finite_gradient_names_parameter():
    params = {"encoder.0.weight": np.zeros(2)}
    with pytest.raises(TrainingDivergenceError, match="encoder.0.weight"):
        adam_step(params, {"encoder.0.weight": np.array([np.nan, 0.0])}, AdamState(), lr=1e-3)


def test_cosine_schedule():
    assert cosine_lr(1e-3, 0, 10) == 1e-3
    assert cosine_lr(1e-3, 5, 10) == pytest.approx(5e-4)
    assert cosine_lr(1e-3, 9, 10) < cosine_lr(1e-3, 8, 10)
    with pytest.raises(ConfigError):
        cosine_lr(1e-3, 10, 10)


def _group(name, lr, rng):
    return ParamGroup.from_module(name, LinearLayer.initialize(2, 2, rng), lr)


def test_zero_lr_groups_are_frozen(rng):
    optimizer = AdamOptimizer([_group("backbone", 1e-3, rng), _group("encoder", 0.0, rng)])
    assert [name for name, _ in optimizer.describe()] == ["backbone"]
    assert list(optimizer.groups[0].params) == ["backbone.weight", "backbone.bias"]


def test_clip_grad_norm_scales_jointly(rng):
    group = _group("backbone", 1e-3, rng)
    group.grads["backbone.weight"][...] = [[3.0, 0.0], [0.0, 0.0]]
    group.grads["backbone.bias"][...] = [4.0, 0.0]
    optimizer = AdamOptimizer([group])
    assert optimizer.clip_grad_norm(1.0) == pytest.approx(5.0)
    total = np.sqrt(sum(np.sum(g * g) for g in group.grads.values()))
    assert total == pytest.approx(1.0)


def test_step_updates_module_in_place(rng):
    layer = LinearLayer.initialize(2, 2, rng)
    before = layer.weight.copy()
    optimizer = AdamOptimizer([ParamGroup.from_module("layer", layer, 1e-2)], scheduler="constant")
    layer.weight_grad[...] = 1.0
    optimizer.step()
    np.testing.assert_allclose(layer.weight, before - 1e-2, atol=1e-8)
    assert optimizer.step_count == 1


def test_unknown_scheduler():
    with pytest.raises(ConfigError):
        AdamOptimizer([], scheduler="step")
