import numpy as np
import pytest

from latent_tsf.services.layers import (
    Activation, Dropout, LinearLayer, Sequential, activation_forward, build_mlp, parameter_checksum,
)
from latent_tsf.utils.errors import ConfigError, ShapeError

TRIALS = 100


def check_module_gradients(module, x, rng, fd):
    """Compare backward() against central differences for the input and every parameter."""
    central_difference, assert_grad_close = fd
    upstream = rng.standard_normal(module.forward(x)[0].shape)

    def objective():
        return float(np.sum(upstream * module.forward(x)[0]))

    out, cache = module.forward(x)
    module.zero_grads()
    grad_x = module.backward(cache, upstream)
    assert_grad_close(grad_x, central_difference(objective, x))
    for name, value, grad in module.named_parameters():
        assert_grad_close(grad, central_difference(objective, value))


class TestLinearLayer:
    def test_identity_weight(self):
        layer = LinearLayer(np.eye(2), np.zeros(2))
        np.testing.assert_array_equal(layer(np.array([[3.0, -1.0]])), [[3.0, -1.0]])

    def test_hand_product(self):
        layer = LinearLayer(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([1.0, 1.0]))
        np.testing.assert_array_equal(layer(np.array([[1.0, 1.0]])), [[4.0, 8.0]])

    def test_zero_weight_gives_bias(self, rng):
        layer = LinearLayer(np.zeros((1, 3)), np.array([5.0]))
        np.testing.assert_array_equal(layer(rng.standard_normal((4, 3))), np.full((4, 1), 5.0))

    def test_identity_backward(self):
        layer = LinearLayer(np.eye(2), np.zeros(2))
        x = np.array([[0.5, -2.0]])
        _, cache = layer.forward(x)
        grad = layer.backward(cache, np.array([[1.0, 0.0]]))
        np.testing.assert_array_equal(grad, [[1.0, 0.0]])
        np.testing.assert_array_equal(layer.weight_grad, [[0.5, -2.0], [0.0, 0.0]])

    def test_zero_upstream(self, rng):
        layer = LinearLayer.initialize(3, 2, rng)
        x = rng.standard_normal((5, 3))
        _, cache = layer.forward(x)
        grad = layer.backward(cache, np.zeros((5, 2)))
        assert not grad.any()
        assert not layer.weight_grad.any()
        assert not layer.bias_grad.any()

    def test_input_mismatch_names_both_shapes(self, rng):
        layer = LinearLayer.initialize(3, 2, rng)
        with pytest.raises(ShapeError, match=r"\(4, 5\).*\(2, 3\)"):
            layer(rng.standard_normal((4, 5)))

    def test_upstream_mismatch(self, rng):
        layer = LinearLayer.initialize(3, 2, rng)
        _, cache = layer.forward(rng.standard_normal((4, 3)))
        with pytest.raises(ShapeError):
            layer.backward(cache, np.zeros((4, 3)))

    def test_backward_without_accumulate_leaves_grads(self, rng):
        layer = LinearLayer.initialize(3, 2, rng)
        _, cache = layer.forward(rng.standard_normal((4, 3)))
        layer.backward(cache, rng.standard_normal((4, 2)), accumulate=False)
        assert not layer.weight_grad.any()

    def test_gradients_match_finite_differences(self, rng, fd):
        for _ in range(TRIALS):
            layer = LinearLayer.initialize(3, 4, rng)
            check_module_gradients(layer, rng.standard_normal((2, 5, 3)), rng, fd)


class TestActivations:
    def test_relu(self):
        np.testing.assert_array_equal(activation_forward("relu", np.array([-1.0, 0.0, 2.0])), [0.0, 0.0, 2.0])

    def test_gelu_zero(self):
        assert activation_forward("gelu", np.array([0.0]))[0] == 0.0

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            Activation("tanh")

    @pytest.mark.parametrize("kind", ["gelu", "relu"])
    def test_gradients_match_finite_differences(self, kind, rng, fd):
        for _ in range(TRIALS):
            x = rng.standard_normal((3, 4))
            # keep relu away from its kink
            x += 0.01 * np.sign(x)
            check_module_gradients(Activation(kind), x, rng, fd)


class TestDropout:
    def test_identity_at_eval(self, rng):
        x = rng.standard_normal((4, 6))
        np.testing.assert_array_equal(Dropout(0.5).forward(x, training=False)[0], x)

    def test_training_needs_rng(self, rng):
        with pytest.raises(ConfigError):
            Dropout(0.5).forward(rng.standard_normal(3), training=True)

    def test_backward_uses_mask(self, rng):
        layer = Dropout(0.5)
        x = rng.standard_normal((8, 8))
        out, mask = layer.forward(x, training=True, rng=np.random.default_rng(0))
        np.testing.assert_array_equal(out, x * mask)
        upstream = rng.standard_normal(x.shape)
        np.testing.assert_array_equal(layer.backward(mask, upstream), upstream * mask)
        assert set(np.unique(mask)) <= {0.0, 2.0}

    def test_rate_range(self):
        with pytest.raises(ConfigError):
            Dropout(1.0)


class TestSequential:
    def test_build_mlp_layout(self, rng):
        network = build_mlp([7, 32, 32], rng, dropout=0.1)
        kinds = [type(m).__name__ for m in network.modules]
        assert kinds == ["LinearLayer", "Activation", "Dropout", "LinearLayer"]
        assert [layer.out_dim for layer in network.linear_layers] == [32, 32]

    def test_gradients_match_finite_differences(self, rng, fd):
        for _ in range(TRIALS):
            network = build_mlp([3, 5, 2], rng, activation="gelu")
            check_module_gradients(network, rng.standard_normal((4, 3)), rng, fd)

    def test_state_roundtrip_and_checksum(self, rng):
        a = build_mlp([3, 4, 2], rng)
        b = build_mlp([3, 4, 2], rng)
        assert parameter_checksum(a) != parameter_checksum(b)
        b.load_state_dict(a.state_dict())
        assert parameter_checksum(a) == parameter_checksum(b)

    def test_load_state_shape_mismatch(self, rng):
        a = build_mlp([3, 4, 2], rng)
        state = a.state_dict()
        state["0.weight"] = np.zeros((1, 1))
        with pytest.raises(ShapeError):
            a.load_state_dict(state)

    def test_empty_sequential_is_identity(self, rng):
        x = rng.standard_normal(3)
        np.testing.assert_array_equal(Sequential([])(x), x)
