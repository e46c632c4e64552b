"""Network core: forward pass, exact gradients, init, serialization."""

import math

import numpy as np
import pytest

from helpers import (
    central_difference,
    flatten_grads,
    flatten_weights,
    relative_error,
    unflatten_weights,
)
from xfedslice.errors import ConfigurationError, NumericError, ParseError
from xfedslice.nn import (
    CLAMP_EPS,
    ModelWeights,
    apply_step,
    bce_loss,
    forward,
    forward_batch,
    grad_input,
    grad_input_batch,
    grad_weights,
    init_weights,
    load_weights,
    raw_output_batch,
    save_weights,
)


def tiny_net():
    """2-2-1 net small enough to run by hand."""
    return ModelWeights(
        [
            (np.array([[1.0, -1.0], [0.5, 2.0]]), np.array([0.1, -0.2])),
            (np.array([[1.5, -0.5]]), np.array([0.05])),
        ]
    )


class TestForward:
    def test_hand_computed_output(self):
        """z1 = (0.0, 0.75), relu keeps (0, 0.75), z2 = -0.325."""
        p = raw_output_batch(tiny_net(), np.array([0.3, 0.4]))
        assert p == pytest.approx(1.0 / (1.0 + math.exp(0.325)), abs=1e-15)

    def test_relu_zero_preactivation_contributes_nothing(self):
        """First hidden unit sits exactly on the kink; moving its
        outgoing weight must not change the output."""
        net = tiny_net()
        bumped = ModelWeights(
            [net.layers[0], (np.array([[9.9, -0.5]]), np.array([0.05]))]
        )
        x = np.array([0.3, 0.4])
        assert raw_output_batch(net, x) == raw_output_batch(bumped, x)

    def test_batch_matches_single(self):
        """Same values whether rows go through together or one by one
        (BLAS may reorder sums across batch shapes, hence the rtol)."""
        rng = np.random.default_rng(7)
        net = init_weights([3, 10, 10, 1], seed=1)
        X = rng.normal(size=(17, 3))
        batch = forward_batch(net, X)
        singles = [forward(net, x)[0] for x in X]
        np.testing.assert_allclose(batch, singles, rtol=1e-13)

    def test_probabilities_are_clamped(self):
        net = ModelWeights([(np.array([[50.0]]), np.array([0.0]))])
        high = forward_batch(net, np.array([[10.0]]))[0]
        low = forward_batch(net, np.array([[-10.0]]))[0]
        assert high == 1.0 - CLAMP_EPS
        assert low == CLAMP_EPS

    def test_forward_returns_threshold_label(self):
        net = tiny_net()
        p, label = forward(net, np.array([0.3, 0.4]))
        assert label == 0 and p < 0.5
        p, label = forward(net, np.array([-2.0, -1.0]))
        assert label == int(p >= 0.5)

    def test_input_shape_is_validated(self):
        with pytest.raises(ConfigurationError):
            forward_batch(tiny_net(), np.ones((4, 3)))


class TestBCELoss:
    def test_hand_value(self):
        loss = bce_loss(np.array([1.0, 0.0]), np.array([0.8, 0.25]))
        assert loss == pytest.approx(-(math.log(0.8) + math.log(0.75)) / 2)

    def test_finite_at_clamp_bounds(self):
        probs = np.array([CLAMP_EPS, 1.0 - CLAMP_EPS])
        assert math.isfinite(bce_loss(np.array([1.0, 0.0]), probs))

    def test_empty_batch_rejected(self):
        with pytest.raises(ConfigurationError):
            bce_loss(np.array([]), np.array([]))


class TestWeightGradients:
    def test_single_layer_matches_logistic_regression(self):
        """For a 2-1 net the BCE gradient is the textbook (p - y) x."""
        net = ModelWeights([(np.array([[0.4, -0.7]]), np.array([0.2]))])
        x = np.array([1.3, -0.5])
        y = 1.0
        p = forward_batch(net, x[None, :])[0]
        grads = grad_weights(net, x[None, :], np.array([y]))
        np.testing.assert_allclose(grads[0][0][0], (p - y) * x, rtol=1e-12)
        np.testing.assert_allclose(grads[0][1][0], p - y, rtol=1e-12)

    def test_matches_finite_differences(self):
        """Analytic BCE gradient agrees with central differences to
        1e-4 relative error across architectures and batches."""
        rng = np.random.default_rng(42)
        for sizes in ([3, 10, 10, 1], [2, 5, 1], [4, 7, 3, 1]):
            for trial in range(4):
                net = init_weights(sizes, seed=rng.integers(1 << 31))
                batch = int(rng.integers(1, 9))
                X = rng.normal(size=(batch, sizes[0]))
                y = rng.integers(0, 2, size=batch).astype(float)

                def loss_at(vec):
                    model = unflatten_weights(vec, net)
                    return bce_loss(y, forward_batch(model, X))

                numeric = central_difference(loss_at, flatten_weights(net))
                analytic = flatten_grads(grad_weights(net, X, y))
                assert relative_error(analytic, numeric).max() <= 1e-4

    def test_zero_in_saturated_region(self):
        """Where the output clamp is active the gradient vanishes."""
        net = ModelWeights([(np.array([[30.0]]), np.array([0.0]))])
        grads = grad_weights(net, np.array([[5.0]]), np.array([0.0]))
        assert grads[0][0][0, 0] == 0.0
        assert grads[0][1][0] == 0.0

    def test_apply_step_returns_new_model(self):
        net = tiny_net()
        grads = grad_weights(
            net, np.array([[0.3, 0.4]]), np.array([1.0])
        )
        stepped = apply_step(net, grads, lr=0.1)
        assert stepped is not net
        assert not np.array_equal(stepped.layers[0][0], net.layers[0][0])


class TestInputGradients:
    def test_matches_finite_differences(self):
        """d(raw output)/d(input) checked coordinate by coordinate."""
        rng = np.random.default_rng(11)
        net = init_weights([3, 10, 10, 1], seed=5)
        for trial in range(20):
            x = rng.normal(size=3)

            def output_at(vec):
                return float(raw_output_batch(net, vec))

            numeric = central_difference(output_at, x.copy())
            analytic = grad_input(net, x)
            assert relative_error(analytic, numeric).max() <= 1e-4

    def test_batch_matches_single(self):
        rng = np.random.default_rng(3)
        net = init_weights([3, 10, 10, 1], seed=9)
        X = rng.normal(size=(6, 3))
        batch = grad_input_batch(net, X)
        for row, x in zip(batch, X):
            np.testing.assert_allclose(row, grad_input(net, x), rtol=1e-13)

    def test_dead_relu_blocks_gradient(self):
        """x = 0 lands on the kink; the subgradient there is zero."""
        net = ModelWeights(
            [
                (np.array([[1.0]]), np.array([0.0])),
                (np.array([[2.0]]), np.array([0.3])),
            ]
        )
        np.testing.assert_array_equal(grad_input(net, np.array([0.0])), 0.0)


class TestInit:
    def test_glorot_bounds_and_zero_bias(self):
        net = init_weights([3, 10, 10, 1], seed=0)
        for (W, b), (fan_in, fan_out) in zip(
            net.layers, [(3, 10), (10, 10), (10, 1)]
        ):
            radius = math.sqrt(6.0 / (fan_in + fan_out))
            assert np.all(np.abs(W) < radius)
            np.testing.assert_array_equal(b, 0.0)

    def test_seed_determinism(self):
        assert init_weights([3, 10, 10, 1], 123) == init_weights(
            [3, 10, 10, 1], 123
        )
        assert init_weights([3, 10, 10, 1], 123) != init_weights(
            [3, 10, 10, 1], 124
        )

    def test_bad_architecture_rejected(self):
        with pytest.raises(ConfigurationError):
            init_weights([3], seed=0)
        with pytest.raises(ConfigurationError):
            init_weights([3, 0, 1], seed=0)


class TestModelWeights:
    def test_layer_chain_validated(self):
        with pytest.raises(ConfigurationError):
            ModelWeights(
                [
                    (np.ones((4, 3)), np.zeros(4)),
                    (np.ones((1, 5)), np.zeros(1)),
                ]
            )

    def test_bias_shape_validated(self):
        with pytest.raises(ConfigurationError):
            ModelWeights([(np.ones((2, 3)), np.zeros(3))])

    def test_arrays_are_read_only(self):
        net = tiny_net()
        with pytest.raises(ValueError):
            net.layers[0][0][0, 0] = 99.0
        with pytest.raises(AttributeError):
            net.layers = ()

    def test_layer_sizes(self):
        assert init_weights([3, 10, 10, 1], 0).layer_sizes == [3, 10, 10, 1]

    def test_check_finite(self):
        bad = ModelWeights([(np.array([[np.nan]]), np.zeros(1))])
        with pytest.raises(NumericError):
            bad.check_finite()


class TestSnapshots:
    def test_round_trip_is_exact(self, tmp_path):
        net = init_weights([3, 10, 10, 1], seed=77)
        path = tmp_path / "model.xfsw"
        save_weights(net, path)
        assert load_weights(path) == net

    def test_header_layout(self, tmp_path):
        """16-byte header: magic, version, layer count, reserved word."""
        net = init_weights([3, 10, 10, 1], seed=1)
        path = tmp_path / "model.xfsw"
        save_weights(net, path)
        blob = path.read_bytes()
        assert blob[:4] == b"XFSW"
        assert int.from_bytes(blob[8:12], "little") == 3
        n_params = (10 * 3 + 10) + (10 * 10 + 10) + (1 * 10 + 1)
        assert len(blob) == 16 + 8 * n_params

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.xfsw"
        path.write_bytes(b"NOPE" + bytes(32))
        with pytest.raises(ParseError):
            load_weights(path)

    def test_truncated_file_rejected(self, tmp_path):
        net = init_weights([3, 10, 10, 1], seed=1)
        path = tmp_path / "model.xfsw"
        save_weights(net, path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ParseError):
            load_weights(path)

    def test_architecture_mismatch_rejected(self, tmp_path):
        net = init_weights([3, 10, 10, 1], seed=1)
        path = tmp_path / "model.xfsw"
        save_weights(net, path)
        with pytest.raises(ConfigurationError):
            load_weights(path, layer_sizes=(3, 10, 1))
        with pytest.raises(ParseError):
            load_weights(path, layer_sizes=(3, 10, 11, 1))
