import math

import numpy as np
from django.test import SimpleTestCase

from continual.autodiff import Tape, add, cross_entropy, mse_logits, scale
from continual.exceptions import ShapeError
from continual.network import IDENTITY, DenseLayer, Network, backward, bind, build_network, forward_on
from continual.verification import gradient_error


class CrossEntropyTests(SimpleTestCase):
    def test_uniform_logits_give_log_class_count(self):
        value = cross_entropy(np.zeros((3, 5)), [0, 2, 4])
        self.assertAlmostEqual(value, math.log(5), delta=1e-12)

    def test_label_out_of_range_raises_index_error(self):
        with self.assertRaises(IndexError):
            cross_entropy(np.zeros((2, 3)), [0, 3])

    def test_row_label_mismatch_raises_shape_error(self):
        with self.assertRaises(ShapeError):
            cross_entropy(np.zeros((2, 3)), [0, 1, 2])

    def test_empty_batch_is_zero(self):
        self.assertEqual(cross_entropy(np.zeros((0, 3)), []), 0.0)

    def test_large_logits_stay_finite(self):
        value = cross_entropy(np.array([[1000.0, 0.0, -1000.0]]), [0])
        self.assertTrue(np.isfinite(value))
        self.assertAlmostEqual(value, 0.0, places=12)


class MseLogitsTests(SimpleTestCase):
    def test_batch_mean_of_squared_distance(self):
        a = np.array([[1.0, 2.0], [0.0, 0.0]])
        b = np.array([[0.0, 0.0], [3.0, 4.0]])
        # (1 + 4 + 9 + 16) / 2
        self.assertEqual(mse_logits(a, b), 15.0)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            mse_logits(np.zeros((2, 3)), np.zeros((2, 4)))


class TapeTests(SimpleTestCase):
    def test_non_scalar_loss_is_rejected(self):
        tape = Tape()
        x = tape.watch(np.ones(3))
        with self.assertRaises(ShapeError):
            tape.gradient(scale(x, 2.0), [x])

    def test_unused_variable_gets_zero_gradient(self):
        tape = Tape()
        x = tape.watch(np.array([[1.0, 2.0]]))
        unused = tape.watch(np.ones((2, 2)))
        loss = mse_logits(x, np.zeros((1, 2)))
        grad_x, grad_unused = tape.gradient(loss, [x, unused])
        np.testing.assert_array_equal(grad_x, [[2.0, 4.0]])
        np.testing.assert_array_equal(grad_unused, np.zeros((2, 2)))

    def test_gradients_accumulate_over_shared_inputs(self):
        tape = Tape()
        x = tape.watch(np.array([[3.0]]))
        zero = np.zeros((1, 1))
        loss = add(mse_logits(x, zero), scale(mse_logits(x, zero), 2.0))
        grad, = tape.gradient(loss, [x])
        np.testing.assert_allclose(grad, [[18.0]])

    def test_constants_are_not_recorded(self):
        tape = Tape()
        a = tape.constant(np.ones((1, 2)))
        mse_logits(a, np.zeros((1, 2)))
        self.assertEqual(len(tape), 0)


class GradientFidelityTests(SimpleTestCase):
    def test_three_three_two_net_matches_central_differences(self):
        rng = np.random.default_rng(3)
        net = build_network(3, (3,), 2, 1, seed=3)
        batch = rng.standard_normal((5, 3))
        labels = rng.integers(0, 2, size=5)

        def ce(tape, net, params):
            return cross_entropy(forward_on(tape, net, params, batch), labels)

        self.assertLess(gradient_error(net, ce), 1e-4)

    def test_gradient_covers_every_parameter(self):
        net = build_network(4, (8,), 3, 2, seed=0)
        tape = Tape()
        params = bind(tape, net)
        loss = cross_entropy(forward_on(tape, net, params, np.ones((2, 4))), [0, 1])
        grads = backward(tape, loss, params)
        for array, grad in zip(net.arrays(), grads.arrays()):
            self.assertEqual(array.shape, grad.shape)


class LinearMseClosedFormTests(SimpleTestCase):
    def test_weight_gradient_is_two_residual_outer_input_over_batch(self):
        rng = np.random.default_rng(4)
        weights = rng.standard_normal((3, 5))
        inputs = rng.standard_normal((6, 5))
        targets = rng.standard_normal((6, 3))
        net = Network([DenseLayer(weights, np.zeros(3), IDENTITY)], 3, 1)

        tape = Tape()
        params = bind(tape, net)
        grads = backward(tape, mse_logits(forward_on(tape, net, params, inputs), targets), params)

        residual = inputs @ weights.T - targets
        np.testing.assert_allclose(grads.weights[0], 2.0 * residual.T @ inputs / len(inputs), rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(grads.biases[0], 2.0 * residual.sum(axis=0) / len(inputs), rtol=1e-12, atol=1e-12)
