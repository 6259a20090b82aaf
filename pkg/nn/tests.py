"""
Tests for nn app.

Primitives are checked against direct computations and central
differences; the tape against its ordering and accumulation contract.
"""

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, ShapeError, TapeError
from core.services.counters import count_multiplies
from tensors.ndtensor import NDTensor

from .functional import (
    Add,
    BatchNorm,
    ConcatChannels,
    Conv3d,
    GlobalAvgPoolLinear,
    ReLU,
    RunningStats,
    SoftmaxCrossEntropy,
    TemporalMaxPool3,
)
from .numeric import central_difference, numeric_gradient, relative_error, sample_coordinates
from .ops import (
    LayerParams,
    NormStats,
    batchnorm_relu,
    conv2plus1d,
    conv3d,
    global_avgpool_fc,
    softmax_xent,
    temporal_maxpool3,
)
from .tape import Parameter, Tape, TapeNode, Variable, backward


def naive_conv3d(x, kernel, stride, padding):
    padded = np.pad(x, [(0, 0)] + [(p, p) for p in padding])
    c_out, _, kt, ky, kx = kernel.shape
    extents = [
        (x.shape[1 + a] + 2 * padding[a] - kernel.shape[2 + a]) // stride[a] + 1 for a in range(3)
    ]
    out = np.zeros([c_out] + extents)
    for o in range(c_out):
        for t in range(extents[0]):
            for i in range(extents[1]):
                for j in range(extents[2]):
                    t0, i0, j0 = t * stride[0], i * stride[1], j * stride[2]
                    window = padded[:, t0 : t0 + kt, i0 : i0 + ky, j0 : j0 + kx]
                    out[o, t, i, j] = (window * kernel[o]).sum()
    return out


class PrimitiveGradientMixin:
    """Finite-difference check of a Function through a random linear probe."""

    def check_function(self, function_cls, inputs, attrs=None, coords=30, rtol=1e-6):
        attrs = attrs or {}
        rng = np.random.default_rng(5)
        variables = [Variable(array.copy(), requires_grad=True) for array in inputs]
        tape = Tape()
        out = function_cls.apply(tape, *variables, **attrs)
        probe = rng.normal(size=out.value.shape)
        tape.backward(out, probe)

        for position, array in enumerate(inputs):

            def loss():
                return float((function_cls(**attrs).forward(*inputs) * probe).sum())

            for index in sample_coordinates(rng, array.shape, coords):
                numeric = central_difference(loss, array, index)
                analytic = variables[position].grad[index]
                self.assertTrue(
                    np.isclose(analytic, numeric, rtol=rtol, atol=1e-8),
                    f"input {position} at {index}: {analytic} vs {numeric}",
                )


class Conv3dTestCase(PrimitiveGradientMixin, SimpleTestCase):
    """Test the convolution primitive."""

    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_matches_naive_loops(self):
        x = self.rng.normal(size=(2, 3, 4, 5, 5))
        kernel = self.rng.normal(size=(4, 3, 3, 3, 3))
        for stride in [(1, 1, 1), (2, 2, 2), (1, 2, 1)]:
            out = Conv3d(stride=stride, padding=(1, 1, 1)).forward(x, kernel)
            for n in range(2):
                expected = naive_conv3d(x[n], kernel, stride, (1, 1, 1))
                self.assertTrue(np.allclose(out[n], expected, rtol=0, atol=1e-12))

    def test_gradients(self):
        x = self.rng.normal(size=(2, 2, 3, 4, 4))
        kernel = self.rng.normal(size=(3, 2, 1, 3, 3))
        bias = self.rng.normal(size=3)
        self.check_function(
            Conv3d, [x, kernel, bias], {"stride": (1, 2, 2), "padding": (0, 1, 1)}
        )

    def test_channel_mismatch(self):
        with self.assertRaises(ShapeError):
            Conv3d().forward(np.zeros((1, 2, 1, 3, 3)), np.zeros((1, 3, 1, 1, 1)))

    def test_counts_multiplies(self):
        x = np.ones((2, 4, 3, 6, 6))
        kernel = np.ones((8, 4, 1, 3, 3))
        with count_multiplies() as counter:
            Conv3d(stride=(1, 2, 2), padding=(0, 1, 1), layer="probe").forward(x, kernel)
        self.assertEqual(counter.per_layer["probe"], 2 * 8 * 4 * 9 * 3 * 3 * 3)


class NormalizationTestCase(PrimitiveGradientMixin, SimpleTestCase):
    """Test batch normalization."""

    def setUp(self):
        self.rng = np.random.default_rng(12)
        self.x = self.rng.normal(loc=1.0, scale=2.0, size=(3, 2, 2, 3, 3))
        self.gamma = self.rng.normal(size=2)
        self.beta = self.rng.normal(size=2)

    def test_train_mode_normalizes_per_channel(self):
        out = BatchNorm(running=RunningStats(2)).forward(self.x, np.ones(2), np.zeros(2))
        self.assertTrue(np.allclose(out.mean(axis=(0, 2, 3, 4)), 0.0, atol=1e-12))
        self.assertTrue(np.allclose(out.var(axis=(0, 2, 3, 4)), 1.0, atol=1e-4))

    def test_running_stats_follow_momentum(self):
        running = RunningStats(2)
        BatchNorm(running=running, momentum=0.9).forward(self.x, self.gamma, self.beta)
        expected = 0.1 * self.x.mean(axis=(0, 2, 3, 4))
        self.assertTrue(np.allclose(running.mean, expected))

    def test_update_stats_flag(self):
        running = RunningStats(2)
        BatchNorm(running=running, update_stats=False).forward(self.x, self.gamma, self.beta)
        self.assertTrue(np.array_equal(running.mean, np.zeros(2)))

    def test_eval_mode_uses_running_stats(self):
        out = BatchNorm(running=RunningStats(2), mode="eval").forward(self.x, np.ones(2), np.zeros(2))
        self.assertTrue(np.allclose(out, self.x / np.sqrt(1.0 + 1e-5)))

    def test_train_gradients(self):
        self.check_function(
            BatchNorm, [self.x, self.gamma, self.beta], {"running": RunningStats(2), "update_stats": False}
        )

    def test_eval_gradients(self):
        self.check_function(
            BatchNorm, [self.x, self.gamma, self.beta], {"running": RunningStats(2), "mode": "eval"}
        )

    def test_unknown_mode(self):
        with self.assertRaises(ValueError):
            BatchNorm(running=RunningStats(2), mode="infer").forward(self.x, self.gamma, self.beta)


class PoolingAndHeadTestCase(PrimitiveGradientMixin, SimpleTestCase):
    """Test pooling, the classifier head and the loss."""

    def setUp(self):
        self.rng = np.random.default_rng(13)

    def test_temporal_maxpool_lengths(self):
        for length, expected in [(1, 1), (2, 1), (5, 3), (8, 4)]:
            out = TemporalMaxPool3().forward(np.ones((1, 2, length, 3, 3)))
            self.assertEqual(out.shape, (1, 2, expected, 3, 3))

    def test_temporal_maxpool_values(self):
        x = np.array([3.0, 1.0, 4.0, 1.0, 5.0]).reshape(1, 1, 5, 1, 1)
        out = temporal_maxpool3(NDTensor(x[0])).array
        self.assertEqual(list(out.ravel()), [3.0, 4.0, 5.0])

    def test_temporal_maxpool_gradients(self):
        self.check_function(TemporalMaxPool3, [self.rng.normal(size=(2, 2, 6, 2, 2))])

    def test_head_gradients(self):
        self.check_function(
            GlobalAvgPoolLinear, [self.rng.normal(size=(2, 4, 2, 3, 3)), self.rng.normal(size=(5, 4))]
        )

    def test_head_is_mean_then_linear(self):
        x = self.rng.normal(size=(4, 2, 3, 3))
        w = self.rng.normal(size=(3, 4))
        out = global_avgpool_fc(NDTensor(x), NDTensor(w)).array
        self.assertTrue(np.allclose(out, w @ x.mean(axis=(1, 2, 3))))

    def test_relu_and_add_gradients(self):
        x = self.rng.normal(size=(2, 3, 2, 2, 2))
        self.check_function(ReLU, [x])
        self.check_function(Add, [x, self.rng.normal(size=x.shape)])
        self.check_function(ConcatChannels, [x, self.rng.normal(size=(2, 1, 2, 2, 2))])

    def test_cross_entropy_gradient(self):
        logits = self.rng.normal(size=(3, 5))
        labels = np.array([0, 4, 2])
        self.check_function(SoftmaxCrossEntropy, [logits], {"labels": labels})

    def test_cross_entropy_rejects_bad_labels(self):
        with self.assertRaises(ShapeError):
            SoftmaxCrossEntropy(labels=np.array([7])).forward(np.zeros((1, 3)))

    def test_single_sample_loss(self):
        loss, d_logits = softmax_xent(NDTensor(np.zeros(4)), 2)
        self.assertAlmostEqual(loss, np.log(4.0))
        self.assertTrue(np.allclose(d_logits.array, [0.25, 0.25, -0.75, 0.25]))


class OpsTestCase(SimpleTestCase):
    """Test the per-clip entry points."""

    def setUp(self):
        self.rng = np.random.default_rng(14)

    def test_unsupported_footprint(self):
        with self.assertRaises(ConfigError):
            LayerParams(NDTensor(np.ones((2, 2, 2, 2, 2))))

    def test_same_padding_preserves_extents(self):
        x = NDTensor(self.rng.normal(size=(2, 4, 6, 6)))
        params = LayerParams(NDTensor(self.rng.normal(size=(3, 2, 3, 3, 3))))
        self.assertEqual(conv3d(x, params).shape, (3, 4, 6, 6))

    def test_factorized_conv_strides(self):
        x = NDTensor(self.rng.normal(size=(2, 4, 6, 6)))
        temporal = LayerParams(NDTensor(self.rng.normal(size=(3, 2, 3, 1, 1))))
        spatial = LayerParams(NDTensor(self.rng.normal(size=(3, 3, 1, 3, 3))))

        out = conv2plus1d(x, temporal, spatial, stride=(2, 2, 2))

        self.assertEqual(out.shape, (3, 2, 3, 3))

    def test_pointwise_identity_and_permutation(self):
        x = NDTensor(self.rng.normal(size=(3, 2, 4, 4)))
        identity = LayerParams(NDTensor(np.eye(3).reshape(3, 3, 1, 1, 1)))
        self.assertTrue(np.array_equal(conv3d(x, identity).array, x.array))

        order = [2, 0, 1]
        permute = LayerParams(NDTensor(np.eye(3)[order].reshape(3, 3, 1, 1, 1)))
        self.assertTrue(np.array_equal(conv3d(x, permute).array, x.array[order]))

    def test_delta_imprints_kernel_footprint(self):
        delta = np.zeros((1, 5, 7, 7))
        delta[0, 2, 3, 3] = 1.0
        out = conv3d(NDTensor(delta), LayerParams(NDTensor(np.ones((1, 1, 3, 3, 3))))).array

        expected = np.zeros((1, 5, 7, 7))
        expected[0, 1:4, 2:5, 2:5] = 1.0
        self.assertTrue(np.array_equal(out, expected))

        kernel = self.rng.normal(size=(1, 1, 3, 3, 3))
        out = conv3d(NDTensor(delta), LayerParams(NDTensor(kernel))).array
        # cross-correlation imprints the kernel mirrored about its centre
        self.assertTrue(np.allclose(out[0, 1:4, 2:5, 2:5], kernel[0, 0, ::-1, ::-1, ::-1], rtol=0, atol=1e-15))

    def test_factorized_conv_equals_separable_kernel(self):
        x = NDTensor(self.rng.normal(size=(2, 5, 6, 6)))
        temporal = self.rng.normal(size=(4, 2, 3, 1, 1))
        spatial = self.rng.normal(size=(3, 4, 1, 3, 3))
        # K[o, c, t, y, x] = sum_m spatial[o, m, y, x] * temporal[m, c, t]
        full = np.einsum("omyx,mct->octyx", spatial[:, :, 0], temporal[:, :, :, 0, 0])

        factorized = conv2plus1d(x, LayerParams(NDTensor(temporal)), LayerParams(NDTensor(spatial)))
        direct = conv3d(x, LayerParams(NDTensor(full)))

        self.assertTrue(np.allclose(factorized.array, direct.array, rtol=1e-9, atol=1e-12))

    def test_identity_norm_stats(self):
        stats = NormStats.identity(3)
        self.assertTrue(np.array_equal(stats.running.var, np.ones(3)))

    def test_batchnorm_relu_eval_with_identity_stats(self):
        x = self.rng.normal(size=(3, 2, 4, 4))
        out = batchnorm_relu(NDTensor(x), NormStats.identity(3), mode="eval", eps=0.0)
        self.assertTrue(np.allclose(out.array, np.maximum(x, 0.0)))

    def test_batchnorm_relu_train_normalizes_each_channel(self):
        x = self.rng.normal(3.0, 2.0, size=(2, 3, 5, 5))
        out = batchnorm_relu(NDTensor(x), NormStats.identity(2)).array
        self.assertGreaterEqual(out.min(), 0.0)
        for c in range(2):
            expected = (x[c] - x[c].mean()) / np.sqrt(x[c].var() + 1e-5)
            self.assertTrue(np.allclose(out[c], np.maximum(expected, 0.0)))


class TapeTestCase(SimpleTestCase):
    """Test the reverse-mode tape."""

    def test_shared_input_accumulates(self):
        x = Variable(np.array([1.0, -2.0]), requires_grad=True, name="x")
        tape = Tape()
        out = Add.apply(tape, x, x)
        grads = tape.backward(out)
        self.assertTrue(np.array_equal(grads["x"], [2.0, 2.0]))

    def test_each_node_visited_once(self):
        x = Variable(np.ones(3), requires_grad=True, name="x")
        tape = Tape()
        hidden = ReLU.apply(tape, x)
        out = Add.apply(tape, hidden, Add.apply(tape, hidden, hidden))
        order = tape.topological_order(out.node)

        self.assertEqual(len(order), 3)
        self.assertIs(order[0], hidden.node)
        self.assertTrue(np.array_equal(tape.backward(out)["x"], [3.0, 3.0, 3.0]))

    def test_cycle_detected(self):
        a = Variable(np.ones(1), requires_grad=True)
        b = Variable(np.ones(1), requires_grad=True)
        tape = Tape()
        tape.record(TapeNode(ReLU(), [b], a))
        tape.record(TapeNode(ReLU(), [a], b))
        with self.assertRaises(TapeError):
            tape.topological_order(a.node)

    def test_loss_must_be_recorded(self):
        with self.assertRaises(TapeError):
            Tape().backward(Variable(np.ones(1), requires_grad=True))

    def test_constants_are_not_recorded(self):
        tape = Tape()
        ReLU.apply(tape, Variable(np.ones(2)))
        self.assertEqual(len(tape), 0)

    def test_unreached_parameters_get_zero_gradients(self):
        used = Parameter("used", np.ones(2))
        unused = Parameter("unused", np.ones(3))
        tape = Tape()
        out = ReLU.apply(tape, used)

        grads = backward(tape, out, [used, unused])

        self.assertTrue(np.array_equal(grads["unused"], np.zeros(3)))
        self.assertTrue(np.array_equal(grads["used"], np.ones(2)))


class NumericHelpersTestCase(SimpleTestCase):
    def test_relative_error_floor(self):
        self.assertEqual(float(relative_error(0.0, 0.0)), 0.0)
        self.assertAlmostEqual(float(relative_error(1.0, 1.1)), 0.1 / 1.1)

    def test_numeric_gradient_of_quadratic(self):
        x = np.array([1.0, -2.0, 0.5])
        grad = numeric_gradient(lambda: float((x ** 2).sum()), x)
        self.assertTrue(np.allclose(grad, 2 * x, atol=1e-8))
