"""
Tests for correlation app.

Covers the operator against the brute-force oracle, its algebraic
properties, and the exactness of its gradients.
"""

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, ShapeError
from nn.numeric import central_difference, sample_coordinates
from tensors.ndtensor import NDTensor

from .config import CorrelationConfig, CorrelationFilter, init_filter, ones_filter
from .kernels import correlate_backward, correlate_forward, shift_window
from .operator import correlate_clip, correlate_clip_backward, correlate_pair
from .oracle import correlate_clip_oracle


def random_filter(cfg, rng):
    return CorrelationFilter(NDTensor(rng.normal(size=(cfg.L, cfg.C_in, cfg.K, cfg.K))))


class CorrelationConfigTestCase(SimpleTestCase):
    """Test config validation."""

    def test_even_window_rejected(self):
        with self.assertRaises(ConfigError):
            CorrelationConfig(K=4)

    def test_zero_dilation_rejected(self):
        with self.assertRaises(ConfigError):
            CorrelationConfig(K=3, D=0)

    def test_channels_must_divide_into_groups(self):
        with self.assertRaises(ConfigError):
            CorrelationConfig(K=3, G=4, C_in=6, L=2)

    def test_clip_length_must_be_positive(self):
        with self.assertRaises(ShapeError):
            CorrelationConfig(K=3, C_in=4, L=0)

    def test_offsets_are_row_major(self):
        cfg = CorrelationConfig(K=3, D=2)
        self.assertEqual(cfg.offsets()[:4], [(-2, -2), (-2, 0), (-2, 2), (0, -2)])
        self.assertEqual(cfg.offsets()[4], (0, 0))
        self.assertEqual(cfg.span, 5)

    def test_frozen_filter_is_all_ones(self):
        cfg = CorrelationConfig(K=3, learnable=False, C_in=2, L=3)
        weights = init_filter(cfg, np.random.default_rng(0)).weights.array
        self.assertTrue(np.array_equal(weights, np.ones((3, 2, 3, 3))))

    def test_learnable_filter_is_perturbed_ones(self):
        cfg = CorrelationConfig(K=3, C_in=2, L=3)
        weights = init_filter(cfg, np.random.default_rng(0), noise=0.01).weights.array
        self.assertLessEqual(np.abs(weights - 1.0).max(), 0.01)
        self.assertGreater(np.abs(weights - 1.0).max(), 0.0)


class CorrelationForwardTestCase(SimpleTestCase):
    """Test the forward operator."""

    def setUp(self):
        self.rng = np.random.default_rng(1234)

    def test_matches_oracle_over_random_configs(self):
        for _ in range(200):
            K = int(self.rng.choice([1, 3, 5, 7]))
            D = int(self.rng.choice([1, 2, 3]))
            G = int(self.rng.choice([1, 2, 4]))
            L = int(self.rng.choice([1, 2, 4, 8]))
            C = G * int(self.rng.integers(1, 3))
            H, W = (int(v) for v in self.rng.integers(3, 7, size=2))
            cfg = CorrelationConfig(K=K, D=D, G=G, learnable=bool(self.rng.integers(2)))
            x = NDTensor(self.rng.normal(size=(C, L, H, W)))
            corr_filter = random_filter(cfg.bind(C, L), self.rng)

            fast = correlate_clip(x, cfg, corr_filter).array
            slow = correlate_clip_oracle(x, cfg, corr_filter).array

            self.assertEqual(fast.shape, (G * K * K, L, H, W))
            self.assertLessEqual(np.abs(fast - slow).max(), 1e-12, (K, D, G, L, C, H, W))

    def test_first_slice_is_self_correlation(self):
        cfg = CorrelationConfig(K=3, G=2, C_in=4, L=3)
        x = NDTensor(self.rng.normal(size=(4, 3, 5, 5)))
        corr_filter = random_filter(cfg, self.rng)
        frame0 = x.slice_axis(1, 0, 1).array[:, 0]
        frame1 = x.slice_axis(1, 1, 2).array[:, 0]

        out = correlate_clip(x, cfg, corr_filter).array
        first = correlate_pair(NDTensor(frame0), NDTensor(frame0), cfg, NDTensor(corr_filter.weights.array[0]))
        second = correlate_pair(NDTensor(frame0), NDTensor(frame1), cfg, NDTensor(corr_filter.weights.array[1]))

        self.assertTrue(np.allclose(out[:, 0], first.array, rtol=0, atol=1e-14))
        self.assertTrue(np.allclose(out[:, 1], second.array, rtol=0, atol=1e-14))

    def test_pair_is_bilinear(self):
        cfg = CorrelationConfig(K=3, D=2, G=1)
        a1, a2, b = (NDTensor(self.rng.normal(size=(2, 6, 6))) for _ in range(3))
        w = NDTensor(self.rng.normal(size=(2, 3, 3)))

        combined = correlate_pair(NDTensor(2.0 * a1.array - a2.array), b, cfg, w).array
        separate = 2.0 * correlate_pair(a1, b, cfg, w).array - correlate_pair(a2, b, cfg, w).array

        self.assertTrue(np.allclose(combined, separate, rtol=0, atol=1e-12))

    def test_out_of_frame_offsets_read_zero(self):
        cfg = CorrelationConfig(K=3, G=1)
        a = NDTensor(np.ones((1, 4, 4)))
        out = correlate_pair(a, a, cfg, NDTensor(np.ones((1, 3, 3)))).array

        # offset (-1, -1) is channel 0: the top row and left column fall outside
        self.assertEqual(out[0, 0, 0], 0.0)
        self.assertEqual(out[0, 0, 3], 0.0)
        self.assertEqual(out[0, 1, 1], 1.0)
        self.assertTrue(np.array_equal(out[4], np.ones((4, 4))))

    def test_point_window_is_elementwise_product(self):
        cfg = CorrelationConfig(K=1, G=3, C_in=3, L=2)
        x = NDTensor(self.rng.normal(size=(3, 2, 4, 4)))

        out = correlate_clip(x, cfg, ones_filter(cfg)).array

        self.assertTrue(np.allclose(out[:, 1], x.array[:, 1] * x.array[:, 0], rtol=0, atol=1e-15))
        self.assertTrue(np.allclose(out[:, 0], x.array[:, 0] ** 2, rtol=0, atol=1e-15))

    def test_group_average_normalization(self):
        cfg = CorrelationConfig(K=1, G=1, C_in=4, L=1)
        x = NDTensor(np.full((4, 1, 2, 2), 3.0))
        out = correlate_clip(x, cfg, ones_filter(cfg)).array
        self.assertTrue(np.array_equal(out, np.full((1, 1, 2, 2), 9.0)))

    def test_filter_shape_checked(self):
        cfg = CorrelationConfig(K=3, C_in=2, L=2)
        x = NDTensor(np.ones((2, 2, 4, 4)))
        with self.assertRaises(ShapeError):
            correlate_clip(x, cfg, CorrelationFilter(NDTensor(np.ones((2, 2, 5, 5)))))

    def test_batched_kernel_matches_per_clip(self):
        cfg = CorrelationConfig(K=3, D=1, G=2, C_in=4, L=3)
        batch = self.rng.normal(size=(3, 4, 3, 5, 5))
        weights = random_filter(cfg, self.rng).weights.array

        out = correlate_forward(batch, weights, cfg)

        for n in range(3):
            single = correlate_clip(NDTensor(batch[n]), cfg, CorrelationFilter(NDTensor(weights)))
            self.assertTrue(np.array_equal(out[n], single.array))

    def test_shift_window_zero_fills(self):
        frames = np.arange(9.0).reshape(1, 3, 3)
        shifted = shift_window(frames, 1, -1)
        self.assertTrue(np.array_equal(shifted[0], [[0, 3, 4], [0, 6, 7], [0, 0, 0]]))

    def test_zero_border_leaves_interior_unchanged(self):
        for K, D in ((3, 1), (3, 2), (5, 1), (7, 3)):
            cfg = CorrelationConfig(K=K, D=D, G=2)
            x = self.rng.normal(size=(4, 3, 5, 6))
            corr_filter = random_filter(cfg.bind(4, 3), self.rng)
            border = D * (K - 1) // 2 + 1
            canvas = np.pad(x, ((0, 0), (0, 0), (border, border), (border + 2, border)))

            plain = correlate_clip(NDTensor(x), cfg, corr_filter).array
            padded = correlate_clip(NDTensor(canvas), cfg, corr_filter).array
            interior = padded[:, :, border:border + 5, border + 2:border + 8]

            self.assertTrue(np.allclose(plain, interior, rtol=0, atol=1e-12), (K, D))

    def test_oracle_rejects_mismatched_bound_config(self):
        cfg = CorrelationConfig(K=3, G=1, C_in=2, L=3)
        corr_filter = random_filter(cfg, self.rng)
        with self.assertRaisesMessage(ShapeError, "config expects C=2, L=3"):
            correlate_clip_oracle(NDTensor(np.ones((2, 2, 4, 4))), cfg, corr_filter)
        with self.assertRaises(ShapeError):
            correlate_clip(NDTensor(np.ones((2, 2, 4, 4))), cfg, corr_filter)


class CorrelationBackwardTestCase(SimpleTestCase):
    """Test gradients of the operator against central differences."""

    def setUp(self):
        self.rng = np.random.default_rng(99)

    def check_against_finite_differences(self, cfg, shape):
        x = self.rng.normal(size=shape)
        weights = self.rng.normal(size=(cfg.L, cfg.C_in, cfg.K, cfg.K))
        projection = self.rng.normal(size=(cfg.out_channels,) + shape[1:])

        def loss():
            out = correlate_forward(x[None], weights, cfg)[0]
            return float((out * projection).sum())

        grads = correlate_clip_backward(
            NDTensor(x), cfg, CorrelationFilter(NDTensor(weights)), NDTensor(projection)
        )
        for index in sample_coordinates(self.rng, x.shape, 40):
            numeric = central_difference(loss, x, index)
            self.assertTrue(
                np.isclose(grads.d_input.array[index], numeric, rtol=1e-6, atol=1e-8), index
            )
        for index in sample_coordinates(self.rng, weights.shape, 40):
            numeric = central_difference(loss, weights, index)
            expected = numeric if cfg.learnable else 0.0
            self.assertTrue(
                np.isclose(grads.d_filter.array[index], expected, rtol=1e-6, atol=1e-8), index
            )

    def test_gradients_plain_window(self):
        self.check_against_finite_differences(CorrelationConfig(K=3, C_in=2, L=3), (2, 3, 5, 5))

    def test_gradients_dilated_grouped(self):
        self.check_against_finite_differences(
            CorrelationConfig(K=3, D=2, G=2, C_in=4, L=4), (4, 4, 6, 6)
        )

    def test_gradients_single_frame(self):
        self.check_against_finite_differences(CorrelationConfig(K=5, C_in=1, L=1), (1, 1, 4, 4))

    def test_frozen_filter_gets_zero_gradient(self):
        self.check_against_finite_differences(
            CorrelationConfig(K=3, learnable=False, C_in=2, L=2), (2, 2, 4, 4)
        )

    def test_adjoint_identity(self):
        cfg = CorrelationConfig(K=3, D=1, G=2, C_in=4, L=3)
        x = self.rng.normal(size=(2, 4, 3, 5, 5))
        weights = self.rng.normal(size=(3, 4, 3, 3))
        d_out = self.rng.normal(size=(2, cfg.out_channels, 3, 5, 5))

        out = correlate_forward(x, weights, cfg)
        d_x, d_weights = correlate_backward(x, weights, cfg, d_out)

        # the operator is homogeneous of degree 2 in x and degree 1 in weights
        total = float((out * d_out).sum())
        self.assertAlmostEqual(float((d_x * x).sum()), 2.0 * total, places=9)
        self.assertAlmostEqual(float((d_weights * weights).sum()), total, places=9)

    def test_gradient_shape_mismatch(self):
        cfg = CorrelationConfig(K=3, C_in=2, L=2)
        x = np.ones((1, 2, 2, 4, 4))
        with self.assertRaises(ShapeError):
            correlate_backward(x, np.ones((2, 2, 3, 3)), cfg, np.ones((1, 5, 2, 4, 4)))
