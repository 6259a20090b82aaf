"""
Tests for tensors app.
"""

import itertools
import math

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, InvalidShapeError, ShapeError

from .layout import CLIP_LAYOUT, TensorLayout4D, concat_channels, slice_channels
from .ndtensor import NDTensor, add, elementwise, mul, zeros


class NDTensorTestCase(SimpleTestCase):
    """Test NDTensor construction and indexing."""

    def test_flat_data_is_reshaped_row_major(self):
        tensor = NDTensor(range(6), shape=[2, 3])

        self.assertEqual(tensor.shape, (2, 3))
        self.assertEqual(tensor[(1, 0)], 3.0)
        self.assertEqual(tensor.flat_index((1, 2)), 5)
        self.assertEqual(tensor.multi_index(4), (1, 1))

    def test_shape_product_must_match_data(self):
        with self.assertRaises(ShapeError):
            NDTensor(range(5), shape=[2, 3])

    def test_zeros_rejects_empty_shape(self):
        with self.assertRaises(InvalidShapeError):
            zeros([])

    def test_zeros_rejects_zero_extent(self):
        with self.assertRaises(InvalidShapeError):
            zeros([2, 0, 3])

    def test_array_is_read_only(self):
        tensor = zeros([2, 2])
        with self.assertRaises(ValueError):
            tensor.array[0, 0] = 1.0

    def test_in_place_mutators(self):
        tensor = zeros([3])
        tensor.axpy_(2.0, NDTensor([1.0, 2.0, 3.0]))
        self.assertEqual(list(tensor.data), [2.0, 4.0, 6.0])

        tensor.assign_([7.0, 8.0, 9.0])
        self.assertEqual(list(tensor.data), [7.0, 8.0, 9.0])
        self.assertFalse(tensor.array.flags.writeable)

    def test_axpy_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            zeros([3]).axpy_(1.0, np.ones(4))

    def test_elementwise_requires_equal_shapes(self):
        with self.assertRaises(ShapeError):
            add(zeros([2, 3]), zeros([3, 2]))

    def test_elementwise_ops(self):
        a = NDTensor([1.0, 2.0])
        b = NDTensor([3.0, 4.0])

        self.assertEqual(add(a, b), NDTensor([4.0, 6.0]))
        self.assertEqual(mul(a, b), NDTensor([3.0, 8.0]))
        self.assertEqual(elementwise(np.maximum, a, b), b)

    def test_elementwise_scalar_functions(self):
        a = NDTensor([[1.0, 5.0], [-2.0, 3.0]])
        b = NDTensor([[4.0, 2.0], [-1.0, 4.0]])

        larger = elementwise(lambda x, y: x if x > y else y, a, b)
        self.assertEqual(larger, NDTensor([[4.0, 5.0], [-1.0, 4.0]]))
        hypot = elementwise(math.hypot, a, b)
        self.assertAlmostEqual(hypot[(0, 0)], math.hypot(1.0, 4.0))
        self.assertEqual(hypot.shape, (2, 2))

    def test_laws_on_random_shapes(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            shape = [int(n) for n in rng.integers(1, 5, size=rng.integers(1, 5))]
            a = NDTensor(rng.normal(size=shape))
            b = NDTensor(rng.normal(size=shape))

            self.assertEqual(add(a, b), add(b, a))
            self.assertEqual(add(a, zeros(shape)), a)
            for index in itertools.product(*(range(n) for n in shape)):
                self.assertEqual(a.multi_index(a.flat_index(index)), index)

    def test_slice_axis_bounds(self):
        tensor = NDTensor(np.arange(24.0).reshape(2, 3, 4))

        self.assertEqual(tensor.slice_axis(1, 1, 3).shape, (2, 2, 4))
        with self.assertRaises(ShapeError):
            tensor.slice_axis(2, 3, 5)

    def test_non_finite_detection(self):
        self.assertFalse(NDTensor([1.0, np.nan]).is_finite())
        self.assertTrue(NDTensor([1.0, 2.0]).is_finite())


class LayoutTestCase(SimpleTestCase):
    """Test clip layout helpers."""

    def test_clip_layout_axes(self):
        self.assertEqual(CLIP_LAYOUT.axis("C"), 0)
        self.assertEqual(CLIP_LAYOUT.axis("W"), 3)
        self.assertEqual(
            CLIP_LAYOUT.extents(zeros([2, 3, 4, 5])), {"C": 2, "L": 3, "H": 4, "W": 5}
        )

    def test_layout_needs_each_role_once(self):
        with self.assertRaises(ConfigError):
            TensorLayout4D(("C", "C", "H", "W"))

    def test_concat_channels(self):
        a = NDTensor(np.ones((2, 3, 4, 4)))
        b = NDTensor(np.zeros((1, 3, 4, 4)))
        out = concat_channels(a, b)

        self.assertEqual(out.shape, (3, 3, 4, 4))
        self.assertEqual(slice_channels(out, 0, 2), a)
        self.assertEqual(slice_channels(out, 2, 3), b)

    def test_concat_channels_mismatch(self):
        with self.assertRaises(ShapeError):
            concat_channels(zeros([1, 3, 4, 4]), zeros([1, 2, 4, 4]))
