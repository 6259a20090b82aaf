"""
Dense N-D tensor storage.

NDTensor wraps a row-major float64 numpy array whose shape never changes
after construction. Arrays handed out through .array are read-only; the only
mutators are the explicitly named in-place methods the optimizer uses.
"""

import numpy as np

from core.exceptions import InvalidShapeError, ShapeError

DTYPE = np.float64


def _validated_shape(shape):
    shape = tuple(int(extent) for extent in shape)
    if not shape:
        raise InvalidShapeError("shape must have at least one axis")
    if any(extent < 1 for extent in shape):
        raise InvalidShapeError(f"all extents must be >= 1, got {list(shape)}")
    return shape


class NDTensor:
    """
    Immutable dense tensor of 64-bit floats in row-major order.

    Attributes:
        shape (tuple): Positive extents, last axis fastest
        array (np.ndarray): Read-only view of the data
    """

    __slots__ = ("_data",)

    def __init__(self, data, shape=None):
        data = np.array(data, dtype=DTYPE, order="C", copy=True)
        if shape is not None:
            shape = _validated_shape(shape)
            if data.size != int(np.prod(shape)):
                raise ShapeError(
                    f"product of shape {list(shape)} != data length {data.size}"
                )
            data = data.reshape(shape)
        else:
            _validated_shape(data.shape)
        data.flags.writeable = False
        self._data = data

    @classmethod
    def wrap(cls, array):
        """Adopt an array without copying; the caller must not keep writing to it."""
        tensor = cls.__new__(cls)
        array = np.ascontiguousarray(array, dtype=DTYPE)
        _validated_shape(array.shape)
        array.flags.writeable = False
        tensor._data = array
        return tensor

    @property
    def shape(self):
        return self._data.shape

    @property
    def array(self):
        return self._data

    @property
    def data(self):
        """Flat row-major copy of the elements."""
        return self._data.ravel().copy()

    @property
    def size(self):
        return self._data.size

    def __len__(self):
        return self._data.shape[0]

    def __getitem__(self, index):
        """Read one element by multi-index or flat index."""
        if isinstance(index, tuple):
            return float(self._data[index])
        return float(self._data.reshape(-1)[index])

    def __eq__(self, other):
        if not isinstance(other, NDTensor):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self._data, other._data)

    def __hash__(self):
        return hash((self.shape, self._data.tobytes()))

    def __repr__(self):
        return f"NDTensor(shape={list(self.shape)})"

    def flat_index(self, index):
        """Row-major flat position of a multi-index."""
        return int(np.ravel_multi_index(tuple(index), self.shape))

    def multi_index(self, flat):
        """Multi-index of a row-major flat position."""
        return tuple(int(i) for i in np.unravel_index(int(flat), self.shape))

    def slice_axis(self, axis, start, stop):
        """Copy of the half-open range [start, stop) along one axis."""
        if not 0 <= start < stop <= self.shape[axis]:
            raise ShapeError(
                f"range [{start}, {stop}) out of bounds for axis {axis} "
                f"of extent {self.shape[axis]}"
            )
        index = [slice(None)] * len(self.shape)
        index[axis] = slice(start, stop)
        return NDTensor(self._data[tuple(index)])

    def is_finite(self):
        return bool(np.isfinite(self._data).all())

    # In-place mutators used by the optimizer only

    def axpy_(self, alpha, other):
        """self += alpha * other, in place."""
        other = other.array if isinstance(other, NDTensor) else np.asarray(other)
        if other.shape != self.shape:
            raise ShapeError(f"axpy_ shape mismatch {other.shape} vs {self.shape}")
        self._data.flags.writeable = True
        try:
            self._data += alpha * other
        finally:
            self._data.flags.writeable = False

    def assign_(self, values):
        """Overwrite every element, in place."""
        values = values.array if isinstance(values, NDTensor) else np.asarray(values)
        if values.shape != self.shape:
            raise ShapeError(f"assign_ shape mismatch {values.shape} vs {self.shape}")
        self._data.flags.writeable = True
        try:
            self._data[...] = values
        finally:
            self._data.flags.writeable = False


def zeros(shape):
    """
    Tensor of the given shape filled with 0.0.

    Raises:
        InvalidShapeError: If the shape list is empty or holds an extent < 1
    """
    return NDTensor.wrap(np.zeros(_validated_shape(shape), dtype=DTYPE))


def elementwise(op, a, b):
    """
    Apply a binary function to matching elements of two tensors.

    No broadcasting: shapes must agree exactly. op may be a numpy ufunc or
    any scalar function of two floats.
    """
    if a.shape != b.shape:
        raise ShapeError(f"elementwise shape mismatch {list(a.shape)} vs {list(b.shape)}")
    if isinstance(op, np.ufunc):
        result = np.asarray(op(a.array, b.array), dtype=DTYPE)
    else:
        result = np.vectorize(op, otypes=[DTYPE])(a.array, b.array)
    return NDTensor.wrap(result.copy())


def add(a, b):
    return elementwise(np.add, a, b)


def mul(a, b):
    return elementwise(np.multiply, a, b)
