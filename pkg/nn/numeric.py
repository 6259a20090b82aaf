"""
Finite-difference helpers shared by the unit tests and the gradcheck command.
"""

import numpy as np


def relative_error(analytic, numeric, floor=1e-8):
    """|a - n| / max(|a|, |n|, floor), elementwise."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return np.abs(analytic - numeric) / scale


def central_difference(loss, array, index, step=1e-5):
    """
    (loss(x + h e_i) - loss(x - h e_i)) / 2h for one coordinate.

    The array is perturbed in place and restored afterwards; it must be
    writeable.
    """
    original = array[index]
    try:
        array[index] = original + step
        upper = loss()
        array[index] = original - step
        lower = loss()
    finally:
        array[index] = original
    return (upper - lower) / (2.0 * step)


def numeric_gradient(loss, array, step=1e-5):
    """Central-difference gradient of loss() w.r.t. every element of array."""
    grad = np.zeros_like(array, dtype=np.float64)
    for index in np.ndindex(array.shape):
        grad[index] = central_difference(loss, array, index, step)
    return grad


def sample_coordinates(rng, shape, count):
    """count distinct multi-indices drawn uniformly (all of them if fewer exist)."""
    size = int(np.prod(shape))
    flat = rng.choice(size, size=min(count, size), replace=False)
    return [tuple(int(i) for i in np.unravel_index(f, shape)) for f in flat]
