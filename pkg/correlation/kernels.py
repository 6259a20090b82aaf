"""
Vectorized correlation kernels on batched clips (N x C x L x H x W).

Output channel index is group * K^2 + offset index, offsets in row-major
order over the dilated window. Slice t correlates frame t (reference) with
frame t - 1 (searched); slice 0 is the self-correlation of frame 0.
"""

import numpy as np

from core.exceptions import ShapeError
from core.services.counters import record


def shift_window(frames, dy, dx):
    """
    Displace the last two axes: out[..., i, j] = frames[..., i + dy, j + dx].

    Positions reading outside the frame are zero.
    """
    height, width = frames.shape[-2:]
    out = np.zeros_like(frames)
    y0, y1 = max(0, -dy), min(height, height - dy)
    x0, x1 = max(0, -dx), min(width, width - dx)
    if y0 < y1 and x0 < x1:
        out[..., y0:y1, x0:x1] = frames[..., y0 + dy : y1 + dy, x0 + dx : x1 + dx]
    return out


def searched_frames(x):
    """Frame paired with each time step: frame 0 for t = 0, else frame t - 1."""
    return np.concatenate([x[:, :, :1], x[:, :, :-1]], axis=2)


def _check_inputs(x, weights, cfg):
    cfg.require_bound()
    if x.ndim != 5:
        raise ShapeError(f"expected N x C x L x H x W input, got shape {x.shape}")
    _, channels, length = x.shape[:3]
    if channels != cfg.C_in or length != cfg.L:
        raise ShapeError(
            f"input has C={channels}, L={length} but config expects "
            f"C={cfg.C_in}, L={cfg.L}"
        )
    if length < 1:
        raise ShapeError("clip length must be >= 1")
    if weights.shape != (cfg.L, cfg.C_in, cfg.K, cfg.K):
        raise ShapeError(f"filter shape {weights.shape} does not match config")


def _offset_weights(weights, cfg):
    # (L, C, K, K) -> (C, L, K^2)
    return weights.reshape(cfg.L, cfg.C_in, cfg.K * cfg.K).transpose(1, 0, 2)


def correlate_forward(x, weights, cfg, layer=None):
    """
    Correlation of every clip in a batch.

    Args:
        x: Array N x C x L x H x W
        weights: Filter array L x C x K x K
        cfg: Bound CorrelationConfig
        layer: Name reported to the multiply counter

    Returns:
        np.ndarray: N x (G * K * K) x L x H x W
    """
    _check_inputs(x, weights, cfg)
    batch, channels, length, height, width = x.shape
    groups, group_size, window = cfg.G, cfg.g, cfg.K * cfg.K
    searched = searched_frames(x)
    offset_weights = _offset_weights(weights, cfg)

    out = np.empty((batch, groups, window, length, height, width))
    for k, (dy, dx) in enumerate(cfg.offsets()):
        terms = x * shift_window(searched, dy, dx)
        terms *= offset_weights[:, :, k][None, :, :, None, None]
        grouped = terms.reshape(batch, groups, group_size, length, height, width)
        out[:, :, k] = grouped.sum(axis=2) / group_size
    record(layer or "correlation", batch * channels * window * length * height * width)
    return out.reshape(batch, groups * window, length, height, width)


def correlate_backward(x, weights, cfg, d_out):
    """
    Exact adjoint of correlate_forward.

    Returns:
        tuple: (d_x with the shape of x, d_weights with the shape of weights);
            d_weights is all zeros when the config is not learnable
    """
    _check_inputs(x, weights, cfg)
    batch, channels, length, height, width = x.shape
    groups, group_size, window = cfg.G, cfg.g, cfg.K * cfg.K
    expected = (batch, groups * window, length, height, width)
    if d_out.shape != expected:
        raise ShapeError(f"d_out shape {d_out.shape} != forward output {expected}")

    d_out = d_out.reshape(batch, groups, window, length, height, width)
    searched = searched_frames(x)
    offset_weights = _offset_weights(weights, cfg)

    d_reference = np.zeros_like(x)
    d_searched = np.zeros_like(x)
    d_offset_weights = np.zeros_like(offset_weights)
    for k, (dy, dx) in enumerate(cfg.offsets()):
        d_terms = np.repeat(d_out[:, :, k], group_size, axis=1) / group_size
        shifted = shift_window(searched, dy, dx)
        w_k = offset_weights[:, :, k][None, :, :, None, None]
        d_offset_weights[:, :, k] = (d_terms * x * shifted).sum(axis=(0, 3, 4))
        d_reference += d_terms * w_k * shifted
        d_searched += shift_window(d_terms * w_k * x, -dy, -dx)

    d_x = d_reference
    d_x[:, :, 0] += d_searched[:, :, 0]
    d_x[:, :, :-1] += d_searched[:, :, 1:]

    d_weights = d_offset_weights.transpose(1, 0, 2).reshape(weights.shape)
    if not cfg.learnable:
        d_weights = np.zeros_like(weights)
    return d_x, np.ascontiguousarray(d_weights)
