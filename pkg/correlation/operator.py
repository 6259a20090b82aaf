"""
Correlation operator on single clips and frame pairs.

These are the per-sample entry points over NDTensor values; the batched
kernels in correlation.kernels do the arithmetic.
"""

import numpy as np

from core.exceptions import ShapeError
from tensors.ndtensor import NDTensor

from .config import CorrelationFilter, CorrelationGrads
from .kernels import correlate_backward, correlate_forward, shift_window


def correlate_pair(a, b, cfg, filter_slice):
    """
    Correlate reference frame b against searched frame a.

    out[grp * K^2 + k, i, j] = (1/g) * sum over c in grp of
    filter[c, k] * b[c, i, j] * a[c, i + dy_k, j + dx_k]

    Args:
        a: Searched frame, C x H x W
        b: Reference frame, C x H x W
        cfg: CorrelationConfig (C_in taken from the frames when unbound)
        filter_slice: C x K x K weights

    Returns:
        NDTensor: (G * K * K) x H x W
    """
    if a.shape != b.shape or len(a.shape) != 3:
        raise ShapeError(f"frames must share a C x H x W shape, got {a.shape} and {b.shape}")
    cfg = cfg.bind(a.shape[0], 1)
    if filter_slice.shape != (cfg.C_in, cfg.K, cfg.K):
        raise ShapeError(f"filter slice shape {list(filter_slice.shape)} does not match config")

    reference = b.array[None, :, None]
    searched = a.array[None, :, None]
    groups, group_size = cfg.G, cfg.g
    height, width = a.shape[1:]
    weights = filter_slice.array.reshape(cfg.C_in, cfg.K * cfg.K)

    out = np.empty((groups, cfg.K * cfg.K, height, width))
    for k, (dy, dx) in enumerate(cfg.offsets()):
        terms = (reference * shift_window(searched, dy, dx))[0, :, 0]
        terms = terms * weights[:, k][:, None, None]
        out[:, k] = terms.reshape(groups, group_size, height, width).sum(axis=1) / group_size
    return NDTensor.wrap(out.reshape(groups * cfg.K * cfg.K, height, width))


def correlate_clip(x, cfg, corr_filter):
    """
    Correlate each frame with its predecessor (frame 0 with itself).

    Args:
        x: Clip C x L x H x W
        cfg: CorrelationConfig (bound to the clip's C and L if unbound)
        corr_filter: CorrelationFilter of shape L x C x K x K

    Returns:
        NDTensor: (G * K * K) x L x H x W
    """
    cfg = _bind_to_clip(cfg, x)
    corr_filter.check(cfg)
    out = correlate_forward(x.array[None], corr_filter.weights.array, cfg)
    return NDTensor.wrap(out[0])


def correlate_clip_backward(x, cfg, corr_filter, d_out):
    """
    Gradients of correlate_clip w.r.t. the clip and the filter.

    Returns:
        CorrelationGrads
    """
    cfg = _bind_to_clip(cfg, x)
    corr_filter.check(cfg)
    d_x, d_weights = correlate_backward(
        x.array[None], corr_filter.weights.array, cfg, d_out.array[None]
    )
    return CorrelationGrads(d_input=NDTensor.wrap(d_x[0]), d_filter=NDTensor.wrap(d_weights))


def _bind_to_clip(cfg, x):
    if len(x.shape) != 4:
        raise ShapeError(f"expected a C x L x H x W clip, got shape {list(x.shape)}")
    if cfg.is_bound:
        return cfg
    return cfg.bind(x.shape[0], x.shape[1])
