"""
Brute-force correlation used as ground truth in tests.

Deliberately naive: explicit nested loops, no reordering, no vectorization.
"""

import numpy as np

from core.exceptions import ShapeError
from tensors.ndtensor import NDTensor


def correlate_pair_oracle(a, b, cfg, filter_slice):
    """Loop over (group, dy, dx, i, j, c) for one frame pair."""
    a, b, w = a.array, b.array, filter_slice.array
    channels, height, width = a.shape
    cfg = cfg.bind(channels, 1)
    out = np.zeros((cfg.out_channels, height, width))
    for grp in range(cfg.G):
        for dy_idx in range(cfg.K):
            for dx_idx in range(cfg.K):
                dy = (dy_idx - cfg.radius) * cfg.D
                dx = (dx_idx - cfg.radius) * cfg.D
                channel = grp * cfg.K * cfg.K + dy_idx * cfg.K + dx_idx
                for i in range(height):
                    for j in range(width):
                        total = 0.0
                        for c in range(grp * cfg.g, (grp + 1) * cfg.g):
                            ii, jj = i + dy, j + dx
                            if 0 <= ii < height and 0 <= jj < width:
                                total += w[c, dy_idx, dx_idx] * b[c, i, j] * a[c, ii, jj]
                        out[channel, i, j] = total / cfg.g
    return NDTensor.wrap(out)


def correlate_clip_oracle(x, cfg, corr_filter):
    """Loop over time steps, each handled by the pair oracle."""
    channels, length = x.shape[:2]
    if not cfg.is_bound:
        cfg = cfg.bind(channels, length)
    elif channels != cfg.C_in or length != cfg.L:
        raise ShapeError(
            f"input has C={channels}, L={length} but config expects "
            f"C={cfg.C_in}, L={cfg.L}"
        )
    weights = corr_filter.weights.array
    frames = [NDTensor(x.array[:, t]) for t in range(length)]
    slices = []
    for t in range(length):
        searched = frames[0] if t == 0 else frames[t - 1]
        pair = correlate_pair_oracle(searched, frames[t], cfg, NDTensor(weights[t]))
        slices.append(pair.array)
    return NDTensor.wrap(np.stack(slices, axis=1))
