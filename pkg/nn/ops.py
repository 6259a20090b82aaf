"""
Per-sample entry points for the primitives.

These take and return NDTensor values (clips are C x L x H x W) and run the
batched Functions with a batch of one, without recording on a tape.
"""

from dataclasses import dataclass

import numpy as np

from core.exceptions import ConfigError, ShapeError
from tensors.ndtensor import NDTensor

from .functional import (
    BatchNorm,
    Conv3d,
    GlobalAvgPoolLinear,
    ReLU,
    RunningStats,
    TemporalMaxPool3,
    log_softmax,
)

KERNEL_SHAPES = {(1, 1, 1), (3, 1, 1), (1, 3, 3), (3, 3, 3), (1, 7, 7)}


@dataclass(frozen=True)
class NormStats:
    """Affine parameters and running statistics of one batchnorm layer."""

    gamma: np.ndarray
    beta: np.ndarray
    running: RunningStats

    @classmethod
    def identity(cls, channels):
        return cls(np.ones(channels), np.zeros(channels), RunningStats(channels))


@dataclass(frozen=True)
class LayerParams:
    """
    Weights of one convolution layer.

    Attributes:
        kernel: NDTensor C_out x C_in x K_t x K_y x K_x
        bias: Optional NDTensor of C_out
        norm_stats: Optional NormStats of the batchnorm that follows
    """

    kernel: NDTensor
    bias: NDTensor = None
    norm_stats: NormStats = None

    def __post_init__(self):
        if len(self.kernel.shape) != 5:
            raise ShapeError(f"kernel must be 5-D, got {list(self.kernel.shape)}")
        if tuple(self.kernel.shape[2:]) not in KERNEL_SHAPES:
            raise ConfigError(f"unsupported kernel footprint {self.kernel.shape[2:]}")
        if self.bias is not None and self.bias.shape != (self.kernel.shape[0],):
            raise ShapeError("bias must hold one value per output channel")

    @property
    def footprint(self):
        return tuple(self.kernel.shape[2:])


def same_padding(footprint):
    return tuple((k - 1) // 2 for k in footprint)


def conv3d(x, params, stride=(1, 1, 1), pad=None):
    """
    Convolve a C_in x L x H x W clip.

    pad defaults to "same" padding, (k - 1) / 2 per axis.
    """
    if pad is None:
        pad = same_padding(params.footprint)
    inputs = [x.array[None], params.kernel.array]
    if params.bias is not None:
        inputs.append(params.bias.array)
    out = Conv3d(stride=tuple(stride), padding=tuple(pad)).forward(*inputs)
    return NDTensor.wrap(out[0])


def conv2plus1d(x, first, second, stride=(1, 1, 1)):
    """
    Two convolutions applied in the order given (e.g. 3x1x1 then 1x3x3).

    The temporal stride is applied by whichever kernel spans time and the
    spatial stride by whichever spans space.
    """
    hidden = conv3d(x, first, stride=_stride_for(first, stride))
    return conv3d(hidden, second, stride=_stride_for(second, stride))


def _stride_for(params, stride):
    k_t, k_y, k_x = params.footprint
    return (stride[0] if k_t > 1 else 1, stride[1] if k_y > 1 else 1, stride[2] if k_x > 1 else 1)


def batchnorm_relu(x, stats, mode="train", momentum=0.9, eps=1e-5):
    """Batch-normalize one clip (a batch of one) and apply max(0, .)."""
    normed = BatchNorm(running=stats.running, mode=mode, momentum=momentum, eps=eps).forward(
        x.array[None], stats.gamma, stats.beta
    )
    return NDTensor.wrap(ReLU().forward(normed)[0])


def temporal_maxpool3(x):
    """Stride-2 temporal max pooling with a 3 x 1 x 1 window."""
    return NDTensor.wrap(TemporalMaxPool3().forward(x.array[None])[0])


def global_avgpool_fc(x, w):
    """Mean over (L, H, W) then the linear map w (num_classes x C)."""
    return NDTensor.wrap(GlobalAvgPoolLinear().forward(x.array[None], w.array)[0])


def softmax_xent(logits, label):
    """
    Cross-entropy of one logit vector.

    Returns:
        tuple: (loss as float, d_logits NDTensor)
    """
    values = logits.array
    if not 0 <= label < values.shape[0]:
        raise ShapeError(f"label {label} out of range for {values.shape[0]} classes")
    log_probs = log_softmax(values)
    d_logits = np.exp(log_probs)
    d_logits[label] -= 1.0
    return float(-log_probs[label]), NDTensor.wrap(d_logits)
