"""
Parameterized layers.

Layers know their output shape and analytic cost without allocating
weights; initialize() allocates Parameters from a numpy Generator, and
forward() records the layer's Functions on a tape.
"""

from dataclasses import dataclass

import numpy as np
from django.conf import settings

from core.exceptions import ShapeError
from correlation.config import init_filter

from .functional import (
    BatchNorm,
    Conv3d,
    Correlation,
    GlobalAvgPoolLinear,
    ReLU,
    RunningStats,
    TemporalMaxPool3,
    output_extent,
)
from .tape import Parameter, Variable


@dataclass(frozen=True)
class LayerCost:
    """Parameter count and multiply count of one layer for one input clip."""

    name: str
    kind: str
    params: int
    flops: int


class Layer:
    """Base layer: identity shape, no cost, no parameters."""

    kind = "layer"

    def __init__(self, name):
        self.name = name
        self._parameters = []

    def output_shape(self, shape):
        return shape

    def costs(self, shape):
        return []

    def initialize(self, rng):
        """Allocate parameters; the base layer has none."""

    def parameters(self):
        return list(self._parameters)

    def buffers(self):
        return {}

    def load_buffers(self, values):
        """Restore buffers saved by buffers(); the base layer has none."""

    def forward(self, tape, x, mode="train", update_stats=True):
        raise NotImplementedError


class Conv3dLayer(Layer):
    """Bias-free convolution with "same" padding and an optional stride."""

    kind = "conv3d"

    def __init__(self, name, c_in, c_out, footprint, stride=(1, 1, 1)):
        super().__init__(name)
        self.c_in, self.c_out = c_in, c_out
        self.footprint = tuple(footprint)
        self.stride = tuple(stride)
        self.padding = tuple((k - 1) // 2 for k in self.footprint)
        self.weight = None

    def output_shape(self, shape):
        channels, *extents = shape
        if channels != self.c_in:
            raise ShapeError(f"{self.name}: expected {self.c_in} channels, got {channels}")
        return (self.c_out,) + tuple(
            output_extent(size, k, s, p)
            for size, k, s, p in zip(extents, self.footprint, self.stride, self.padding)
        )

    def costs(self, shape):
        out = self.output_shape(shape)
        params = self.c_out * self.c_in * int(np.prod(self.footprint))
        return [LayerCost(self.name, self.kind, params, params * int(np.prod(out[1:])))]

    def initialize(self, rng):
        fan_in = self.c_in * int(np.prod(self.footprint))
        shape = (self.c_out, self.c_in) + self.footprint
        self.weight = Parameter(f"{self.name}.weight", rng.normal(0.0, np.sqrt(2.0 / fan_in), shape))
        self._parameters = [self.weight]

    def forward(self, tape, x, mode="train", update_stats=True):
        return Conv3d.apply(
            tape, x, self.weight, stride=self.stride, padding=self.padding, layer=self.name
        )


class BatchNormLayer(Layer):
    """Batch normalization, optionally followed by ReLU."""

    kind = "batchnorm"

    def __init__(self, name, channels, relu=True):
        super().__init__(name)
        self.channels = channels
        self.relu = relu
        self.running = RunningStats(channels)
        self.gamma = self.beta = None

    def costs(self, shape):
        return [LayerCost(self.name, self.kind, 2 * self.channels, 0)]

    def initialize(self, rng):
        self.gamma = Parameter(f"{self.name}.gamma", np.ones(self.channels), decay=False)
        self.beta = Parameter(f"{self.name}.beta", np.zeros(self.channels), decay=False)
        self.running = RunningStats(self.channels)
        self._parameters = [self.gamma, self.beta]

    def buffers(self):
        return {
            f"{self.name}.running_mean": self.running.mean,
            f"{self.name}.running_var": self.running.var,
        }

    def load_buffers(self, values):
        self.running.mean = np.array(values[f"{self.name}.running_mean"], dtype=np.float64)
        self.running.var = np.array(values[f"{self.name}.running_var"], dtype=np.float64)

    def forward(self, tape, x, mode="train", update_stats=True):
        norm = settings.CORRNET["BATCHNORM"]
        out = BatchNorm.apply(
            tape,
            x,
            self.gamma,
            self.beta,
            running=self.running,
            mode=mode,
            update_stats=update_stats,
            momentum=norm["momentum"],
            eps=norm["eps"],
        )
        return ReLU.apply(tape, out) if self.relu else out


class CorrelationLayer(Layer):
    """
    Correlation operator with its L x C x K x K filter.

    A frozen (non-learnable) filter is held as a constant, not a Parameter.
    """

    kind = "correlation"

    def __init__(self, name, cfg):
        super().__init__(name)
        cfg.require_bound()
        self.cfg = cfg
        self.filter = None

    def output_shape(self, shape):
        channels, length, height, width = shape
        if channels != self.cfg.C_in or length != self.cfg.L:
            raise ShapeError(
                f"{self.name}: expected C={self.cfg.C_in}, L={self.cfg.L}, got {shape}"
            )
        return (self.cfg.out_channels, length, height, width)

    def costs(self, shape):
        _, length, height, width = self.output_shape(shape)
        window = self.cfg.K * self.cfg.K
        params = length * self.cfg.C_in * window if self.cfg.learnable else 0
        flops = self.cfg.C_in * window * length * height * width
        return [LayerCost(self.name, self.kind, params, flops)]

    def initialize(self, rng):
        weights = init_filter(self.cfg, rng).weights
        if self.cfg.learnable:
            self.filter = Parameter(f"{self.name}.filter", weights, decay=False)
            self._parameters = [self.filter]
        else:
            self.filter = Variable(weights.array, requires_grad=False, name=f"{self.name}.filter")
            self._parameters = []

    def forward(self, tape, x, mode="train", update_stats=True):
        return Correlation.apply(tape, x, self.filter, cfg=self.cfg, layer=self.name)


class TemporalMaxPoolLayer(Layer):
    kind = "temporal_maxpool3"

    def output_shape(self, shape):
        channels, length, height, width = shape
        return (channels, (length - 1) // 2 + 1, height, width)

    def forward(self, tape, x, mode="train", update_stats=True):
        return TemporalMaxPool3.apply(tape, x)


class ClassifierHead(Layer):
    """Global average pool and bias-free fc."""

    kind = "fc"

    def __init__(self, name, channels, num_classes):
        super().__init__(name)
        self.channels, self.num_classes = channels, num_classes
        self.weight = None

    def output_shape(self, shape):
        if shape[0] != self.channels:
            raise ShapeError(f"{self.name}: expected {self.channels} channels, got {shape[0]}")
        return (self.num_classes,)

    def costs(self, shape):
        count = self.num_classes * self.channels
        return [LayerCost(self.name, self.kind, count, count)]

    def initialize(self, rng):
        self.weight = Parameter(
            f"{self.name}.weight", rng.normal(0.0, 0.01, (self.num_classes, self.channels))
        )
        self._parameters = [self.weight]

    def forward(self, tape, x, mode="train", update_stats=True):
        return GlobalAvgPoolLinear.apply(tape, x, self.weight, layer=self.name)
