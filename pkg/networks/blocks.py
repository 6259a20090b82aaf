"""
Executable blocks built from BlockSpecs.

Each block owns an ordered list of layers. Shapes here are per clip
(C, L, H, W); forward() works on batched N x C x L x H x W Variables.
"""

from nn.functional import Add, ConcatChannels, ReLU
from nn.layers import (
    BatchNormLayer,
    ClassifierHead,
    Conv3dLayer,
    CorrelationLayer,
    TemporalMaxPoolLayer,
)

from .specs import BOTTLENECK_2D, CORRELATION_CONCAT


class Block:
    """Sequence of layers with a name prefix, e.g. "res3.0"."""

    def __init__(self, name):
        self.name = name
        self.layers = []

    def add(self, layer):
        self.layers.append(layer)
        return layer

    def initialize(self, rng):
        for layer in self.layers:
            layer.initialize(rng)

    def parameters(self):
        return [p for layer in self.layers for p in layer.parameters()]

    def buffers(self):
        values = {}
        for layer in self.layers:
            values.update(layer.buffers())
        return values

    def load_buffers(self, values):
        for layer in self.layers:
            layer.load_buffers(values)

    def layer(self, suffix):
        full_name = f"{self.name}.{suffix}"
        for layer in self.layers:
            if layer.name == full_name:
                return layer
        raise KeyError(full_name)

    def walk(self, shape):
        """(layer, input shape) pairs in execution order, and the output shape."""
        raise NotImplementedError

    def output_shape(self, shape):
        return self.walk(shape)[1]

    def costs(self, shape):
        steps, _ = self.walk(shape)
        return [cost for layer, in_shape in steps for cost in layer.costs(in_shape)]

    def forward(self, tape, x, mode="train", update_stats=True):
        raise NotImplementedError


def _chain(steps, layers, shape):
    for layer in layers:
        steps.append((layer, shape))
        shape = layer.output_shape(shape)
    return shape


def _run(layers, tape, x, mode, update_stats):
    for layer in layers:
        x = layer.forward(tape, x, mode, update_stats)
    return x


class Stem(Block):
    """conv1: 1x7x7 convolution with spatial stride, batchnorm and ReLU."""

    def __init__(self, spec, c_in):
        super().__init__("conv1")
        self.add(Conv3dLayer("conv1", c_in, spec.channels, spec.kernel, spec.stride))
        self.add(BatchNormLayer("conv1.bn", spec.channels))

    def walk(self, shape):
        steps = []
        return steps, _chain(steps, self.layers, shape)

    def forward(self, tape, x, mode="train", update_stats=True):
        return _run(self.layers, tape, x, mode, update_stats)


class Bottleneck(Block):
    """
    Residual bottleneck.

    The (2+1)D form runs 1x1x1, 3x1x1 (temporal stride), 1x3x3 (spatial
    stride) and 1x1x1 convolutions. The 2D form drops the 3x1x1 conv and,
    when the block strides in time, max-pools the input over time first.
    """

    def __init__(self, name, spec):
        super().__init__(name)
        c_in, mid, c_out = spec.channels
        s_t, s_y, s_x = spec.stride
        self.pool = None
        temporal = spec.kind != BOTTLENECK_2D
        if not temporal and s_t > 1:
            self.pool = self.add(TemporalMaxPoolLayer(f"{name}.pool"))
        shortcut_stride = spec.stride if temporal else (1, s_y, s_x)

        self.branch = [
            self.add(Conv3dLayer(f"{name}.conv_a", c_in, mid, (1, 1, 1))),
            self.add(BatchNormLayer(f"{name}.bn_a", mid)),
        ]
        if temporal:
            self.branch += [
                self.add(Conv3dLayer(f"{name}.conv_t", mid, mid, (3, 1, 1), (s_t, 1, 1))),
                self.add(BatchNormLayer(f"{name}.bn_t", mid)),
            ]
        self.branch += [
            self.add(Conv3dLayer(f"{name}.conv_s", mid, mid, (1, 3, 3), (1, s_y, s_x))),
            self.add(BatchNormLayer(f"{name}.bn_s", mid)),
            self.add(Conv3dLayer(f"{name}.conv_b", mid, c_out, (1, 1, 1))),
            self.add(BatchNormLayer(f"{name}.bn_b", c_out, relu=False)),
        ]
        self.shortcut = []
        if spec.has_projection:
            self.shortcut = [
                self.add(Conv3dLayer(f"{name}.proj", c_in, c_out, (1, 1, 1), shortcut_stride)),
                self.add(BatchNormLayer(f"{name}.proj_bn", c_out, relu=False)),
            ]

    def walk(self, shape):
        steps = []
        if self.pool is not None:
            shape = _chain(steps, [self.pool], shape)
        out = _chain(steps, self.branch, shape)
        _chain(steps, self.shortcut, shape)
        return steps, out

    def forward(self, tape, x, mode="train", update_stats=True):
        if self.pool is not None:
            x = self.pool.forward(tape, x)
        out = _run(self.branch, tape, x, mode, update_stats)
        shortcut = _run(self.shortcut, tape, x, mode, update_stats)
        return ReLU.apply(tape, Add.apply(tape, out, shortcut))


class CorrelationSum(Block):
    """
    1x1x1 reduce to mid channels, correlation, 1x1x1 restore to the input
    width, then a residual add.
    """

    def __init__(self, name, spec, length):
        super().__init__(name)
        c_in, mid, _ = spec.channels
        cfg = spec.corr_cfg.bind(mid, length)
        self.reduce = [
            self.add(Conv3dLayer(f"{name}.reduce", c_in, mid, (1, 1, 1))),
            self.add(BatchNormLayer(f"{name}.reduce_bn", mid)),
        ]
        self.correlation = self.add(CorrelationLayer(f"{name}.correlation", cfg))
        self.restore = [
            self.add(Conv3dLayer(f"{name}.restore", cfg.out_channels, c_in, (1, 1, 1))),
            self.add(BatchNormLayer(f"{name}.restore_bn", c_in, relu=False)),
        ]

    def walk(self, shape):
        steps = []
        _chain(steps, self.reduce + [self.correlation] + self.restore, shape)
        return steps, shape

    def forward(self, tape, x, mode="train", update_stats=True):
        out = _run(self.reduce, tape, x, mode, update_stats)
        out = self.correlation.forward(tape, out)
        out = _run(self.restore, tape, out, mode, update_stats)
        return ReLU.apply(tape, Add.apply(tape, out, x))


class CorrelationConcat(Block):
    """
    Two branches joined on channels: reduce + correlation gives G*K*K
    channels, a 1x1x1 conv gives the remaining width.
    """

    def __init__(self, name, spec, length):
        super().__init__(name)
        c_in, mid, _ = spec.channels
        cfg = spec.corr_cfg.bind(mid, length)
        self.reduce = [
            self.add(Conv3dLayer(f"{name}.reduce", c_in, mid, (1, 1, 1))),
            self.add(BatchNormLayer(f"{name}.reduce_bn", mid)),
        ]
        self.correlation = self.add(CorrelationLayer(f"{name}.correlation", cfg))
        width = spec.pointwise_channels
        self.pointwise = [
            self.add(Conv3dLayer(f"{name}.pointwise", c_in, width, (1, 1, 1))),
            self.add(BatchNormLayer(f"{name}.pointwise_bn", width)),
        ]

    def walk(self, shape):
        steps = []
        corr = _chain(steps, self.reduce + [self.correlation], shape)
        point = _chain(steps, self.pointwise, shape)
        return steps, (corr[0] + point[0],) + corr[1:]

    def forward(self, tape, x, mode="train", update_stats=True):
        corr = _run(self.reduce, tape, x, mode, update_stats)
        corr = self.correlation.forward(tape, corr)
        point = _run(self.pointwise, tape, x, mode, update_stats)
        return ConcatChannels.apply(tape, corr, point)


class Head(Block):
    def __init__(self, channels, num_classes):
        super().__init__("fc")
        self.add(ClassifierHead("fc", channels, num_classes))

    def walk(self, shape):
        steps = []
        return steps, _chain(steps, self.layers, shape)

    def forward(self, tape, x, mode="train", update_stats=True):
        return self.layers[0].forward(tape, x)


def build_block(name, spec, length):
    """Block for a BlockSpec whose input clip length is length."""
    if spec.kind == CORRELATION_CONCAT:
        return CorrelationConcat(name, spec, length)
    if spec.is_correlation:
        return CorrelationSum(name, spec, length)
    return Bottleneck(name, spec)
