"""
Runnable networks assembled from a NetSpec.
"""

import logging
from collections import OrderedDict

import numpy as np

from core.exceptions import ShapeError
from nn.functional import SoftmaxCrossEntropy
from nn.tape import Tape, Variable, backward
from tensors.ndtensor import NDTensor

from .blocks import Head, Stem, build_block
from .specs import STAGE_NAMES

logger = logging.getLogger(__name__)


def _block_names(stage_name, blocks):
    residual = correlation = 0
    for block in blocks:
        if block.is_correlation:
            yield f"{stage_name}.corr" if correlation == 0 else f"{stage_name}.corr{correlation}"
            correlation += 1
        else:
            yield f"{stage_name}.{residual}"
            residual += 1


class Network:
    """
    Stem, residual stages and classifier head of one NetSpec.

    Weights are allocated by initialize(); until then the network can only
    report shapes and costs. An instance owns its parameters and is not safe
    for concurrent mutation.

    Attributes:
        spec (NetSpec): The description this network was built from
        blocks (list): Blocks in execution order
        registry (OrderedDict): Parameter name -> Parameter
    """

    def __init__(self, spec):
        self.spec = spec
        self.blocks = []
        self.registry = OrderedDict()

        shape = spec.input
        if spec.stem is not None:
            shape = self._append(Stem(spec.stem, shape[0]), shape)
        for stage_name, blocks in zip(STAGE_NAMES, spec.stages):
            for name, block_spec in zip(_block_names(stage_name, blocks), blocks):
                shape = self._append(build_block(name, block_spec, shape[1]), shape)
        self.output_shape = self._append(Head(shape[0], spec.num_classes), shape)

    def _append(self, block, shape):
        self.blocks.append(block)
        return block.output_shape(shape)

    _allocated = False

    @property
    def initialized(self):
        return self._allocated

    def initialize(self, seed=0):
        """
        Allocate every parameter from a seeded generator.

        Returns:
            Network: self
        """
        rng = np.random.default_rng(seed)
        for block in self.blocks:
            block.initialize(rng)
        self.registry = OrderedDict((p.name, p) for p in self.parameters())
        self._allocated = True
        logger.debug(
            "Initialized %s: %d tensors, %d weights",
            self.spec.name,
            len(self.registry),
            self.parameter_count(),
        )
        return self

    def parameters(self):
        return [p for block in self.blocks for p in block.parameters()]

    def parameter_count(self):
        return sum(p.value.size for p in self.registry.values())

    def buffers(self):
        values = OrderedDict()
        for block in self.blocks:
            values.update(block.buffers())
        return values

    def load_buffers(self, values):
        for block in self.blocks:
            block.load_buffers(values)

    def find_block(self, name):
        for block in self.blocks:
            if block.name == name:
                return block
        raise KeyError(name)

    def correlation_layers(self):
        return [
            layer for block in self.blocks for layer in block.layers if layer.kind == "correlation"
        ]

    def layer_costs(self):
        """LayerCost entries for one clip, in execution order."""
        shape = self.spec.input
        costs = []
        for block in self.blocks:
            costs.extend(block.costs(shape))
            shape = block.output_shape(shape)
        return costs

    def _input(self, x):
        if isinstance(x, Variable):
            return x
        if isinstance(x, NDTensor):
            x = x.array
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 4:
            x = x[None]
        if x.shape[1:] != self.spec.input:
            raise ShapeError(
                f"{self.spec.name} expects clips of shape {list(self.spec.input)}, "
                f"got {list(x.shape[1:])}"
            )
        return Variable(x)

    def forward(self, x, mode="train", tape=None, update_stats=True):
        """
        Logits for a batch of clips.

        Args:
            x: N x C x L x H x W array (or one C x L x H x W clip)
            mode: "train" uses batch statistics, "eval" running statistics
            tape: Tape to record on; None for inference
            update_stats: Whether train mode updates running statistics

        Returns:
            Variable: N x num_classes logits
        """
        if not self.initialized:
            raise RuntimeError(f"{self.spec.name} has not been initialized")
        out = self._input(x)
        for block in self.blocks:
            out = block.forward(tape, out, mode, update_stats)
        return out

    def predict(self, x):
        """Eval-mode logits as an array."""
        return self.forward(x, mode="eval").value

    def forward_backward(self, x, labels, mode="train", update_stats=True):
        """
        Mean cross-entropy over the batch and its gradients.

        Returns:
            tuple: (loss, logits array, dict name -> gradient)
        """
        for parameter in self.registry.values():
            parameter.zero_grad()
        tape = Tape()
        logits = self.forward(x, mode=mode, tape=tape, update_stats=update_stats)
        loss = SoftmaxCrossEntropy.apply(tape, logits, labels=np.asarray(labels))
        grads = backward(tape, loss, self.registry.values())
        return float(loss.value), logits.value, {name: grads[name] for name in self.registry}

    def loss(self, x, labels, mode="train", update_stats=False):
        """Loss only, without recording a tape."""
        logits = self.forward(x, mode=mode, update_stats=update_stats)
        return float(SoftmaxCrossEntropy.apply(None, logits, labels=np.asarray(labels)).value)


def assemble(spec, seed=0):
    """Network for spec with parameters drawn from seed."""
    return Network(spec).initialize(seed)
