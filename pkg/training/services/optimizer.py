"""
SGD with momentum over a network's parameter registry.
"""

import logging
from collections import OrderedDict

import numpy as np

from core.exceptions import ConfigError, NumericError

logger = logging.getLogger(__name__)


def first_non_finite(loss, grads):
    """Name of the first non-finite value among the loss and the gradients, or None."""
    if not np.isfinite(loss):
        return "loss"
    for name, grad in grads.items():
        if not np.isfinite(grad).all():
            return f"{name}.grad"
    return None


class SGD:
    """
    Heavy-ball SGD: v <- momentum * v + (g + decay * w); w <- w - lr * v.

    Weight decay only touches parameters flagged with decay=True (convolution
    and fc weights). Momentum buffers are keyed by registry name so they can
    be checkpointed.
    """

    def __init__(self, registry, momentum=0.9, weight_decay=1e-4):
        self.registry = registry
        self.momentum = momentum
        self.weight_decay = weight_decay
        self.buffers = OrderedDict((name, np.zeros_like(p.value)) for name, p in registry.items())

    def load_buffers(self, buffers):
        """Restore momentum buffers saved from an identical registry."""
        if set(buffers) != set(self.buffers):
            missing = sorted(set(self.buffers) ^ set(buffers))
            raise ConfigError(f"momentum buffers do not match the network: {missing[:3]}")
        for name, value in buffers.items():
            if value.shape != self.buffers[name].shape:
                raise ConfigError(f"momentum buffer {name} has shape {value.shape}")
            self.buffers[name] = np.array(value, dtype=np.float64)

    def step(self, grads, lr, loss=0.0):
        """
        Apply one update.

        Raises:
            NumericError: If the loss or any gradient is non-finite; no
                parameter is touched in that case
        """
        culprit = first_non_finite(loss, grads)
        if culprit is not None:
            logger.error(f"Non-finite value in {culprit}; aborting before the update")
            raise NumericError(f"non-finite value in {culprit}")

        for name, parameter in self.registry.items():
            grad = grads[name]
            if parameter.decay and self.weight_decay:
                grad = grad + self.weight_decay * parameter.value
            velocity = self.buffers[name]
            velocity *= self.momentum
            velocity += grad
            parameter.tensor.axpy_(-lr, velocity)
