"""
Instrumented multiply counters.

Convolution, correlation and fc kernels report how many scalar multiplies
they perform. Counting is off unless a count_multiplies() block is active.
"""

import threading
from collections import OrderedDict
from contextlib import contextmanager

_state = threading.local()


class MultiplyCounter:
    """Per-layer multiply totals collected during one or more forward passes."""

    def __init__(self):
        self.per_layer = OrderedDict()

    def add(self, layer, count):
        self.per_layer[layer] = self.per_layer.get(layer, 0) + int(count)

    @property
    def total(self):
        return sum(self.per_layer.values())


@contextmanager
def count_multiplies():
    """
    Collect multiply counts for every instrumented kernel run in the block.

    Yields:
        MultiplyCounter: The counter being filled
    """
    previous = getattr(_state, "counter", None)
    counter = MultiplyCounter()
    _state.counter = counter
    try:
        yield counter
    finally:
        _state.counter = previous


def record(layer, count):
    """Add count multiplies for layer to the active counter, if any."""
    counter = getattr(_state, "counter", None)
    if counter is not None:
        counter.add(layer, count)
