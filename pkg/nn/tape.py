"""
Reverse-mode differentiation tape.

Functions record one TapeNode per call. Tape.backward walks the nodes
reachable from the loss in reverse topological order, visiting each once.
"""

import logging

import numpy as np

from core.exceptions import TapeError
from tensors.ndtensor import NDTensor

logger = logging.getLogger(__name__)


class Variable:
    """
    A value flowing through the tape.

    Attributes:
        value (np.ndarray): Forward value
        grad (np.ndarray or None): Accumulated gradient after backward
        node (TapeNode or None): Node that produced this value; None for leaves
        requires_grad (bool): Whether gradients flow to this value
        name (str or None): Registry name for parameters
    """

    def __init__(self, value, requires_grad=False, name=None):
        self._value = value
        self.grad = None
        self.node = None
        self.requires_grad = requires_grad
        self.name = name

    @property
    def value(self):
        return self._value

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, grad):
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64, copy=True)
        else:
            self.grad += grad

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Variable(name={self.name!r}, shape={list(self.shape)})"


class Parameter(Variable):
    """
    A learnable (or frozen) tensor owned by a network.

    The value is the storage of an NDTensor so the optimizer's in-place
    mutators are visible to every forward pass.
    """

    def __init__(self, name, tensor, requires_grad=True, decay=True):
        if not isinstance(tensor, NDTensor):
            tensor = NDTensor.wrap(tensor)
        super().__init__(tensor.array, requires_grad=requires_grad, name=name)
        self.tensor = tensor
        self.decay = decay

    @property
    def value(self):
        return self.tensor.array


class TapeNode:
    """
    One recorded operation.

    Attributes:
        function: Function instance holding saved forward state
        inputs (tuple): Input Variables
        output (Variable): Produced Variable
    """

    __slots__ = ("function", "inputs", "output")

    def __init__(self, function, inputs, output):
        self.function = function
        self.inputs = tuple(inputs)
        self.output = output

    @property
    def op(self):
        return self.function.name

    def parents(self):
        return [v.node for v in self.inputs if v.node is not None]


class Tape:
    """Ordered record of the operations of one forward pass."""

    def __init__(self):
        self.nodes = []

    def record(self, node):
        node.output.node = node
        self.nodes.append(node)

    def __len__(self):
        return len(self.nodes)

    def topological_order(self, root):
        """
        Nodes reachable from root, parents before children.

        Raises:
            TapeError: If the graph contains a cycle
        """
        order = []
        state = {}
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            key = id(node)
            if expanded:
                state[key] = "done"
                order.append(node)
                continue
            if state.get(key) == "done":
                continue
            if state.get(key) == "active":
                raise TapeError(f"cycle detected at op '{node.op}'")
            state[key] = "active"
            stack.append((node, True))
            for parent in node.parents():
                parent_state = state.get(id(parent))
                if parent_state == "active":
                    raise TapeError(f"cycle detected at op '{parent.op}'")
                if parent_state is None:
                    stack.append((parent, False))
        return order

    def backward(self, loss, grad=None):
        """
        Propagate d(loss) back to every Variable that requires a gradient.

        Args:
            loss: Output Variable (typically a scalar)
            grad: Upstream gradient; ones when omitted

        Returns:
            dict: name -> gradient for every named Variable reached
        """
        if loss.node is None:
            raise TapeError("loss was not produced by a recorded operation")
        seed = np.ones_like(loss.value) if grad is None else np.asarray(grad, dtype=np.float64)
        loss.accumulate(seed)

        named = {}
        for node in reversed(self.topological_order(loss.node)):
            upstream = node.output.grad
            if upstream is None:
                continue
            input_grads = node.function.backward(upstream)
            for variable, input_grad in zip(node.inputs, input_grads):
                if input_grad is None or not variable.requires_grad:
                    continue
                variable.accumulate(input_grad)
                if variable.node is None and variable.name is not None:
                    named[variable.name] = variable.grad
        return named


def backward(tape, loss, parameters=()):
    """
    Run the tape backward and return gradients for every parameter.

    Parameters the loss does not depend on receive zero gradients.
    """
    grads = tape.backward(loss)
    for parameter in parameters:
        if parameter.requires_grad and parameter.name not in grads:
            parameter.grad = np.zeros_like(parameter.value)
            grads[parameter.name] = parameter.grad
    return grads
