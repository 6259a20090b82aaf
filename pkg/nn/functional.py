"""
Differentiable primitives.

Every primitive is a Function with forward() on numpy arrays and backward()
returning one gradient (or None) per input. Function.apply records the call
on a Tape. Arrays are batched: clips are N x C x L x H x W.
"""

import numpy as np

from core.exceptions import ShapeError
from core.services.counters import record
from correlation.kernels import correlate_backward, correlate_forward

from .tape import TapeNode, Variable


class Function:
    """Base class for differentiable operations."""

    name = "function"

    def __init__(self, **attrs):
        self.attrs = attrs
        self.saved = {}

    def forward(self, *arrays):
        raise NotImplementedError("Forward pass not implemented for this function")

    def backward(self, grad):
        raise NotImplementedError("Backward pass not implemented for this function")

    @classmethod
    def apply(cls, tape, *inputs, **attrs):
        """
        Run forward on the input values and record the call.

        Args:
            tape: Tape to record on, or None for a pure forward pass
            *inputs: Input Variables
            **attrs: Operation attributes

        Returns:
            Variable: The output
        """
        function = cls(**attrs)
        out = function.forward(*(v.value for v in inputs))
        requires_grad = any(v.requires_grad for v in inputs)
        output = Variable(out, requires_grad=requires_grad)
        if tape is not None and requires_grad:
            tape.record(TapeNode(function, inputs, output))
        return output


def output_extent(size, kernel, stride, pad):
    return (size + 2 * pad - kernel) // stride + 1


class Conv3d(Function):
    """
    3D cross-correlation-style convolution with optional bias.

    attrs: stride (s_t, s_y, s_x), padding (p_t, p_y, p_x), layer (counter name)
    """

    name = "conv3d"

    def forward(self, x, kernel, bias=None):
        stride = self.attrs.get("stride", (1, 1, 1))
        padding = self.attrs.get("padding", (0, 0, 0))
        batch, channels = x.shape[:2]
        out_channels, in_channels = kernel.shape[:2]
        if channels != in_channels:
            raise ShapeError(f"conv3d input has {channels} channels, kernel expects {in_channels}")
        extents = [
            output_extent(x.shape[2 + axis], kernel.shape[2 + axis], stride[axis], padding[axis])
            for axis in range(3)
        ]
        if min(extents) < 1:
            raise ShapeError(f"conv3d output would be empty for input {x.shape}")

        padded = np.pad(x, ((0, 0), (0, 0)) + tuple((p, p) for p in padding))
        out = np.zeros((out_channels, batch, *extents))
        for offset, window in self._windows(padded, kernel.shape[2:], stride, extents):
            out += np.tensordot(kernel[(slice(None), slice(None)) + offset], window, axes=([1], [1]))
        out = np.ascontiguousarray(out.transpose(1, 0, 2, 3, 4))
        if bias is not None:
            out += bias[None, :, None, None, None]

        record(
            self.attrs.get("layer", "conv3d"),
            batch * out_channels * in_channels * int(np.prod(kernel.shape[2:])) * int(np.prod(extents)),
        )
        self.saved = {
            "padded": padded,
            "kernel": kernel,
            "extents": extents,
            "input_shape": x.shape,
            "has_bias": bias is not None,
        }
        return out

    @staticmethod
    def _windows(padded, kernel_shape, stride, extents):
        for a in range(kernel_shape[0]):
            for b in range(kernel_shape[1]):
                for d in range(kernel_shape[2]):
                    index = (slice(None), slice(None)) + tuple(
                        slice(start, start + step * (extent - 1) + 1, step)
                        for start, step, extent in zip((a, b, d), stride, extents)
                    )
                    yield (a, b, d), index if padded is None else padded[index]

    def backward(self, grad):
        padded, kernel = self.saved["padded"], self.saved["kernel"]
        stride = self.attrs.get("stride", (1, 1, 1))
        padding = self.attrs.get("padding", (0, 0, 0))
        extents = self.saved["extents"]

        d_kernel = np.zeros_like(kernel)
        d_padded = np.zeros_like(padded)
        for offset, window in self._windows(padded, kernel.shape[2:], stride, extents):
            index = (slice(None), slice(None)) + offset
            d_kernel[index] = np.tensordot(grad, window, axes=([0, 2, 3, 4], [0, 2, 3, 4]))
        for offset, index in self._windows(None, kernel.shape[2:], stride, extents):
            contribution = np.tensordot(kernel[(slice(None), slice(None)) + offset], grad, axes=([0], [1]))
            d_padded[index] += contribution.transpose(1, 0, 2, 3, 4)

        length, height, width = self.saved["input_shape"][2:]
        p_t, p_y, p_x = padding
        d_x = d_padded[:, :, p_t : p_t + length, p_y : p_y + height, p_x : p_x + width]
        d_bias = grad.sum(axis=(0, 2, 3, 4)) if self.saved["has_bias"] else None
        return (np.ascontiguousarray(d_x), d_kernel, d_bias)


class BatchNorm(Function):
    """
    Per-channel batch normalization over (N, L, H, W).

    attrs: running (RunningStats), mode ("train" | "eval"),
    update_stats (bool), momentum, eps
    """

    name = "batchnorm"

    def forward(self, x, gamma, beta):
        running = self.attrs["running"]
        mode = self.attrs.get("mode", "train")
        eps = self.attrs.get("eps", 1e-5)
        axes = (0, 2, 3, 4)
        shape = (1, -1, 1, 1, 1)

        if mode == "train":
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            if self.attrs.get("update_stats", True):
                running.update(mean, var, self.attrs.get("momentum", 0.9))
        elif mode == "eval":
            mean, var = running.mean, running.var
        else:
            raise ValueError(f"unknown batchnorm mode '{mode}'")

        inv_std = 1.0 / np.sqrt(var + eps)
        normalized = (x - mean.reshape(shape)) * inv_std.reshape(shape)
        self.saved = {"normalized": normalized, "inv_std": inv_std, "gamma": gamma, "mode": mode}
        return gamma.reshape(shape) * normalized + beta.reshape(shape)

    def backward(self, grad):
        normalized = self.saved["normalized"]
        inv_std, gamma = self.saved["inv_std"], self.saved["gamma"]
        axes = (0, 2, 3, 4)
        shape = (1, -1, 1, 1, 1)

        d_gamma = (grad * normalized).sum(axis=axes)
        d_beta = grad.sum(axis=axes)
        d_normalized = grad * gamma.reshape(shape)
        if self.saved["mode"] == "eval":
            return (d_normalized * inv_std.reshape(shape), d_gamma, d_beta)

        count = grad.size // grad.shape[1]
        d_x = (
            count * d_normalized
            - d_normalized.sum(axis=axes).reshape(shape)
            - normalized * (d_normalized * normalized).sum(axis=axes).reshape(shape)
        ) * (inv_std.reshape(shape) / count)
        return (d_x, d_gamma, d_beta)


class ReLU(Function):
    name = "relu"

    def forward(self, x):
        self.saved = {"mask": x > 0}
        return np.where(self.saved["mask"], x, 0.0)

    def backward(self, grad):
        return (grad * self.saved["mask"],)


class Add(Function):
    name = "add"

    def forward(self, a, b):
        if a.shape != b.shape:
            raise ShapeError(f"add shape mismatch {a.shape} vs {b.shape}")
        return a + b

    def backward(self, grad):
        return (grad, grad)


class ConcatChannels(Function):
    name = "concat_channels"

    def forward(self, a, b):
        if a.shape[:1] + a.shape[2:] != b.shape[:1] + b.shape[2:]:
            raise ShapeError(f"concat_channels non-channel mismatch {a.shape} vs {b.shape}")
        self.saved = {"split": a.shape[1]}
        return np.concatenate([a, b], axis=1)

    def backward(self, grad):
        split = self.saved["split"]
        return (grad[:, :split], grad[:, split:])


class TemporalMaxPool3(Function):
    """Max over a 3 x 1 x 1 window, temporal stride 2, padding 1."""

    name = "temporal_maxpool3"

    def forward(self, x):
        length = x.shape[2]
        if length < 1:
            raise ShapeError("temporal max pooling needs L >= 1")
        out_length = (length - 1) // 2 + 1
        padded = np.pad(
            x, ((0, 0), (0, 0), (1, 1), (0, 0), (0, 0)), constant_values=-np.inf
        )
        candidates = np.stack(
            [padded[:, :, j : j + 2 * (out_length - 1) + 1 : 2] for j in range(3)]
        )
        winner = candidates.argmax(axis=0)
        self.saved = {"winner": winner, "padded_shape": padded.shape, "out_length": out_length}
        return np.take_along_axis(candidates, winner[None], axis=0)[0]

    def backward(self, grad):
        winner, out_length = self.saved["winner"], self.saved["out_length"]
        d_padded = np.zeros(self.saved["padded_shape"])
        for j in range(3):
            d_padded[:, :, j : j + 2 * (out_length - 1) + 1 : 2] += grad * (winner == j)
        return (d_padded[:, :, 1:-1],)


class GlobalAvgPoolLinear(Function):
    """Mean over (L, H, W) followed by a bias-free linear map."""

    name = "global_avgpool_fc"

    def forward(self, x, weight):
        if weight.shape[1] != x.shape[1]:
            raise ShapeError(f"fc expects {weight.shape[1]} channels, got {x.shape[1]}")
        pooled = x.mean(axis=(2, 3, 4))
        record(self.attrs.get("layer", "fc"), x.shape[0] * weight.shape[0] * weight.shape[1])
        self.saved = {"pooled": pooled, "weight": weight, "input_shape": x.shape}
        return pooled @ weight.T

    def backward(self, grad):
        pooled, weight = self.saved["pooled"], self.saved["weight"]
        shape = self.saved["input_shape"]
        d_pooled = grad @ weight
        d_x = np.broadcast_to(
            (d_pooled / np.prod(shape[2:]))[:, :, None, None, None], shape
        ).copy()
        return (d_x, grad.T @ pooled)


def log_softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


class SoftmaxCrossEntropy(Function):
    """Mean cross-entropy over the batch; attrs: labels (int array)."""

    name = "softmax_xent"

    def forward(self, logits):
        labels = np.asarray(self.attrs["labels"])
        if labels.min() < 0 or labels.max() >= logits.shape[1]:
            raise ShapeError(f"labels out of range for {logits.shape[1]} classes")
        log_probs = log_softmax(logits)
        rows = np.arange(logits.shape[0])
        self.saved = {"probs": np.exp(log_probs), "labels": labels}
        return np.array(-log_probs[rows, labels].mean())

    def backward(self, grad):
        probs, labels = self.saved["probs"], self.saved["labels"]
        d_logits = probs.copy()
        d_logits[np.arange(len(labels)), labels] -= 1.0
        return (d_logits * (grad / len(labels)),)


class Correlation(Function):
    """Correlation operator node; attrs: cfg (bound), layer."""

    name = "correlation"

    def forward(self, x, weights):
        self.saved = {"x": x, "weights": weights}
        return correlate_forward(x, weights, self.attrs["cfg"], self.attrs.get("layer"))

    def backward(self, grad):
        cfg = self.attrs["cfg"]
        d_x, d_weights = correlate_backward(self.saved["x"], self.saved["weights"], cfg, grad)
        return (d_x, d_weights if cfg.learnable else None)


class RunningStats:
    """Running per-channel mean and variance for batch normalization."""

    def __init__(self, channels):
        self.mean = np.zeros(channels)
        self.var = np.ones(channels)

    def update(self, mean, var, momentum):
        self.mean = momentum * self.mean + (1.0 - momentum) * mean
        self.var = momentum * self.var + (1.0 - momentum) * var
