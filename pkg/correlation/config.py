"""
Value types governing one correlation operator instance.
"""

from dataclasses import dataclass, replace

import numpy as np
from django.conf import settings

from core.exceptions import ConfigError, ShapeError
from tensors.ndtensor import NDTensor


@dataclass(frozen=True)
class CorrelationConfig:
    """
    Hyperparameters of a correlation operator.

    C_in and L stay None while the config lives in a block spec; bind() fills
    them once the block's input shape is known.

    Attributes:
        K: Odd neighbourhood extent (offsets per axis)
        D: Dilation between sampled offsets
        G: Number of channel groups
        learnable: Whether filter weights are trained (else fixed to 1)
        C_in: Input channels
        L: Clip length
    """

    K: int
    D: int = 1
    G: int = 1
    learnable: bool = True
    C_in: int = None
    L: int = None

    def __post_init__(self):
        self.clean()

    def clean(self):
        """
        Validate the operator invariants.

        Raises:
            ConfigError: If K is even or < 1, D < 1, G < 1, or C_in is not
                divisible by G
        """
        if self.K < 1 or self.K % 2 == 0:
            raise ConfigError(f"K must be odd and >= 1, got {self.K}")
        if self.D < 1:
            raise ConfigError(f"dilation D must be >= 1, got {self.D}")
        if self.G < 1:
            raise ConfigError(f"group count G must be >= 1, got {self.G}")
        if self.C_in is not None and (self.C_in < 1 or self.C_in % self.G != 0):
            raise ConfigError(
                f"C_in={self.C_in} is not divisible into G={self.G} groups"
            )
        if self.L is not None and self.L < 1:
            raise ShapeError(f"clip length L must be >= 1, got {self.L}")

    @property
    def is_bound(self):
        return self.C_in is not None and self.L is not None

    @property
    def g(self):
        """Channels per group."""
        return self.C_in // self.G

    @property
    def radius(self):
        return (self.K - 1) // 2

    @property
    def span(self):
        """Pixels covered by the dilated window along one axis."""
        return (self.K - 1) * self.D + 1

    @property
    def out_channels(self):
        return self.G * self.K * self.K

    def offsets(self):
        """Displacements (dy, dx) in output-channel order: row-major over the window."""
        steps = [(i - self.radius) * self.D for i in range(self.K)]
        return [(dy, dx) for dy in steps for dx in steps]

    def bind(self, C_in, L):
        """Copy of this config with input channels and clip length filled in."""
        return replace(self, C_in=int(C_in), L=int(L))

    def require_bound(self):
        if not self.is_bound:
            raise ConfigError("correlation config needs C_in and L before use")


@dataclass(frozen=True)
class CorrelationFilter:
    """Filter weights of shape L x C_in x K x K."""

    weights: NDTensor

    def check(self, cfg):
        expected = (cfg.L, cfg.C_in, cfg.K, cfg.K)
        if self.weights.shape != expected:
            raise ShapeError(
                f"filter shape {list(self.weights.shape)} != {list(expected)}"
            )
        if not self.weights.is_finite():
            raise ShapeError("filter holds non-finite weights")


@dataclass(frozen=True)
class CorrelationGrads:
    """Gradients of a correlate_clip call w.r.t. its input and filter."""

    d_input: NDTensor
    d_filter: NDTensor


def ones_filter(cfg):
    """All-ones filter: the fixed-weight operator."""
    cfg.require_bound()
    return CorrelationFilter(NDTensor.wrap(np.ones((cfg.L, cfg.C_in, cfg.K, cfg.K))))


def init_filter(cfg, rng, noise=None):
    """
    Initial filter: all ones plus uniform noise, or exactly ones when frozen.

    Args:
        cfg: Bound correlation config
        rng: numpy Generator
        noise: Half-width of the uniform perturbation (settings default)
    """
    cfg.require_bound()
    if not cfg.learnable:
        return ones_filter(cfg)
    if noise is None:
        noise = settings.CORRNET["CORRELATION"]["filter_init_noise"]
    shape = (cfg.L, cfg.C_in, cfg.K, cfg.K)
    return CorrelationFilter(NDTensor.wrap(1.0 + rng.uniform(-noise, noise, size=shape)))
