"""
Declarative network descriptions.

A NetSpec is a stem, four residual stages (res2..res5) each holding a list
of BlockSpecs, the set of stages that received a correlation block, and a
classifier head.
"""

from dataclasses import dataclass, field

from core.exceptions import ConfigError
from correlation.config import CorrelationConfig

STAGE_NAMES = ("res2", "res3", "res4", "res5")
CORRELATION_STAGES = frozenset({"res2", "res3", "res4"})

BOTTLENECK_2PLUS1D = "bottleneck_2plus1d"
BOTTLENECK_2D = "bottleneck_2d"
CORRELATION_SUM = "correlation_sum"
CORRELATION_CONCAT = "correlation_concat"

RESIDUAL_KINDS = (BOTTLENECK_2PLUS1D, BOTTLENECK_2D)
CORRELATION_KINDS = (CORRELATION_SUM, CORRELATION_CONCAT)
BLOCK_KINDS = RESIDUAL_KINDS + CORRELATION_KINDS


def strided_length(length, stride):
    """Extent after a stride-s layer with "same" padding."""
    return (length - 1) // stride + 1


@dataclass(frozen=True)
class BlockSpec:
    """
    One block of a stage.

    Attributes:
        kind: One of BLOCK_KINDS
        channels: (in, mid, out)
        stride: (s_t, s_y, s_x)
        corr_cfg: Unbound CorrelationConfig for correlation kinds
    """

    kind: str
    channels: tuple
    stride: tuple = (1, 1, 1)
    corr_cfg: CorrelationConfig = None

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(int(c) for c in self.channels))
        object.__setattr__(self, "stride", tuple(int(s) for s in self.stride))
        self.clean()

    def clean(self):
        """
        Validate the block invariants.

        Raises:
            ConfigError: On unknown kinds, missing or inconsistent
                correlation configs, or impossible channel arithmetic
        """
        if self.kind not in BLOCK_KINDS:
            raise ConfigError(f"unknown block kind '{self.kind}'")
        if len(self.channels) != 3 or min(self.channels) < 1:
            raise ConfigError(f"channels must be three positive counts, got {self.channels}")
        if len(self.stride) != 3 or min(self.stride) < 1:
            raise ConfigError(f"stride must be three positive steps, got {self.stride}")

        if not self.is_correlation:
            if self.corr_cfg is not None:
                raise ConfigError(f"{self.kind} blocks take no correlation config")
            return

        if self.corr_cfg is None:
            raise ConfigError(f"{self.kind} blocks require a correlation config")
        c_in, mid, c_out = self.channels
        if c_in != c_out:
            raise ConfigError("correlation blocks must restore their input channel count")
        if self.stride != (1, 1, 1):
            raise ConfigError("correlation blocks do not stride")
        if mid % self.corr_cfg.G != 0:
            raise ConfigError(f"mid channels {mid} not divisible by G={self.corr_cfg.G}")
        if self.kind == CORRELATION_CONCAT and self.pointwise_channels < 1:
            raise ConfigError(
                f"correlation branch yields {self.corr_cfg.out_channels} channels, "
                f"leaving none of {c_out} for the pointwise branch"
            )

    @property
    def is_correlation(self):
        return self.kind in CORRELATION_KINDS

    @property
    def has_projection(self):
        c_in, _, c_out = self.channels
        return not self.is_correlation and (c_in != c_out or self.stride != (1, 1, 1))

    @property
    def pointwise_channels(self):
        """Width of the 1x1x1 branch of a correlation-concat block."""
        return self.channels[2] - self.corr_cfg.out_channels


@dataclass(frozen=True)
class StemSpec:
    channels: int
    kernel: tuple = (1, 7, 7)
    stride: tuple = (1, 2, 2)


@dataclass(frozen=True)
class NetSpec:
    """
    A whole network.

    Attributes:
        name: Catalog or user name
        input: (C, L, H, W) of one clip
        stem: StemSpec or None (no stem)
        stages: Four tuples of BlockSpec, res2..res5
        corr_insertions: Stage names that received a correlation block
        num_classes: Width of the classifier head
    """

    name: str
    input: tuple
    stem: StemSpec
    stages: tuple
    corr_insertions: frozenset = field(default_factory=frozenset)
    num_classes: int = 8

    def __post_init__(self):
        object.__setattr__(self, "input", tuple(int(v) for v in self.input))
        object.__setattr__(self, "stages", tuple(tuple(blocks) for blocks in self.stages))
        object.__setattr__(self, "corr_insertions", frozenset(self.corr_insertions))
        self.clean()

    def clean(self):
        """
        Validate the spec invariants.

        Raises:
            ConfigError: If insertions name res5 or unknown stages, correlation
                blocks sit outside an inserted stage or before its residual
                blocks, channel counts do not chain, or temporal strides do
                not give L, L, L/2, L/4 at res2..res5
        """
        if len(self.input) != 4 or min(self.input) < 1:
            raise ConfigError(f"input must be C, L, H, W extents, got {self.input}")
        if len(self.stages) != len(STAGE_NAMES):
            raise ConfigError(f"expected {len(STAGE_NAMES)} stages, got {len(self.stages)}")
        if self.num_classes < 1:
            raise ConfigError("num_classes must be >= 1")
        if not self.corr_insertions <= CORRELATION_STAGES:
            extra = sorted(self.corr_insertions - CORRELATION_STAGES)
            raise ConfigError(f"correlation blocks may only follow res2..res4, got {extra}")

        channels = self.stem.channels if self.stem is not None else self.input[0]
        clip_length = self.input[1]
        if self.stem is not None:
            clip_length = strided_length(clip_length, self.stem.stride[0])
        length = clip_length
        expected_lengths = {
            "res2": clip_length,
            "res3": clip_length,
            "res4": strided_length(clip_length, 2),
            "res5": strided_length(clip_length, 4),
        }
        for stage_name, blocks in zip(STAGE_NAMES, self.stages):
            seen_correlation = False
            for block in blocks:
                if block.channels[0] != channels:
                    raise ConfigError(
                        f"{stage_name}: block expects {block.channels[0]} input channels, "
                        f"previous layer gives {channels}"
                    )
                if block.is_correlation:
                    if stage_name not in self.corr_insertions:
                        raise ConfigError(f"{stage_name} holds a correlation block but is not listed")
                    seen_correlation = True
                elif seen_correlation:
                    raise ConfigError(f"{stage_name}: correlation blocks must follow the residual blocks")
                channels = block.channels[2]
                length = strided_length(length, block.stride[0])
            if stage_name in self.corr_insertions and not seen_correlation:
                raise ConfigError(f"{stage_name} is listed for correlation but holds no correlation block")
            if blocks and length != expected_lengths[stage_name]:
                raise ConfigError(
                    f"{stage_name} outputs L={length}, expected {expected_lengths[stage_name]}"
                )

    def stage(self, name):
        return self.stages[STAGE_NAMES.index(name)]

    @property
    def head_channels(self):
        for blocks in reversed(self.stages):
            if blocks:
                return blocks[-1].channels[2]
        return self.stem.channels if self.stem is not None else self.input[0]

    def block_counts(self):
        """Residual block count per stage (correlation blocks excluded)."""
        return [sum(1 for b in blocks if not b.is_correlation) for blocks in self.stages]
