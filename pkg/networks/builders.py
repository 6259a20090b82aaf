"""
Builders for the R2D, R(2+1)D and correlation network families.

Stage widths follow the bottleneck convention: mid = out / 4. The first
block of res3 strides spatially; the first blocks of res4 and res5 stride in
time and space. At paper scale res2 also strides spatially.
"""

from django.conf import settings

from core.exceptions import ConfigError
from correlation.config import CorrelationConfig

from .specs import (
    BOTTLENECK_2D,
    BOTTLENECK_2PLUS1D,
    CORRELATION_CONCAT,
    CORRELATION_SUM,
    STAGE_NAMES,
    BlockSpec,
    NetSpec,
    StemSpec,
)

SCALES = {
    "tiny": {
        "stem": 32,
        "corr_stem": 16,
        "widths": (32, 64, 128, 256),
        "blocks": (1, 1, 1, 1),
        "input": (3, 8, 32, 32),
        "res2_spatial_stride": 1,
        "num_classes": 8,
        "correlation": "tiny",
    },
    "paper26": {
        "stem": 64,
        "corr_stem": 32,
        "widths": (256, 512, 1024, 2048),
        "blocks": (2, 2, 2, 2),
        "input": (3, 32, 224, 224),
        "res2_spatial_stride": 2,
        "num_classes": 400,
        "correlation": "paper",
    },
}
SCALES["paper50"] = dict(SCALES["paper26"], blocks=(3, 4, 6, 3))
SCALES["paper101"] = dict(SCALES["paper26"], blocks=(3, 4, 23, 3))

CORRNET_VARIANTS = ("default", "no_filter", "no_grouping", "concat")
VARIANT_SUFFIXES = {"no_filter": "nofilter", "no_grouping": "nogroup", "concat": "concat"}
BASELINE_KINDS = ("r2d", "r2plus1d")


def _scale(scale):
    try:
        return SCALES[scale]
    except KeyError:
        raise ConfigError(f"unknown scale '{scale}', expected one of {sorted(SCALES)}")


def _stage_strides(config):
    spatial = config["res2_spatial_stride"]
    return ((1, spatial, spatial), (1, 2, 2), (2, 2, 2), (2, 2, 2))


def _residual_stage(kind, c_in, width, count, first_stride):
    blocks = []
    for index in range(count):
        stride = first_stride if index == 0 else (1, 1, 1)
        blocks.append(BlockSpec(kind, (c_in, width // 4, width), stride))
        c_in = width
    return blocks


def correlation_block(width, K, D, group_size, variant="default"):
    """
    Correlation block appended after a stage of the given width.

    The leading 1x1x1 conv reduces width to width / 4; the operator then
    forms G = (width / 4) / group_size groups, or a single group when
    grouping is removed.
    """
    mid = width // 4
    groups = 1 if variant == "no_grouping" else max(1, mid // group_size)
    kind = CORRELATION_CONCAT if variant == "concat" else CORRELATION_SUM
    cfg = CorrelationConfig(K=K, D=D, G=groups, learnable=variant != "no_filter")
    return BlockSpec(kind, (width, mid, width), (1, 1, 1), cfg)


def build_corrnet(scale="tiny", variant="default", K=None, num_classes=None):
    """
    Correlation network: R(2+1)D backbone with correlation blocks after
    res2, res3 and res4, conv1 trimmed and res2 temporal convs removed.

    Args:
        scale: tiny, paper26, paper50 or paper101
        variant: default, no_filter, no_grouping or concat
        K: Override of the neighbourhood extent (K sweep)
        num_classes: Override of the head width

    Returns:
        NetSpec
    """
    config = _scale(scale)
    if variant not in CORRNET_VARIANTS:
        raise ConfigError(f"unknown variant '{variant}', expected one of {CORRNET_VARIANTS}")
    corr = settings.CORRNET["CORRELATION"][config["correlation"]]
    K = corr["K"] if K is None else K

    stem = StemSpec(config["corr_stem"])
    c_in = stem.channels
    stages = []
    for index, (width, count, stride) in enumerate(
        zip(config["widths"], config["blocks"], _stage_strides(config))
    ):
        kind = BOTTLENECK_2D if index == 0 else BOTTLENECK_2PLUS1D
        blocks = _residual_stage(kind, c_in, width, count, stride)
        if STAGE_NAMES[index] != "res5":
            blocks.append(correlation_block(width, K, corr["D"], corr["group_size"], variant))
        stages.append(blocks)
        c_in = width

    name = f"corrnet-{scale}"
    if variant != "default":
        name = f"{name}-{VARIANT_SUFFIXES[variant]}"
    if K != corr["K"]:
        name = f"{name}-k{K}"
    return NetSpec(
        name=name,
        input=config["input"],
        stem=stem,
        stages=stages,
        corr_insertions=frozenset({"res2", "res3", "res4"}),
        num_classes=num_classes or config["num_classes"],
    )


def build_corrnet_tiny():
    """Desk-scale correlation network: stem 16, widths 32/64/128/256, K=3, D=1, g=4."""
    return build_corrnet("tiny")


def build_baseline(kind, scale="tiny", num_classes=None):
    """
    Baseline without correlation blocks.

    r2plus1d keeps the 3x1x1 temporal convs in every stage; r2d removes
    them all and max-pools in time wherever a stage strides temporally.
    """
    if kind not in BASELINE_KINDS:
        raise ConfigError(f"unknown baseline kind '{kind}', expected one of {BASELINE_KINDS}")
    config = _scale(scale)
    block_kind = BOTTLENECK_2D if kind == "r2d" else BOTTLENECK_2PLUS1D

    stem = StemSpec(config["stem"])
    c_in = stem.channels
    stages = []
    for width, count, stride in zip(config["widths"], config["blocks"], _stage_strides(config)):
        stages.append(_residual_stage(block_kind, c_in, width, count, stride))
        c_in = width
    return NetSpec(
        name=f"{kind}-{scale}",
        input=config["input"],
        stem=stem,
        stages=stages,
        num_classes=num_classes or config["num_classes"],
    )


def build_linear_probe(input_shape=(3, 8, 32, 32), num_classes=8):
    """No stem and no blocks: global average pool and fc only."""
    return NetSpec(
        name="linear-probe",
        input=input_shape,
        stem=None,
        stages=((), (), (), ()),
        num_classes=num_classes,
    )
