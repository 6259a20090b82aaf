"""
Named netspecs accepted wherever a --netspec option is.

A --netspec value is either a catalog name or a path to a netspec text file.
"""

from dataclasses import replace
from pathlib import Path

from core.exceptions import ConfigError

from .builders import build_baseline, build_corrnet, build_linear_probe
from .netspec_format import read_netspec

CATALOG = {
    "corrnet-tiny": lambda: build_corrnet("tiny"),
    "r2plus1d-tiny": lambda: build_baseline("r2plus1d", "tiny"),
    "r2d-tiny": lambda: build_baseline("r2d", "tiny"),
    "corrnet-paper26": lambda: build_corrnet("paper26"),
    "r2plus1d-paper26": lambda: build_baseline("r2plus1d", "paper26"),
    "r2d-paper26": lambda: build_baseline("r2d", "paper26"),
    "corrnet-paper50": lambda: build_corrnet("paper50"),
    "corrnet-paper101": lambda: build_corrnet("paper101"),
    "corrnet-tiny-nofilter": lambda: build_corrnet("tiny", "no_filter"),
    "corrnet-tiny-nogroup": lambda: build_corrnet("tiny", "no_grouping"),
    "corrnet-tiny-concat": lambda: build_corrnet("tiny", "concat"),
    "corrnet-tiny-k1": lambda: build_corrnet("tiny", K=1),
    "corrnet-tiny-k5": lambda: build_corrnet("tiny", K=5),
    "linear-probe": build_linear_probe,
}


def resolve_netspec(value, num_classes=None):
    """
    Turn a catalog name or netspec file path into a NetSpec.

    Args:
        value: Catalog name or path
        num_classes: Optional head width override (must match the data)

    Raises:
        ConfigError: If the value is neither a catalog name nor a file
    """
    if value in CATALOG:
        spec = CATALOG[value]()
    elif Path(value).is_file():
        spec = read_netspec(value)
    else:
        raise ConfigError(f"'{value}' is neither a known netspec name nor a file")
    if num_classes is not None and num_classes != spec.num_classes:
        spec = with_num_classes(spec, num_classes)
    return spec


def with_num_classes(spec, num_classes):
    return replace(spec, num_classes=num_classes)
