"""
Config layering for management commands.

Precedence, lowest first: settings defaults, JSON config file given with
--config, explicit command-line flags.
"""

import json
from pathlib import Path

from core.exceptions import ConfigError


def load_config_file(path):
    """
    Read a JSON object from a config file.

    Args:
        path: Path to a JSON file, or None

    Returns:
        dict: The decoded object (empty when path is None)

    Raises:
        ConfigError: If the file does not hold a JSON object
    """
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data


def layered_config(defaults, file_values, flag_values):
    """
    Merge defaults, config-file values and explicit flags.

    Flags whose value is None were not given on the command line and do not
    override anything.
    """
    merged = dict(defaults)
    merged.update(file_values)
    merged.update({key: value for key, value in flag_values.items() if value is not None})
    return merged


def validated(serializer_class, values, label):
    """
    Run a DRF serializer over values and return serializer.save().

    Raises:
        ConfigError: With every field error flattened onto one line
    """
    serializer = serializer_class(data=values)
    if not serializer.is_valid():
        problems = "; ".join(
            f"{field}: {' '.join(str(m) for m in messages)}"
            for field, messages in serializer.errors.items()
        )
        raise ConfigError(f"invalid {label}: {problems}")
    return serializer.save()
