"""
Training checkpoints.

A checkpoint is an .npz archive holding param/<name>, momentum/<name> and
buffer/<name> arrays plus a "meta" JSON string with the version tag, the
netspec text, the epoch counter, the rng state, the run config and the
dataset's class count.
"""

import json
import logging
import os
import zipfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from core.exceptions import ConfigError, DatasetFormatError
from networks.assembly import Network
from networks.netspec_format import parse_netspec, serialize_netspec

logger = logging.getLogger(__name__)

VERSION = "corrnet-ckpt v1"
SECTIONS = ("param", "momentum", "buffer")


@dataclass
class Checkpoint:
    """
    Everything needed to rebuild a network and continue training it.

    Attributes:
        netspec_text (str): netspec v1 text of the network
        params (dict): Registry name -> array
        momentum (dict): Registry name -> momentum buffer
        buffers (dict): Batchnorm running statistics
        epoch (int): Completed epochs
        rng_state (dict): numpy bit-generator state after the last epoch
        config (dict): TrainConfig fields of the run
        num_classes (int): Class count of the dataset trained on
    """

    netspec_text: str
    params: dict
    momentum: dict = field(default_factory=dict)
    buffers: dict = field(default_factory=dict)
    epoch: int = 0
    rng_state: dict = None
    config: dict = field(default_factory=dict)
    num_classes: int = 0
    version: str = VERSION

    @property
    def spec(self):
        return parse_netspec(self.netspec_text)

    @classmethod
    def capture(cls, network, optimizer=None, epoch=0, rng=None, config=None):
        return cls(
            netspec_text=serialize_netspec(network.spec),
            params={name: p.value.copy() for name, p in network.registry.items()},
            momentum={} if optimizer is None else {k: v.copy() for k, v in optimizer.buffers.items()},
            buffers={name: value.copy() for name, value in network.buffers().items()},
            epoch=epoch,
            rng_state=None if rng is None else rng.bit_generator.state,
            config=dict(config or {}),
            num_classes=network.spec.num_classes,
        )

    def restore_network(self):
        """
        Network rebuilt from the netspec text with the saved weights loaded.

        Raises:
            ConfigError: If the saved parameter table does not match the netspec
        """
        network = Network(self.spec).initialize(0)
        if set(self.params) != set(network.registry):
            difference = sorted(set(self.params) ^ set(network.registry))
            raise ConfigError(f"checkpoint parameters do not match its netspec: {difference[:3]}")
        for name, parameter in network.registry.items():
            parameter.tensor.assign_(self.params[name])
        network.load_buffers(self.buffers)
        return network

    def restore_rng(self):
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng_state
        return rng


def save_checkpoint(checkpoint, path):
    """Write checkpoint to path, replacing any previous file atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "version": checkpoint.version,
        "netspec": checkpoint.netspec_text,
        "epoch": checkpoint.epoch,
        "rng_state": checkpoint.rng_state,
        "config": checkpoint.config,
        "num_classes": checkpoint.num_classes,
    }
    arrays = {"meta": np.array(json.dumps(meta, sort_keys=True))}
    for section, table in zip(SECTIONS, (checkpoint.params, checkpoint.momentum, checkpoint.buffers)):
        arrays.update({f"{section}/{name}": value for name, value in table.items()})

    partial = path.with_name(path.name + ".partial")
    with open(partial, "wb") as handle:
        np.savez(handle, **arrays)
    os.replace(partial, path)
    logger.info(f"Saved checkpoint for epoch {checkpoint.epoch} to {path}")
    return path


def load_checkpoint(path):
    """
    Read a checkpoint written by save_checkpoint.

    Raises:
        DatasetFormatError: If the file is not a checkpoint archive or
            carries another version tag
        OSError: If the file cannot be opened
    """
    try:
        archive = np.load(path, allow_pickle=False)
    except (ValueError, zipfile.BadZipFile) as exc:
        raise DatasetFormatError(f"{path}: not a checkpoint archive ({exc})") from exc
    if not hasattr(archive, "files"):
        raise DatasetFormatError(f"{path}: holds a bare array, not a checkpoint archive")
    with archive:
        if "meta" not in archive.files:
            raise DatasetFormatError(f"{path}: checkpoint has no meta record")
        meta = json.loads(str(archive["meta"]))
        if meta.get("version") != VERSION:
            raise DatasetFormatError(f"{path}: unsupported checkpoint version {meta.get('version')!r}")
        tables = {section: {} for section in SECTIONS}
        for key in archive.files:
            section, _, name = key.partition("/")
            if section in tables:
                tables[section][name] = archive[key]
    return Checkpoint(
        netspec_text=meta["netspec"],
        params=tables["param"],
        momentum=tables["momentum"],
        buffers=tables["buffer"],
        epoch=meta["epoch"],
        rng_state=meta["rng_state"],
        config=meta["config"],
        num_classes=meta["num_classes"],
        version=meta["version"],
    )
