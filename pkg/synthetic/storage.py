"""
SVD1 dataset files.

Layout (little-endian): magic b"SVD1", then u32 n, C, L_full, H, W,
num_classes, then n records of u32 label, u64 seed and C * L_full * H * W
float32 pixels. Pixels are widened to float64 on read.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from core.exceptions import ConfigError, DatasetFormatError
from tensors.ndtensor import NDTensor

from .dataset import SampleMeta, VideoSample, generate_dataset, sample_seed

logger = logging.getLogger(__name__)

MAGIC = b"SVD1"
HEADER_FIELDS = 6
HEADER_BYTES = len(MAGIC) + 4 * HEADER_FIELDS


@dataclass(frozen=True)
class DatasetHeader:
    count: int
    clip_shape: tuple
    num_classes: int

    @property
    def record_dtype(self):
        return np.dtype([("label", "<u4"), ("seed", "<u8"), ("pixels", "<f4", self.clip_shape)])


@dataclass
class Dataset:
    """Samples read from (or about to be written to) one SVD1 file."""

    samples: list
    num_classes: int

    def __len__(self):
        return len(self.samples)

    @property
    def clip_shape(self):
        return self.samples[0].clip.shape

    def labels(self):
        return np.array([s.label for s in self.samples], dtype=np.int64)


def write_dataset(path, samples, num_classes):
    """
    Write samples to path.

    Raises:
        DatasetFormatError: If samples are empty, differ in shape, or carry
            labels outside [0, num_classes)
    """
    if not samples:
        raise DatasetFormatError("refusing to write an empty dataset")
    header = DatasetHeader(len(samples), tuple(samples[0].clip.shape), num_classes)
    records = np.empty(header.count, dtype=header.record_dtype)
    for i, sample in enumerate(samples):
        if sample.clip.shape != header.clip_shape:
            raise DatasetFormatError(f"sample {i} has shape {sample.clip.shape}, expected {header.clip_shape}")
        if not 0 <= sample.label < num_classes:
            raise DatasetFormatError(f"sample {i} label {sample.label} outside [0, {num_classes})")
        records[i] = (sample.label, sample.meta.seed, sample.clip.array.astype(np.float32))

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(np.array((header.count,) + header.clip_shape + (num_classes,), dtype="<u4").tobytes())
        handle.write(records.tobytes())
    logger.info(f"Wrote {header.count} samples to {path}")
    return path


def read_header(path):
    """
    Parse and check the header of an SVD1 file.

    Raises:
        DatasetFormatError: On a bad magic, a short header or impossible fields
    """
    with open(path, "rb") as handle:
        head = handle.read(HEADER_BYTES)
    if len(head) < HEADER_BYTES:
        raise DatasetFormatError(f"{path}: truncated header ({len(head)} bytes)")
    if head[: len(MAGIC)] != MAGIC:
        raise DatasetFormatError(f"{path}: bad magic {head[:len(MAGIC)]!r}, expected {MAGIC!r}")
    count, channels, frames, height, width, num_classes = (
        int(v) for v in np.frombuffer(head[len(MAGIC) :], dtype="<u4")
    )
    if min(channels, frames, height, width, num_classes) < 1:
        raise DatasetFormatError(f"{path}: header holds a zero extent")
    return DatasetHeader(count, (channels, frames, height, width), num_classes)


def read_dataset(path):
    """
    Load every sample of an SVD1 file.

    Raises:
        DatasetFormatError: If the header is bad, the payload size disagrees
            with it, or a label is out of range
        OSError: If the file cannot be opened
    """
    header = read_header(path)
    payload = Path(path).stat().st_size - HEADER_BYTES
    expected = header.count * header.record_dtype.itemsize
    if payload != expected:
        raise DatasetFormatError(f"{path}: payload is {payload} bytes, header implies {expected}")

    records = np.fromfile(path, dtype=header.record_dtype, count=header.count, offset=HEADER_BYTES)
    samples = []
    for i, record in enumerate(records):
        label = int(record["label"])
        if label >= header.num_classes:
            raise DatasetFormatError(f"{path}: sample {i} label {label} >= {header.num_classes}")
        samples.append(
            VideoSample(
                clip=NDTensor.wrap(record["pixels"].astype(np.float64)),
                label=label,
                meta=SampleMeta(seed=int(record["seed"])),
            )
        )
    logger.info(f"Read {len(samples)} samples from {path}")
    return Dataset(samples, header.num_classes)


def test_split_path(path):
    """Sibling file holding the test split of a training dataset: x.svd -> x.test.svd."""
    path = Path(path)
    return path.with_name(f"{path.stem}.test{path.suffix or '.svd'}")


test_split_path.__test__ = False  # not a pytest test despite the name


def write_splits(cfg, path, n_train, n_test, seed):
    """
    Generate and write a training file at path and its test split beside it.

    The test split uses a seed derived from (and distinct from) seed.

    Returns:
        tuple: (train path, test path)
    """
    if n_train < 1 or n_test < 1:
        raise ConfigError(f"both splits need samples, got {n_train} train and {n_test} test")
    test_path = test_split_path(path)
    write_dataset(path, generate_dataset(cfg, n_train, seed), cfg.num_classes)
    write_dataset(test_path, generate_dataset(cfg, n_test, sample_seed(seed, 1 << 32)), cfg.num_classes)
    return Path(path), test_path
