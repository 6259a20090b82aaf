"""
Multi-clip evaluation.

Each video is scored by averaging the softmax of n uniformly spaced clips;
the video-level prediction is the argmax of that average.
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import ConfigError
from nn.functional import log_softmax
from synthetic.dataset import uniform_test_clips
from synthetic.storage import read_dataset

from .batches import normalize_clips
from .checkpoint import load_checkpoint

logger = logging.getLogger(__name__)

EVAL_BATCH = 32


@dataclass
class EvaluationResult:
    """
    Attributes:
        accuracy (float): Top-1 video accuracy
        n_clips (int): Clips averaged per video
        probabilities (np.ndarray): videos x classes averaged softmax
        labels (np.ndarray): Ground-truth labels
    """

    accuracy: float
    n_clips: int
    probabilities: np.ndarray
    labels: np.ndarray

    @property
    def predictions(self):
        return self.probabilities.argmax(axis=1)


def check_compatible(network, dataset):
    """
    Raises:
        ConfigError: If the head width or frame size disagrees with the data
    """
    if network.spec.num_classes != dataset.num_classes:
        raise ConfigError(
            f"{network.spec.name} predicts {network.spec.num_classes} classes, "
            f"the dataset has {dataset.num_classes}"
        )
    channels, _, height, width = dataset.clip_shape
    expected = network.spec.input
    if (channels, height, width) != (expected[0], expected[2], expected[3]):
        raise ConfigError(
            f"{network.spec.name} expects {expected[0]} x {expected[2]} x {expected[3]} frames, "
            f"the dataset holds {channels} x {height} x {width}"
        )


def clip_probabilities(network, clips):
    """Eval-mode softmax of a stack of clips, computed in fixed-size batches."""
    out = []
    for start in range(0, len(clips), EVAL_BATCH):
        logits = network.predict(normalize_clips(clips[start : start + EVAL_BATCH]))
        out.append(np.exp(log_softmax(logits)))
    return np.concatenate(out)


def evaluate_network(network, dataset, n_clips=10, clip_len=None):
    """
    Video-level top-1 accuracy of network on dataset.

    Args:
        network: Initialized Network
        dataset: Dataset from read_dataset
        n_clips: Clips per video (>= 1)
        clip_len: Frames per clip; the netspec's L when omitted

    Raises:
        ConfigError: On a class-count or frame-size mismatch, or n_clips < 1
    """
    if n_clips < 1:
        raise ConfigError(f"n_clips must be >= 1, got {n_clips}")
    check_compatible(network, dataset)
    clip_len = clip_len or network.spec.input[1]

    videos_per_chunk = max(1, EVAL_BATCH // n_clips)
    chunks = []
    for start in range(0, len(dataset), videos_per_chunk):
        samples = dataset.samples[start : start + videos_per_chunk]
        clips = np.stack(
            [clip.array for sample in samples for clip in uniform_test_clips(sample, clip_len, n_clips)]
        )
        chunks.append(clip_probabilities(network, clips).reshape(len(samples), n_clips, -1).mean(axis=1))
    probabilities = np.concatenate(chunks)
    labels = dataset.labels()
    accuracy = float((probabilities.argmax(axis=1) == labels).mean())
    return EvaluationResult(accuracy, n_clips, probabilities, labels)


def evaluate(checkpoint_path, data_path, n_clips=10):
    """Accuracy of a saved checkpoint on a dataset file."""
    network = load_checkpoint(checkpoint_path).restore_network()
    result = evaluate_network(network, read_dataset(data_path), n_clips)
    logger.info(
        f"{network.spec.name} on {data_path}: {result.accuracy:.4f} top-1 with {n_clips} clip(s)"
    )
    return result
