"""
Synthetic video samples, dataset generation and clip sampling.
"""

import logging
from dataclasses import dataclass

import numpy as np
from PIL import Image

from core.exceptions import ShapeError
from tensors.ndtensor import NDTensor

from .services.renderer import VideoRenderer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleMeta:
    """
    Provenance of one sample.

    motion and texture_id are known for freshly generated samples and None
    for samples read back from a dataset file.
    """

    seed: int
    motion: tuple = None
    texture_id: int = None


@dataclass(frozen=True)
class VideoSample:
    """A full-length clip (3 x L_full x H x W, values in [0, 1]) and its label."""

    clip: NDTensor
    label: int
    meta: SampleMeta

    def __post_init__(self):
        if len(self.clip.shape) != 4:
            raise ShapeError(f"clip must be C x L x H x W, got {list(self.clip.shape)}")
        if self.label < 0:
            raise ShapeError(f"label must be non-negative, got {self.label}")

    @property
    def frames(self):
        return self.clip.shape[1]


def sample_seed(seed, index):
    """64-bit seed of sample index, independent of every other sample."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])


def balanced_assignment(n, num_labels, num_other, rng):
    """
    Label and second factor for n samples.

    Walks label fastest and the other factor once per full label cycle, so
    every (label, other) pair appears equally often when n is a multiple of
    num_labels * num_other; the order is then shuffled.
    """
    index = np.arange(n)
    labels = index % num_labels
    other = (index // num_labels) % num_other
    order = rng.permutation(n)
    return labels[order], other[order]


def generate_dataset(cfg, n, seed):
    """
    n samples of the task described by cfg.

    Deterministic for a fixed seed; each sample is rendered from its own
    derived seed so samples can be generated independently.

    Returns:
        list: VideoSample
    """
    renderer = VideoRenderer(cfg)
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    if cfg.texture_correlation == "none":
        labels, textures = balanced_assignment(n, cfg.num_directions, cfg.num_textures, rng)
        directions = labels
    else:
        labels, directions = balanced_assignment(n, cfg.num_textures, cfg.num_directions, rng)
        textures = labels

    samples = []
    for index in range(n):
        seed_i = sample_seed(seed, index)
        direction, texture_id = int(directions[index]), int(textures[index])
        clip = renderer.render(direction, texture_id, np.random.default_rng(seed_i))
        # Stored as float32 on disk; keep the in-memory copy identical
        clip = clip.astype(np.float32).astype(np.float64)
        samples.append(
            VideoSample(
                clip=NDTensor.wrap(clip),
                label=int(labels[index]),
                meta=SampleMeta(seed=seed_i, motion=(direction, cfg.speed), texture_id=texture_id),
            )
        )
    logger.info(f"Generated {n} samples ({cfg.texture_correlation} texture correlation, seed {seed})")
    return samples


def _frame_pool(v, length):
    """Frame indices available for sampling, after repetition for short videos."""
    frames = np.arange(v.frames)
    if v.frames >= length:
        return frames
    frames = np.repeat(frames, 2)
    if len(frames) < length:
        frames = frames[np.arange(length) % len(frames)]
    return frames


def _window(v, pool, start, length):
    return NDTensor.wrap(v.clip.array[:, pool[start : start + length]])


def sample_clip(v, length, jitter, rng):
    """
    Clip of length frames.

    Short videos have every frame repeated twice (then cyclically) first.
    jitter picks a uniform random start; otherwise the window is centered.

    Returns:
        NDTensor: 3 x length x H x W
    """
    if length < 1:
        raise ShapeError(f"clip length must be >= 1, got {length}")
    pool = _frame_pool(v, length)
    span = len(pool) - length
    start = int(rng.integers(0, span + 1)) if jitter else span // 2
    return _window(v, pool, start, length)


def evenly_spaced_starts(available, length, n_clips):
    """Evenly spaced starts floor(i * (available - length) / (n - 1)); centered for n = 1."""
    span = available - length
    if n_clips == 1:
        return [span // 2]
    return [i * span // (n_clips - 1) for i in range(n_clips)]


def uniform_test_clips(v, length, n_clips):
    """n_clips deterministic clips spread evenly over the video."""
    if n_clips < 1:
        raise ShapeError(f"n_clips must be >= 1, got {n_clips}")
    pool = _frame_pool(v, length)
    return [_window(v, pool, start, length) for start in evenly_spaced_starts(len(pool), length, n_clips)]


def random_canvas_crop(clip, rng, scale=1.25):
    """
    Resize every frame to a scale-times larger canvas and crop the original
    extent back out at one random offset shared by all frames.
    """
    channels, length, height, width = clip.shape
    canvas_h, canvas_w = int(round(height * scale)), int(round(width * scale))
    top = int(rng.integers(0, canvas_h - height + 1))
    left = int(rng.integers(0, canvas_w - width + 1))

    out = np.empty(clip.shape)
    source = clip.array.astype(np.float32)
    for c in range(channels):
        for t in range(length):
            image = Image.fromarray(source[c, t])
            canvas = np.asarray(image.resize((canvas_w, canvas_h), Image.Resampling.BILINEAR))
            out[c, t] = canvas[top : top + height, left : left + width]
    return NDTensor.wrap(out)
