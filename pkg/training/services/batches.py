"""
Training batch assembly.

Batch content depends only on the order of draws from the run's Generator,
so the background-thread variant yields exactly the batches the inline one
does.
"""

import logging
import queue
import threading

import numpy as np
from django.conf import settings

from synthetic.dataset import random_canvas_crop, sample_clip

logger = logging.getLogger(__name__)

_DONE = object()


def normalize_clips(clips):
    """Subtract the dataset-wide pixel mean."""
    return np.asarray(clips, dtype=np.float64) - settings.CORRNET["DATA"]["pixel_mean"]


class BatchIterator:
    """
    One epoch of shuffled (clips, labels) batches.

    Every draw (the permutation, clip starts and crop offsets) comes from
    rng in a fixed order. The final batch may be short.

    Attributes:
        samples (list): VideoSample objects
        batch_size (int): Clips per batch
        clip_len (int): Frames per clip
        spatial_jitter (bool): Apply random_canvas_crop to each clip
        prefetch (bool): Build batches on a background thread
    """

    def __init__(self, samples, batch_size, clip_len, rng, spatial_jitter=True, prefetch=False):
        self.samples = samples
        self.batch_size = batch_size
        self.clip_len = clip_len
        self.rng = rng
        self.spatial_jitter = spatial_jitter
        self.prefetch = prefetch
        self.canvas_scale = settings.CORRNET["DATA"]["canvas_scale"]

    def __len__(self):
        return -(-len(self.samples) // self.batch_size)

    def _batches(self):
        order = self.rng.permutation(len(self.samples))
        for start in range(0, len(order), self.batch_size):
            chosen = [self.samples[i] for i in order[start : start + self.batch_size]]
            clips = []
            for sample in chosen:
                clip = sample_clip(sample, self.clip_len, jitter=True, rng=self.rng)
                if self.spatial_jitter:
                    clip = random_canvas_crop(clip, self.rng, self.canvas_scale)
                clips.append(clip.array)
            labels = np.array([sample.label for sample in chosen], dtype=np.int64)
            yield normalize_clips(np.stack(clips)), labels

    def __iter__(self):
        if not self.prefetch:
            yield from self._batches()
            return
        yield from self._prefetched()

    def _prefetched(self):
        pending = queue.Queue(maxsize=2)
        stop = threading.Event()

        def offer(item):
            while not stop.is_set():
                try:
                    pending.put(item, timeout=0.1)
                    return True
                except queue.Full:
                    continue
            return False

        def produce():
            try:
                for batch in self._batches():
                    if not offer(batch):
                        return
                offer(_DONE)
            except Exception as exc:
                logger.error(f"Batch producer failed: {exc}")
                offer(exc)

        worker = threading.Thread(target=produce, name="batch-prefetch", daemon=True)
        worker.start()
        try:
            while True:
                item = pending.get()
                if item is _DONE:
                    break
                if isinstance(item, Exception):
                    raise item
                yield item
        finally:
            stop.set()
            worker.join()
