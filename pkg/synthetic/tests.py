"""
Tests for synthetic app.

This module covers task validation, dataset generation, clip sampling and
the SVD1 file format.
"""

import tempfile
from collections import Counter
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConfigError, DatasetFormatError
from tensors.ndtensor import NDTensor

from .config import MotionTaskConfig
from .dataset import (
    SampleMeta,
    VideoSample,
    evenly_spaced_starts,
    generate_dataset,
    random_canvas_crop,
    sample_clip,
    uniform_test_clips,
)
from .serializers import motion_config_from
from .services.renderer import box_coverage, direction_vector
from .storage import read_dataset, read_header, write_dataset


def counting_sample(frames, label=0):
    """Sample whose frame t holds the value t everywhere."""
    clip = np.broadcast_to(np.arange(frames, dtype=np.float64)[None, :, None, None], (3, frames, 2, 2))
    return VideoSample(NDTensor(clip), label, SampleMeta(seed=0))


def first_frames(clip):
    return [int(v) for v in clip.array[0, :, 0, 0]]


class MotionTaskConfigTestCase(SimpleTestCase):
    """Test task configuration invariants."""

    def test_defaults_from_settings(self):
        cfg = MotionTaskConfig.from_settings()
        self.assertEqual(cfg.clip_shape, (3, 32, 32, 32))
        self.assertEqual(cfg.num_classes, 8)

    def test_zero_speed_with_several_directions(self):
        with self.assertRaises(ConfigError):
            MotionTaskConfig(speed=0.0)

    def test_trajectory_must_stay_in_frame(self):
        with self.assertRaises(ConfigError):
            MotionTaskConfig(speed=1.0, frames=32, height=32, width=32)

    def test_unknown_direction_count(self):
        with self.assertRaises(ConfigError):
            MotionTaskConfig(num_directions=6)

    def test_texture_task_classes(self):
        cfg = MotionTaskConfig(texture_correlation="full", num_textures=5)
        self.assertEqual(cfg.num_classes, 5)

    def test_serializer_builds_config(self):
        values = MotionTaskConfig(frames=8, speed=1.0).as_dict()
        self.assertEqual(motion_config_from(values), MotionTaskConfig(frames=8, speed=1.0))

    def test_serializer_reports_invalid_fields(self):
        values = MotionTaskConfig().as_dict()
        values.update(object="triangle")
        with self.assertRaisesMessage(ConfigError, "object"):
            motion_config_from(values)

    def test_serializer_reports_cross_field_errors(self):
        values = MotionTaskConfig().as_dict()
        values.update(speed=3.0)
        with self.assertRaises(ConfigError):
            motion_config_from(values)


class RendererTestCase(SimpleTestCase):
    """Test rendering helpers."""

    def test_box_coverage_is_fractional(self):
        coverage = box_coverage(1.5, 2.0, 5)
        self.assertTrue(np.allclose(coverage, [0.0, 0.5, 1.0, 0.5, 0.0]))

    def test_direction_vectors(self):
        self.assertTrue(np.array_equal(direction_vector(0, 4), [0.0, 1.0]))
        self.assertTrue(np.array_equal(direction_vector(1, 4), [-1.0, 0.0]))
        self.assertAlmostEqual(float(np.linalg.norm(direction_vector(3, 8))), 1.0)


class GenerateDatasetTestCase(SimpleTestCase):
    """Test dataset generation."""

    def setUp(self):
        self.cfg = MotionTaskConfig(height=16, width=16, frames=8, speed=0.5)

    def test_fixed_seed_is_bitwise_reproducible(self):
        first = generate_dataset(self.cfg, 12, seed=4)
        second = generate_dataset(self.cfg, 12, seed=4)

        for a, b in zip(first, second):
            self.assertEqual(a.label, b.label)
            self.assertEqual(a.meta, b.meta)
            self.assertTrue(np.array_equal(a.clip.array, b.clip.array))

    def test_different_seeds_differ(self):
        first = generate_dataset(self.cfg, 4, seed=1)
        second = generate_dataset(self.cfg, 4, seed=2)
        self.assertFalse(np.array_equal(first[0].clip.array, second[0].clip.array))

    def test_clips_are_bounded_float32_values(self):
        for sample in generate_dataset(self.cfg, 6, seed=0):
            clip = sample.clip.array
            self.assertEqual(clip.shape, (3, 8, 16, 16))
            self.assertTrue(np.all((clip >= 0.0) & (clip <= 1.0)))
            self.assertTrue(np.array_equal(clip, clip.astype(np.float32).astype(np.float64)))

    def test_labels_are_balanced(self):
        counts = Counter(s.label for s in generate_dataset(self.cfg, 20, seed=3))
        self.assertEqual(set(counts), set(range(8)))
        self.assertTrue(all(abs(c - 20 / 8) <= 1 for c in counts.values()))

    def test_texture_is_independent_of_motion_label(self):
        samples = generate_dataset(self.cfg, 64, seed=5)
        joint = Counter((s.label, s.meta.texture_id) for s in samples)

        self.assertEqual(len(joint), 64)
        self.assertEqual(set(joint.values()), {1})

    def test_texture_task_labels_follow_texture(self):
        cfg = MotionTaskConfig(height=16, width=16, frames=8, texture_correlation="full")
        for sample in generate_dataset(cfg, 16, seed=0):
            self.assertEqual(sample.label, sample.meta.texture_id)

    def test_motion_compensation_favours_labeled_direction(self):
        cfg = MotionTaskConfig(num_directions=4, speed=1.0, height=32, width=32, frames=8)

        def residual(clip, dy, dx):
            after = clip[:, 1:, 1:-1, 1:-1]
            before = clip[:, :-1, 1 - dy : 31 - dy, 1 - dx : 31 - dx]
            return float(((after - before) ** 2).sum())

        wins = 0
        samples = generate_dataset(cfg, 100, seed=8)
        for sample in samples:
            dy, dx = (int(v) for v in direction_vector(sample.label, 4))
            clip = sample.clip.array
            wins += residual(clip, dy, dx) < residual(clip, dx, dy)
        self.assertGreaterEqual(wins, 99)

    def test_motion_compensation_over_eight_directions(self):
        cfg = MotionTaskConfig(num_directions=8, speed=1.0, height=32, width=32, frames=8)

        def residual(clip, dy, dx):
            after = clip[:, 1:, 1:-1, 1:-1]
            before = clip[:, :-1, 1 - dy : 31 - dy, 1 - dx : 31 - dx]
            return float(((after - before) ** 2).sum())

        wins = Counter()
        totals = Counter()
        for sample in generate_dataset(cfg, 160, seed=9):
            unit = direction_vector(sample.label, 8)
            dy, dx = (int(v) for v in np.round(unit / np.abs(unit).max()))
            clip = sample.clip.array
            totals[sample.label] += 1
            # (-dx, dy) is the labeled step turned a quarter
            wins[sample.label] += residual(clip, dy, dx) < residual(clip, -dx, dy)

        self.assertEqual(set(totals), set(range(8)))
        for label, total in totals.items():
            self.assertGreaterEqual(wins[label], total - 1, label)


class ClipSamplingTestCase(SimpleTestCase):
    """Test clip sampling for training and testing."""

    def test_full_length_clip_is_unchanged(self):
        sample = counting_sample(8)
        clip = sample_clip(sample, 8, jitter=False, rng=np.random.default_rng(0))
        self.assertEqual(clip, sample.clip)

    def test_short_videos_repeat_every_frame_twice(self):
        clip = sample_clip(counting_sample(4), 8, jitter=True, rng=np.random.default_rng(0))
        self.assertEqual(first_frames(clip), [0, 0, 1, 1, 2, 2, 3, 3])

    def test_very_short_videos_fill_cyclically(self):
        clip = sample_clip(counting_sample(2), 7, jitter=False, rng=np.random.default_rng(0))
        self.assertEqual(first_frames(clip), [0, 0, 1, 1, 0, 0, 1])

    def test_center_window(self):
        clip = sample_clip(counting_sample(16), 8, jitter=False, rng=np.random.default_rng(0))
        self.assertEqual(first_frames(clip)[0], 4)

    def test_jitter_start_is_uniform(self):
        sample = counting_sample(16)
        rng = np.random.default_rng(21)
        counts = Counter(first_frames(sample_clip(sample, 8, True, rng))[0] for _ in range(10000))

        self.assertEqual(set(counts), set(range(9)))
        expected = 10000 / 9
        chi_square = sum((c - expected) ** 2 / expected for c in counts.values())
        self.assertLess(chi_square, 26.12)

    def test_uniform_test_clip_starts(self):
        self.assertEqual(evenly_spaced_starts(64, 8, 10), [0, 6, 12, 18, 24, 31, 37, 43, 49, 56])
        clips = uniform_test_clips(counting_sample(16), 8, 2)
        self.assertEqual([first_frames(c)[0] for c in clips], [0, 8])

    def test_single_test_clip_is_centered(self):
        (clip,) = uniform_test_clips(counting_sample(16), 8, 1)
        self.assertEqual(first_frames(clip)[0], 4)

    def test_canvas_crop_preserves_shape_and_range(self):
        sample = generate_dataset(MotionTaskConfig(height=16, width=16, frames=8), 1, seed=0)[0]
        cropped = random_canvas_crop(sample.clip, np.random.default_rng(0), scale=1.25)

        self.assertEqual(cropped.shape, sample.clip.shape)
        self.assertGreaterEqual(cropped.array.min(), sample.clip.array.min() - 1e-6)
        self.assertLessEqual(cropped.array.max(), sample.clip.array.max() + 1e-6)

    def test_canvas_crop_of_constant_clip(self):
        clip = NDTensor(np.full((3, 2, 8, 8), 0.25))
        cropped = random_canvas_crop(clip, np.random.default_rng(3))
        self.assertTrue(np.allclose(cropped.array, 0.25, atol=1e-6))


class DatasetFormatTestCase(SimpleTestCase):
    """Test the SVD1 file format."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / "train.svd"
        self.cfg = MotionTaskConfig(height=8, width=8, frames=4, speed=0.5)
        self.samples = generate_dataset(self.cfg, 10, seed=6)

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip_is_bitwise(self):
        write_dataset(self.path, self.samples, self.cfg.num_classes)
        dataset = read_dataset(self.path)

        self.assertEqual(dataset.num_classes, 8)
        self.assertEqual(len(dataset), 10)
        for original, restored in zip(self.samples, dataset.samples):
            self.assertEqual(original.label, restored.label)
            self.assertEqual(original.meta.seed, restored.meta.seed)
            self.assertTrue(np.array_equal(original.clip.array, restored.clip.array))
        self.assertIsNone(dataset.samples[0].meta.texture_id)

    def test_header_fields(self):
        write_dataset(self.path, self.samples, 8)
        header = read_header(self.path)
        self.assertEqual((header.count, header.clip_shape), (10, (3, 4, 8, 8)))

    def test_bad_magic(self):
        write_dataset(self.path, self.samples, 8)
        data = bytearray(self.path.read_bytes())
        data[:4] = b"SVD2"
        self.path.write_bytes(bytes(data))
        with self.assertRaises(DatasetFormatError):
            read_dataset(self.path)

    def test_truncated_payload(self):
        write_dataset(self.path, self.samples, 8)
        self.path.write_bytes(self.path.read_bytes()[:-3])
        with self.assertRaises(DatasetFormatError):
            read_dataset(self.path)

    def test_label_outside_classes_rejected_on_write(self):
        with self.assertRaises(DatasetFormatError):
            write_dataset(self.path, self.samples, 2)

    def test_missing_file(self):
        with self.assertRaises(OSError):
            read_dataset(Path(self.tmp.name) / "absent.svd")
