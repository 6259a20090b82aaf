"""
Tests for training app.

This module covers the learning-rate schedule, run configuration, the SGD
optimizer, checkpoints, batch assembly, multi-clip evaluation, the
gradient-check harness, benchmarking and filter inspection. Whole training
runs live in the integration tests under tests/.
"""

import tempfile
from collections import OrderedDict
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase
from PIL import Image

from core.exceptions import ConfigError, DatasetFormatError, NumericError
from correlation.config import CorrelationConfig
from networks.assembly import Network
from networks.builders import build_linear_probe
from nn.functional import ReLU
from nn.tape import Parameter, Tape, Variable
from synthetic.config import MotionTaskConfig
from synthetic.dataset import SampleMeta, VideoSample, generate_dataset, sample_clip, uniform_test_clips
from synthetic.storage import Dataset
from tensors.ndtensor import NDTensor

from .config import TrainConfig
from .serializers import evaluation_request_from, train_config_from
from .services.batches import BatchIterator, normalize_clips
from .services.bench import bench
from .services.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .services.evaluation import clip_probabilities, evaluate_network
from .services.filters import argmax_offset, dump_filters, read_grids
from .services.gradcheck import gradcheck, require_passing, routing_signature
from .services.optimizer import SGD, first_non_finite
from .services.plots import write_gnuplot_script
from .services.schedule import lr_at


def probe_network(input_shape=(3, 2, 4, 4), num_classes=4, seed=0):
    return Network(build_linear_probe(input_shape, num_classes)).initialize(seed)


def random_dataset(n, clip_shape=(3, 6, 4, 4), num_classes=4, seed=0):
    rng = np.random.default_rng(seed)
    samples = [
        VideoSample(
            clip=NDTensor.wrap(rng.uniform(0.0, 1.0, clip_shape)),
            label=i % num_classes,
            meta=SampleMeta(seed=i),
        )
        for i in range(n)
    ]
    return Dataset(samples, num_classes)


class LrScheduleTestCase(SimpleTestCase):
    """Test the warm-up plus cosine schedule."""

    def test_end_of_warmup_is_peak(self):
        self.assertEqual(lr_at(10, 60, 10, 0.05), 0.05)

    def test_final_step_is_zero(self):
        self.assertAlmostEqual(lr_at(60, 60, 10, 0.05), 0.0, places=15)

    def test_cosine_midpoint_is_half_peak(self):
        self.assertAlmostEqual(lr_at(35, 60, 10, 0.05), 0.025, places=15)

    def test_warmup_is_linear_from_zero(self):
        self.assertEqual(lr_at(0, 60, 10, 0.05), 0.0)
        self.assertAlmostEqual(lr_at(5, 60, 10, 0.05), 0.025, places=15)

    def test_continuous_at_junction_and_monotone_after(self):
        total, warmup = 500, 50
        values = [lr_at(step, total, warmup, 0.1) for step in range(warmup, total + 1)]
        self.assertTrue(all(a >= b for a, b in zip(values, values[1:])))
        fine = [lr_at(step, 10**6, 10**5, 1.0) for step in (10**5 - 1, 10**5)]
        self.assertAlmostEqual(fine[0], fine[1], places=4)

    def test_no_warmup_starts_at_peak(self):
        self.assertEqual(lr_at(0, 20, 0, 0.1), 0.1)

    def test_step_out_of_range(self):
        with self.assertRaises(ConfigError):
            lr_at(61, 60, 10, 0.05)
        with self.assertRaises(ConfigError):
            lr_at(-1, 60, 10, 0.05)


class TrainConfigTestCase(SimpleTestCase):
    """Test run configuration invariants and serializer validation."""

    def setUp(self):
        self.values = dict(TrainConfig.defaults(), netspec="corrnet-tiny", data="runs/motion.svd")

    def test_defaults_come_from_settings(self):
        cfg = train_config_from(self.values)
        self.assertEqual(cfg.epochs, 60)
        self.assertEqual(cfg.warmup_epochs, 10)
        self.assertEqual(cfg.lr_max, 0.05)
        self.assertEqual(cfg.batch_size, 16)

    def test_warmup_must_end_before_training(self):
        with self.assertRaises(ConfigError):
            TrainConfig(netspec="x", data="y", epochs=5, warmup_epochs=5)
        self.values.update(epochs=3, warmup_epochs=4)
        with self.assertRaises(ConfigError) as caught:
            train_config_from(self.values)
        self.assertIn("warmup_epochs", str(caught.exception))

    def test_momentum_below_one(self):
        with self.assertRaises(ConfigError):
            TrainConfig(netspec="x", data="y", momentum=1.0)

    def test_zero_learning_rate_allowed(self):
        self.assertEqual(TrainConfig(netspec="x", data="y", lr_max=0.0).lr_max, 0.0)

    def test_serializer_reports_bad_fields(self):
        self.values["batch_size"] = 0
        with self.assertRaises(ConfigError) as caught:
            train_config_from(self.values)
        self.assertIn("batch_size", str(caught.exception))

    def test_missing_netspec(self):
        del self.values["netspec"]
        with self.assertRaises(ConfigError):
            train_config_from(self.values)

    def test_unknown_keys_are_ignored(self):
        self.values["comment"] = "desk run"
        self.assertEqual(train_config_from(self.values).netspec, "corrnet-tiny")

    def test_evaluation_request_needs_a_clip(self):
        with self.assertRaises(ConfigError):
            evaluation_request_from({"checkpoint": "a.npz", "data": "b.svd", "clips": 0})

    def test_evaluation_request_carries_only_used_fields(self):
        request = evaluation_request_from({"checkpoint": "a.npz", "data": "b.svd", "clips": 4, "clip_len": 8})
        self.assertEqual(request, {"checkpoint": "a.npz", "data": "b.svd", "clips": 4})


class SGDTestCase(SimpleTestCase):
    """Test the momentum update and the non-finite guard."""

    def setUp(self):
        self.weight = Parameter("conv.weight", np.array([1.0, -2.0]))
        self.gamma = Parameter("bn.gamma", np.array([1.0]), decay=False)
        self.registry = OrderedDict([("conv.weight", self.weight), ("bn.gamma", self.gamma)])

    def test_momentum_and_decay(self):
        sgd = SGD(self.registry, momentum=0.5, weight_decay=0.1)
        grads = {"conv.weight": np.array([1.0, 1.0]), "bn.gamma": np.array([2.0])}
        sgd.step(grads, lr=0.1)
        # v = g + 0.1 w
        np.testing.assert_allclose(self.weight.value, [1.0 - 0.1 * 1.1, -2.0 - 0.1 * 0.8])
        np.testing.assert_allclose(self.gamma.value, [1.0 - 0.2])
        w = self.weight.value.copy()
        sgd.step(grads, lr=0.1)
        velocity = 0.5 * np.array([1.1, 0.8]) + np.array([1.0, 1.0]) + 0.1 * w
        np.testing.assert_allclose(self.weight.value, w - 0.1 * velocity)
        np.testing.assert_allclose(sgd.buffers["bn.gamma"], [0.5 * 2.0 + 2.0])

    def test_zero_learning_rate_leaves_parameters(self):
        sgd = SGD(self.registry, momentum=0.9, weight_decay=1e-4)
        for _ in range(3):
            sgd.step({"conv.weight": np.array([3.0, -1.0]), "bn.gamma": np.array([0.5])}, lr=0.0)
        np.testing.assert_array_equal(self.weight.value, [1.0, -2.0])
        np.testing.assert_array_equal(self.gamma.value, [1.0])

    def test_non_finite_gradient_aborts_before_update(self):
        sgd = SGD(self.registry)
        grads = {"conv.weight": np.array([1.0, 1.0]), "bn.gamma": np.array([np.nan])}
        with self.assertRaises(NumericError) as caught:
            sgd.step(grads, lr=0.1)
        self.assertIn("bn.gamma", str(caught.exception))
        np.testing.assert_array_equal(self.weight.value, [1.0, -2.0])

    def test_non_finite_loss_is_named_first(self):
        grads = {"conv.weight": np.array([np.inf, 0.0])}
        self.assertEqual(first_non_finite(float("nan"), grads), "loss")
        self.assertEqual(first_non_finite(1.0, grads), "conv.weight.grad")
        self.assertIsNone(first_non_finite(1.0, {"conv.weight": np.zeros(2)}))

    def test_buffer_mismatch(self):
        sgd = SGD(self.registry)
        with self.assertRaises(ConfigError):
            sgd.load_buffers({"conv.weight": np.zeros(2)})


class CheckpointTestCase(SimpleTestCase):
    """Test the .npz checkpoint archive."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = Path(self.tmp.name) / "checkpoint.npz"
        self.network = probe_network(seed=3)
        self.optimizer = SGD(self.network.registry)
        self.optimizer.buffers["fc.weight"] += 0.25
        self.rng = np.random.default_rng(5)
        self.rng.integers(100, size=7)

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip_is_bitwise(self):
        save_checkpoint(
            Checkpoint.capture(self.network, self.optimizer, epoch=4, rng=self.rng, config={"seed": 3}),
            self.path,
        )
        loaded = load_checkpoint(self.path)
        self.assertEqual(loaded.epoch, 4)
        self.assertEqual(loaded.config, {"seed": 3})
        self.assertEqual(loaded.num_classes, 4)
        restored = loaded.restore_network()
        np.testing.assert_array_equal(
            restored.registry["fc.weight"].value, self.network.registry["fc.weight"].value
        )
        np.testing.assert_array_equal(loaded.momentum["fc.weight"], self.optimizer.buffers["fc.weight"])
        np.testing.assert_array_equal(loaded.restore_rng().integers(1 << 30, size=5), self.rng.integers(1 << 30, size=5))

    def test_not_an_archive(self):
        self.path.write_text("hello")
        with self.assertRaises(DatasetFormatError):
            load_checkpoint(self.path)

    def test_missing_file(self):
        with self.assertRaises(OSError):
            load_checkpoint(Path(self.tmp.name) / "absent.npz")

    def test_parameter_mismatch(self):
        checkpoint = Checkpoint.capture(self.network)
        checkpoint.params["extra.weight"] = np.zeros(1)
        with self.assertRaises(ConfigError):
            checkpoint.restore_network()


class BatchIteratorTestCase(SimpleTestCase):
    """Test epoch batch assembly."""

    def setUp(self):
        self.cfg = MotionTaskConfig(height=16, width=16, frames=8, num_directions=4, num_textures=2)
        self.samples = generate_dataset(self.cfg, 10, seed=1)

    def batches(self, prefetch, jitter=True):
        rng = np.random.default_rng(9)
        return list(BatchIterator(self.samples, 4, 4, rng, spatial_jitter=jitter, prefetch=prefetch))

    def test_shapes_and_short_final_batch(self):
        batches = self.batches(prefetch=False)
        self.assertEqual([len(labels) for _, labels in batches], [4, 4, 2])
        self.assertEqual(batches[0][0].shape, (4, 3, 4, 16, 16))

    def test_every_sample_once_per_epoch(self):
        labels = np.concatenate([labels for _, labels in self.batches(prefetch=False)])
        self.assertEqual(sorted(labels), sorted(s.label for s in self.samples))

    def test_prefetch_yields_identical_batches(self):
        inline, prefetched = self.batches(prefetch=False), self.batches(prefetch=True)
        self.assertEqual(len(inline), len(prefetched))
        for (a, la), (b, lb) in zip(inline, prefetched):
            np.testing.assert_array_equal(a, b)
            np.testing.assert_array_equal(la, lb)

    def test_pixel_mean_is_removed(self):
        clips = normalize_clips(np.full((1, 3, 1, 2, 2), 0.5))
        np.testing.assert_array_equal(clips, np.zeros((1, 3, 1, 2, 2)))

    def test_length(self):
        self.assertEqual(len(BatchIterator(self.samples, 4, 4, np.random.default_rng(0))), 3)


class EvaluationTestCase(SimpleTestCase):
    """Test multi-clip evaluation."""

    def setUp(self):
        self.network = probe_network(seed=2)
        self.dataset = random_dataset(6)

    def test_single_clip_equals_center_clip(self):
        result = evaluate_network(self.network, self.dataset, n_clips=1)
        for sample, predicted in zip(self.dataset.samples, result.predictions):
            clip = sample_clip(sample, 2, jitter=False, rng=None).array
            logits = self.network.predict(normalize_clips(clip[None]))
            self.assertEqual(int(logits.argmax()), int(predicted))

    def test_averaged_probabilities_sum_to_one(self):
        result = evaluate_network(self.network, self.dataset, n_clips=3)
        np.testing.assert_allclose(result.probabilities.sum(axis=1), np.ones(6))
        self.assertEqual(result.accuracy, float((result.predictions == self.dataset.labels()).mean()))

    def test_class_count_mismatch(self):
        with self.assertRaises(ConfigError):
            evaluate_network(self.network, random_dataset(2, num_classes=3))

    def test_frame_size_mismatch(self):
        with self.assertRaises(ConfigError):
            evaluate_network(self.network, random_dataset(2, clip_shape=(3, 6, 5, 5)))

    def test_needs_a_clip(self):
        with self.assertRaises(ConfigError):
            evaluate_network(self.network, self.dataset, n_clips=0)

    def test_clip_order_does_not_change_averaged_softmax(self):
        clips = np.stack([clip.array for clip in uniform_test_clips(self.dataset.samples[0], 2, 5)])
        order = np.random.default_rng(8).permutation(5)

        straight = clip_probabilities(self.network, clips).mean(axis=0)
        shuffled = clip_probabilities(self.network, clips[order]).mean(axis=0)

        np.testing.assert_allclose(shuffled, straight, rtol=0, atol=1e-14)
        self.assertEqual(int(shuffled.argmax()), int(straight.argmax()))

    def test_video_order_does_not_change_accuracy(self):
        order = [4, 1, 5, 0, 3, 2]
        shuffled = Dataset([self.dataset.samples[i] for i in order], self.dataset.num_classes)

        straight = evaluate_network(self.network, self.dataset, n_clips=3)
        permuted = evaluate_network(self.network, shuffled, n_clips=3)

        self.assertEqual(permuted.accuracy, straight.accuracy)
        np.testing.assert_allclose(permuted.probabilities, straight.probabilities[order], rtol=0, atol=1e-14)


class GradcheckTestCase(SimpleTestCase):
    """Test the finite-difference harness on small networks."""

    def test_linear_probe_is_exact(self):
        report = gradcheck(build_linear_probe((3, 2, 4, 4), 4), n_coords=20, seed=1, floor=1e-8)
        self.assertEqual(len(report.checks), 20)
        self.assertEqual(report.skipped, 0)
        self.assertLess(report.max_error, 1e-8)
        self.assertIs(require_passing(report), report)

    def test_failing_report_raises(self):
        report = gradcheck(build_linear_probe((3, 2, 4, 4), 4), n_coords=3, seed=1, tolerance=0.0, step=1e-2)
        with self.assertRaises(NumericError):
            require_passing(report)

    def test_routing_signature_tracks_relu_masks(self):
        x = Variable(np.array([1.0, -1.0]), requires_grad=True)
        tape = Tape()
        ReLU.apply(tape, x)
        before = routing_signature(tape)
        x_flipped = Variable(np.array([-1.0, -1.0]), requires_grad=True)
        tape = Tape()
        ReLU.apply(tape, x_flipped)
        self.assertNotEqual(before, routing_signature(tape))


class BenchTestCase(SimpleTestCase):
    """Test the timing harness."""

    def test_needs_three_repeats(self):
        with self.assertRaises(ConfigError):
            bench(build_linear_probe((3, 2, 4, 4), 4), repeats=2)

    def test_flops_come_from_cost_report(self):
        spec = build_linear_probe((3, 2, 4, 4), 4)
        report = bench(spec, repeats=3, batch=2)
        self.assertEqual(len(report.times), 3)
        self.assertEqual(report.row()[-1], 2 * 4 * 3)
        self.assertGreaterEqual(report.spread, 0.0)


class FilterInspectionTestCase(SimpleTestCase):
    """Test filter dumps."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_all_ones_points_at_centre(self):
        self.assertEqual(argmax_offset(np.ones((3, 3))), (1, 1))
        self.assertEqual(argmax_offset(np.ones((5, 5))), (2, 2))

    def test_equal_distance_ties_are_row_major(self):
        grid = np.zeros((3, 3))
        grid[0, 1] = grid[1, 0] = grid[2, 1] = 1.0
        self.assertEqual(argmax_offset(grid), (0, 1))

    def test_dump_counts_and_round_trip(self):
        cfg = CorrelationConfig(K=3, D=2, G=1).bind(C_in=2, L=3)
        weights = np.random.default_rng(4).normal(size=(3, 2, 3, 3))
        dump = dump_filters(weights, cfg.offsets(), "res2.corr", self.out)
        self.assertEqual(dump.grid_count, 6)
        self.assertEqual(len(list((self.out / "grids").glob("*.pgm"))), 6)
        np.testing.assert_array_equal(read_grids(self.out / "grids.csv"), weights)
        self.assertEqual(len(dump.arrows), 6)
        t, c, dy, dx, weight = dump.arrows[0]
        self.assertEqual(weight, weights[0, 0].max())
        self.assertIn(dy, (-2, 0, 2))

    def test_graymaps_open_with_pillow(self):
        cfg = CorrelationConfig(K=3, D=1, G=1).bind(C_in=1, L=2)
        dump_filters(np.ones((2, 1, 3, 3)), cfg.offsets(), "res3.corr", self.out)
        with Image.open(self.out / "mosaic.pgm") as image:
            self.assertEqual(image.mode, "L")
            self.assertEqual(image.size, ((1 * 4 - 1) * 8, (2 * 4 - 1) * 8))
            self.assertEqual(set(np.asarray(image).ravel()) - {0}, {128})


class PlotScriptTestCase(SimpleTestCase):
    """Test the gnuplot script writer."""

    def test_script_references_metrics(self):
        with tempfile.TemporaryDirectory() as tmp:
            metrics = Path(tmp) / "metrics.csv"
            metrics.write_text("epoch,lr,train_loss,train_acc,test_acc\n")
            script = write_gnuplot_script(metrics, title="run")
            text = script.read_text()
        self.assertEqual(script.name, "metrics.gp")
        self.assertIn('"metrics.csv" using 1:3', text)
        self.assertIn("metrics.png", text)
