"""
Integration tests for whole training runs: determinism, checkpoint resume,
the zero learning-rate contract and the non-finite abort.
"""

import numpy as np
import pytest

from core.exceptions import ConfigError, NumericError
from networks.assembly import Network
from networks.netspec_format import read_netspec
from synthetic.dataset import SampleMeta, VideoSample
from synthetic.storage import test_split_path, write_dataset
from tensors.ndtensor import NDTensor
from training.config import TrainConfig
from training.services.checkpoint import load_checkpoint
from training.services.trainer import METRIC_COLUMNS, train


def micro_config(netspec, data, **overrides):
    values = dict(
        netspec=netspec,
        data=str(data),
        epochs=3,
        warmup_epochs=1,
        lr_max=0.05,
        batch_size=4,
        clip_len=4,
        seed=5,
        eval_clips=2,
        epoch_eval_clips=1,
    )
    values.update(overrides)
    return TrainConfig(**values)


@pytest.mark.integration
class TestDeterminism:
    """Identical configs give identical runs; resuming changes nothing."""

    def test_identical_seeds_give_identical_metrics(self, micro_netspec, motion_data, run_dir):
        cfg = micro_config(micro_netspec, motion_data)
        first = train(cfg, run_dir / "a")
        second = train(cfg, run_dir / "b")
        assert first.metrics_path.read_bytes() == second.metrics_path.read_bytes()
        lines = first.metrics_path.read_text().splitlines()
        assert lines[0] == ",".join(METRIC_COLUMNS)
        assert len(lines) == 1 + cfg.epochs

    def test_resume_equals_straight_through(self, micro_netspec, motion_data, run_dir):
        cfg = micro_config(micro_netspec, motion_data)
        straight = train(cfg, run_dir / "straight")

        partial = train(cfg, run_dir / "resumed", stop_after=1)
        assert partial.final_accuracy is None
        assert load_checkpoint(partial.checkpoint_path).epoch == 1
        resumed = train(cfg, run_dir / "resumed", resume=partial.checkpoint_path)

        assert resumed.final_accuracy == straight.final_accuracy
        assert resumed.metrics_path.read_bytes() == straight.metrics_path.read_bytes()
        for name, parameter in straight.network.registry.items():
            np.testing.assert_array_equal(resumed.network.registry[name].value, parameter.value)

    def test_resume_rejects_changed_schedule(self, micro_netspec, motion_data, run_dir):
        cfg = micro_config(micro_netspec, motion_data)
        partial = train(cfg, run_dir / "run", stop_after=1)
        changed = micro_config(micro_netspec, motion_data, lr_max=0.1)
        with pytest.raises(ConfigError, match="lr_max"):
            train(changed, run_dir / "run", resume=partial.checkpoint_path)

    def test_prefetch_matches_inline(self, micro_netspec, motion_data, run_dir):
        inline = train(micro_config(micro_netspec, motion_data, epochs=2), run_dir / "inline")
        prefetched = train(micro_config(micro_netspec, motion_data, epochs=2, prefetch=True), run_dir / "prefetch")
        assert inline.metrics_path.read_bytes() == prefetched.metrics_path.read_bytes()


@pytest.mark.integration
class TestTrainingContracts:
    """Learning-rate and numeric contracts of the trainer."""

    def test_zero_learning_rate_leaves_parameters(self, micro_netspec, motion_data, run_dir):
        cfg = micro_config(micro_netspec, motion_data, lr_max=0.0)
        result = train(cfg, run_dir)
        fresh = Network(read_netspec(micro_netspec)).initialize(cfg.seed)
        for name, parameter in fresh.registry.items():
            np.testing.assert_array_equal(result.network.registry[name].value, parameter.value)

    def test_non_finite_loss_aborts_without_checkpoint(self, probe_netspec, tmp_path, run_dir):
        clip = np.full((3, 8, 16, 16), 0.5)
        clip[0, 0, 0, 0] = np.nan
        samples = [VideoSample(NDTensor.wrap(clip), label, SampleMeta(seed=label)) for label in range(4)]
        data = tmp_path / "nan.svd"
        write_dataset(data, samples, 4)
        write_dataset(test_split_path(data), samples, 4)

        with pytest.raises(NumericError, match="loss"):
            train(micro_config(probe_netspec, data, spatial_jitter=False), run_dir)
        assert not (run_dir / "checkpoint.npz").exists()

    def test_clip_length_must_match_netspec(self, micro_netspec, motion_data, run_dir):
        with pytest.raises(ConfigError, match="4-frame"):
            train(micro_config(micro_netspec, motion_data, clip_len=6), run_dir)

    def test_training_lowers_the_loss(self, micro_netspec, motion_data, run_dir):
        result = train(micro_config(micro_netspec, motion_data, epochs=6, warmup_epochs=1), run_dir)
        losses = [metrics.train_loss for metrics in result.history]
        assert min(losses[-2:]) < losses[0]
        assert 0.0 <= result.final_accuracy <= 1.0


@pytest.mark.slow
@pytest.mark.integration
def test_overfits_sixteen_videos(micro_netspec, motion_data, run_dir):
    """Capacity sanity check: the training split is learned perfectly."""
    cfg = micro_config(
        micro_netspec, motion_data, epochs=200, warmup_epochs=5, lr_max=0.05, spatial_jitter=False, weight_decay=0.0
    )
    result = train(cfg, run_dir)
    assert max(metrics.train_acc for metrics in result.history) == 1.0
