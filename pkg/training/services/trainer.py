"""
Training service.

Runs SGD with momentum under the warm-up plus cosine schedule, logs one
metrics row per epoch and checkpoints after every epoch so that a run can
be resumed with results identical to an uninterrupted one.
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from core.exceptions import ConfigError
from networks.assembly import Network
from networks.catalog import resolve_netspec
from synthetic.storage import read_dataset, test_split_path

from .batches import BatchIterator
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .evaluation import check_compatible, evaluate_network
from .optimizer import SGD
from .schedule import lr_at

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ("epoch", "lr", "train_loss", "train_acc", "test_acc")
CHECKPOINT_NAME = "checkpoint.npz"
METRICS_NAME = "metrics.csv"

# Fields that shape the trajectory; a resumed run must agree on all of them
TRAJECTORY_FIELDS = (
    "netspec",
    "data",
    "epochs",
    "warmup_epochs",
    "lr_max",
    "momentum",
    "weight_decay",
    "batch_size",
    "clip_len",
    "seed",
    "epoch_eval_clips",
    "spatial_jitter",
)


@dataclass
class EpochMetrics:
    epoch: int
    lr: float
    train_loss: float
    train_acc: float
    test_acc: float

    def row(self):
        return (
            self.epoch,
            f"{self.lr:.8f}",
            f"{self.train_loss:.6f}",
            f"{self.train_acc:.4f}",
            f"{self.test_acc:.4f}",
        )


@dataclass
class TrainResult:
    """
    Attributes:
        network (Network): Trained network
        checkpoint_path (Path): Last checkpoint written
        metrics_path (Path): Per-epoch metrics CSV
        history (list): EpochMetrics of the epochs run in this call
        final_accuracy (float): Multi-clip test accuracy, None if the run
            stopped before its last epoch
    """

    network: Network
    checkpoint_path: Path
    metrics_path: Path
    history: list = field(default_factory=list)
    final_accuracy: float = None


def read_metrics(path):
    with open(path, newline="") as handle:
        return list(csv.reader(handle))[1:]


class Trainer:
    """
    Single-process trainer for one TrainConfig.

    Usage:
        result = Trainer(cfg, out_dir).run()
        result = Trainer(cfg, out_dir).run(resume=out_dir / "checkpoint.npz")
    """

    def __init__(self, cfg, out_dir):
        self.cfg = cfg
        self.out_dir = Path(out_dir)
        self.checkpoint_path = self.out_dir / CHECKPOINT_NAME
        self.metrics_path = self.out_dir / METRICS_NAME

        self.train_set = read_dataset(cfg.data)
        self.test_set = read_dataset(test_split_path(cfg.data))
        if self.test_set.num_classes != self.train_set.num_classes:
            raise ConfigError(
                f"train split has {self.train_set.num_classes} classes, "
                f"test split {self.test_set.num_classes}"
            )
        self.spec = resolve_netspec(cfg.netspec, num_classes=self.train_set.num_classes)
        if self.spec.input[1] != cfg.clip_len:
            raise ConfigError(
                f"{self.spec.name} is built for {self.spec.input[1]}-frame clips, "
                f"clip_len is {cfg.clip_len}"
            )

        self.steps_per_epoch = -(-len(self.train_set) // cfg.batch_size)
        self.total_steps = cfg.epochs * self.steps_per_epoch
        self.warmup_steps = cfg.warmup_epochs * self.steps_per_epoch

    def _fresh_state(self):
        network = Network(self.spec).initialize(self.cfg.seed)
        check_compatible(network, self.train_set)
        optimizer = SGD(network.registry, self.cfg.momentum, self.cfg.weight_decay)
        rng = np.random.default_rng(np.random.SeedSequence([self.cfg.seed, 1]))
        return network, optimizer, rng, 0, []

    def _resumed_state(self, path):
        checkpoint = load_checkpoint(path)
        saved = checkpoint.config
        changed = [name for name in TRAJECTORY_FIELDS if saved.get(name) != getattr(self.cfg, name)]
        if changed:
            raise ConfigError(f"cannot resume: config differs from the checkpoint in {', '.join(changed)}")
        network = checkpoint.restore_network()
        optimizer = SGD(network.registry, self.cfg.momentum, self.cfg.weight_decay)
        optimizer.load_buffers(checkpoint.momentum)
        rows = read_metrics(self.metrics_path) if self.metrics_path.exists() else []
        rows = [row for row in rows if int(row[0]) <= checkpoint.epoch]
        logger.info(f"Resuming {self.spec.name} after epoch {checkpoint.epoch} from {path}")
        return network, optimizer, checkpoint.restore_rng(), checkpoint.epoch, rows

    def _write_metrics(self, rows):
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(METRIC_COLUMNS)
        writer.writerows(rows)
        self.metrics_path.write_text(buffer.getvalue(), encoding="utf-8")

    def run_epoch(self, network, optimizer, rng, epoch):
        """
        One pass over the training set.

        Raises:
            NumericError: If a loss or gradient goes non-finite; parameters
                keep the values of the last good step
        """
        batches = BatchIterator(
            self.train_set.samples,
            self.cfg.batch_size,
            self.cfg.clip_len,
            rng,
            spatial_jitter=self.cfg.spatial_jitter,
            prefetch=self.cfg.prefetch,
        )
        loss_sum = correct = seen = 0
        lr = 0.0
        for index, (clips, labels) in enumerate(batches):
            step = (epoch - 1) * self.steps_per_epoch + index
            lr = lr_at(step, self.total_steps, self.warmup_steps, self.cfg.lr_max)
            loss, logits, grads = network.forward_backward(clips, labels)
            optimizer.step(grads, lr, loss)
            loss_sum += loss * len(labels)
            correct += int((logits.argmax(axis=1) == labels).sum())
            seen += len(labels)

        test = evaluate_network(network, self.test_set, self.cfg.epoch_eval_clips, self.cfg.clip_len)
        return EpochMetrics(epoch, lr, loss_sum / seen, correct / seen, test.accuracy)

    def run(self, resume=None, stop_after=None):
        """
        Train up to cfg.epochs (or stop_after) epochs.

        Args:
            resume: Checkpoint to continue from
            stop_after: Last epoch to run in this call; the schedule still
                spans cfg.epochs so a later resume continues it seamlessly

        Returns:
            TrainResult
        """
        self.out_dir.mkdir(parents=True, exist_ok=True)
        if resume is not None:
            network, optimizer, rng, done, rows = self._resumed_state(resume)
        else:
            network, optimizer, rng, done, rows = self._fresh_state()
        last = self.cfg.epochs if stop_after is None else min(stop_after, self.cfg.epochs)

        logger.info(
            f"Training {self.spec.name} ({network.parameter_count():,} weights) on "
            f"{len(self.train_set)} videos, epochs {done + 1}..{last} of {self.cfg.epochs}"
        )
        history = []
        for epoch in range(done + 1, last + 1):
            metrics = self.run_epoch(network, optimizer, rng, epoch)
            history.append(metrics)
            rows.append(metrics.row())
            self._write_metrics(rows)
            save_checkpoint(
                Checkpoint.capture(network, optimizer, epoch, rng, self.cfg.as_dict()),
                self.checkpoint_path,
            )
            logger.info(
                f"Epoch {epoch}/{self.cfg.epochs}: lr {metrics.lr:.5f} "
                f"loss {metrics.train_loss:.4f} train {metrics.train_acc:.3f} test {metrics.test_acc:.3f}"
            )

        result = TrainResult(network, self.checkpoint_path, self.metrics_path, history)
        if last == self.cfg.epochs:
            final = evaluate_network(network, self.test_set, self.cfg.eval_clips, self.cfg.clip_len)
            result.final_accuracy = final.accuracy
            logger.info(f"Final {self.cfg.eval_clips}-clip test accuracy {final.accuracy:.4f}")
        return result


def train(cfg, out_dir, resume=None, stop_after=None):
    """Train cfg into out_dir; see Trainer.run."""
    return Trainer(cfg, out_dir).run(resume=resume, stop_after=stop_after)
