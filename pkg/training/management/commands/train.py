"""
Train a network on a synthetic dataset.
"""

from pathlib import Path

from django.conf import settings

from core.management.base import CorrNetCommand
from training.config import TrainConfig
from training.serializers import train_config_from
from training.services.plots import write_gnuplot_script
from training.services.trainer import train

FLAGS = {
    "netspec": "netspec",
    "data": "data",
    "epochs": "epochs",
    "warmup": "warmup_epochs",
    "lr": "lr_max",
    "momentum": "momentum",
    "weight_decay": "weight_decay",
    "batch": "batch_size",
    "clip_len": "clip_len",
    "seed": "seed",
    "clips": "eval_clips",
    "spatial_jitter": "spatial_jitter",
    "prefetch": "prefetch",
}


class Command(CorrNetCommand):
    help = "Train a netspec with SGD, warm-up and cosine decay; writes metrics.csv and checkpoint.npz"

    def add_arguments(self, parser):
        parser.add_argument("--config", help="JSON file with TrainConfig fields")
        parser.add_argument("--netspec", help="Catalog name or netspec file")
        parser.add_argument("--data", help="Training split (.svd); its .test sibling is the test split")
        parser.add_argument("--epochs", type=int)
        parser.add_argument("--warmup", type=int)
        parser.add_argument("--lr", type=float)
        parser.add_argument("--momentum", type=float)
        parser.add_argument("--weight-decay", dest="weight_decay", type=float)
        parser.add_argument("--batch", type=int)
        parser.add_argument("--clip-len", dest="clip_len", type=int)
        parser.add_argument("--seed", type=int)
        parser.add_argument("--clips", type=int, help="Clips per video in the final evaluation")
        parser.add_argument("--spatial-jitter", dest="spatial_jitter", action="store_true", default=None)
        parser.add_argument("--no-spatial-jitter", dest="spatial_jitter", action="store_false")
        parser.add_argument("--prefetch", action="store_true", default=None)
        parser.add_argument("--out", help="Run directory (default RUNS_DIR/<netspec>-s<seed>)")
        parser.add_argument("--resume", help="Checkpoint to continue from")
        parser.add_argument("--stop-after", dest="stop_after", type=int, help="Last epoch to run now")
        parser.add_argument("--plot", action="store_true", help="Also write a gnuplot script for the metrics")

    def run(self, **options):
        values = self.layered_options(TrainConfig.defaults(), options, FLAGS)
        cfg = train_config_from(values)
        out = options["out"] or settings.CORRNET["RUNS_DIR"] / f"{Path(cfg.netspec).stem}-s{cfg.seed}"

        result = train(cfg, out, resume=options["resume"], stop_after=options["stop_after"])
        if options["plot"]:
            write_gnuplot_script(result.metrics_path, title=cfg.netspec)
        if result.final_accuracy is None:
            self.success(f"Stopped after epoch {result.history[-1].epoch if result.history else 0}; checkpoint {result.checkpoint_path}")
            return
        last = result.history[-1] if result.history else None
        single = f"{last.test_acc:.4f}" if last else "n/a"
        self.success(
            f"{cfg.netspec}: test accuracy {result.final_accuracy:.4f} with {cfg.eval_clips} clips "
            f"({single} with {cfg.epoch_eval_clips}); metrics {result.metrics_path}, "
            f"checkpoint {result.checkpoint_path}"
        )
