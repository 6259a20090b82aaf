"""
Experiment suites.

A suite trains several netspecs over several seeds on one generated
dataset pair and summarizes final accuracies next to analytic cost. The
committed configs under configs/ drive the baseline comparison, the
ablations and the K sweep.

Suite config (JSON):

    {
      "name": "trend-motion",
      "data": {"texture_correlation": "none", "n_train": 2000, "n_test": 500, "seed": 11},
      "train": {"epochs": 60, "warmup_epochs": 10},
      "netspecs": ["corrnet-tiny", "r2plus1d-tiny", "r2d-tiny"],
      "seeds": [0, 1, 2]
    }
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings

from core.exceptions import ConfigError
from networks.catalog import resolve_netspec
from networks.cost import cost_report
from synthetic.config import MotionTaskConfig
from synthetic.serializers import motion_config_from
from synthetic.storage import test_split_path, write_splits

from .plots import write_gnuplot_script
from ..serializers import train_config_from
from .trainer import train

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ("netspec", "seed", "test_acc", "multi_clip_acc", "gflops")
DATA_SPLIT_KEYS = ("n_train", "n_test", "seed")


@dataclass
class SuiteRun:
    netspec: str
    seed: int
    test_acc: float
    multi_clip_acc: float
    gflops: float

    def row(self):
        return (self.netspec, self.seed, f"{self.test_acc:.4f}", f"{self.multi_clip_acc:.4f}", f"{self.gflops:.6f}")


@dataclass
class SuiteResult:
    name: str
    runs: list = field(default_factory=list)
    summary_path: Path = None

    def mean_accuracy(self, netspec):
        scores = [run.multi_clip_acc for run in self.runs if run.netspec == netspec]
        return sum(scores) / len(scores) if scores else None


def suite_task(values):
    """MotionTaskConfig and split sizes from a suite's "data" section."""
    data = settings.CORRNET["DATA"]
    task = MotionTaskConfig.from_settings().as_dict()
    task.update({key: value for key, value in values.items() if key not in DATA_SPLIT_KEYS})
    splits = {
        "n_train": values.get("n_train", data["n_train"]),
        "n_test": values.get("n_test", data["n_test"]),
        "seed": values.get("seed", 0),
    }
    return motion_config_from(task), splits


def run_suite(config, out_dir):
    """
    Run every (netspec, seed) pair of a suite config into out_dir.

    The dataset pair is generated once under out_dir/data and reused if it
    already exists, so an interrupted suite can be re-run.

    Raises:
        ConfigError: If netspecs or seeds are missing or empty
    """
    out_dir = Path(out_dir)
    name = config.get("name", out_dir.name)
    netspecs, seeds = config.get("netspecs") or [], config.get("seeds") or []
    if not netspecs or not seeds:
        raise ConfigError(f"suite '{name}' needs non-empty netspecs and seeds")
    for netspec in netspecs:
        resolve_netspec(netspec)

    task, splits = suite_task(config.get("data", {}))
    data_path = out_dir / "data" / "train.svd"
    if not (data_path.exists() and test_split_path(data_path).exists()):
        write_splits(task, data_path, splits["n_train"], splits["n_test"], splits["seed"])

    result = SuiteResult(name)
    for netspec in netspecs:
        for seed in seeds:
            values = dict(settings.CORRNET["TRAINING"])
            values.update(config.get("train", {}))
            values.update({"netspec": netspec, "data": str(data_path), "seed": seed})
            cfg = train_config_from(values)
            run_dir = out_dir / f"{Path(netspec).stem}-s{seed}"
            trained = train(cfg, run_dir)
            write_gnuplot_script(trained.metrics_path, title=f"{netspec} seed {seed}")
            spec = trained.network.spec
            run = SuiteRun(
                netspec,
                seed,
                trained.history[-1].test_acc if trained.history else 0.0,
                trained.final_accuracy,
                cost_report(spec).total_flops / 1e9,
            )
            result.runs.append(run)
            logger.info(f"Suite {name}: {netspec} seed {seed} -> {run.multi_clip_acc:.4f}")

    result.summary_path = out_dir / "summary.csv"
    with open(result.summary_path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(run.row() for run in result.runs)
    return result
