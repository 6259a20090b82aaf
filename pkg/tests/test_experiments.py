"""
Experiment suites.

The small suite runs in the regular integration pass. The committed suites
under configs/ take tens of minutes each on a CPU and only run with
`pytest -m experiment`.
"""

import csv
import json
from pathlib import Path

import pytest

from core.exceptions import ConfigError
from networks.catalog import resolve_netspec
from networks.cost import cost_report
from training.services.suite import SUMMARY_COLUMNS, run_suite

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def load_suite(name):
    return json.loads((CONFIG_DIR / f"{name}.json").read_text())


@pytest.fixture
def small_suite(micro_netspec, probe_netspec):
    return {
        "name": "small",
        "data": {"height": 16, "width": 16, "frames": 8, "num_directions": 4, "num_textures": 2,
                 "n_train": 8, "n_test": 4, "seed": 1},
        "train": {"epochs": 2, "warmup_epochs": 1, "batch_size": 4, "clip_len": 4, "eval_clips": 2},
        "netspecs": [micro_netspec, probe_netspec],
        "seeds": [0, 1],
    }


@pytest.mark.integration
class TestSuite:
    def test_runs_every_pair(self, small_suite, run_dir):
        result = run_suite(small_suite, run_dir)
        assert len(result.runs) == 4
        with open(result.summary_path, newline="") as handle:
            rows = list(csv.reader(handle))
        assert tuple(rows[0]) == SUMMARY_COLUMNS
        assert len(rows) == 5
        for run in result.runs:
            assert 0.0 <= run.multi_clip_acc <= 1.0
        assert (run_dir / "micro-s0" / "metrics.gp").exists()
        assert (run_dir / "probe-s1" / "checkpoint.npz").exists()

    def test_reuses_generated_data(self, small_suite, run_dir):
        run_suite(small_suite, run_dir)
        data = run_dir / "data" / "train.svd"
        first = data.read_bytes()
        small_suite["seeds"] = [2]
        run_suite(small_suite, run_dir)
        assert data.read_bytes() == first

    def test_empty_seeds_rejected(self, small_suite, run_dir):
        small_suite["seeds"] = []
        with pytest.raises(ConfigError, match="seeds"):
            run_suite(small_suite, run_dir)


def test_committed_suites_name_known_netspecs():
    for path in CONFIG_DIR.glob("*-motion.json"):
        for netspec in json.loads(path.read_text())["netspecs"]:
            resolve_netspec(netspec)


def test_corrnet_overhead_over_r2plus1d():
    corr = cost_report(resolve_netspec("corrnet-tiny")).total_flops
    base = cost_report(resolve_netspec("r2plus1d-tiny")).total_flops
    assert base < corr <= 1.10 * base


@pytest.mark.slow
@pytest.mark.experiment
class TestCommittedSuites:
    """Desk-scale reproduction of the motion trend, the ablations and the K sweep."""

    def test_motion_trend(self, tmp_path):
        result = run_suite(load_suite("trend-motion"), tmp_path)
        corr = result.mean_accuracy("corrnet-tiny")
        assert corr >= 0.90
        assert corr - result.mean_accuracy("r2d-tiny") >= 0.30
        assert corr - result.mean_accuracy("r2plus1d-tiny") >= 0.03

    def test_texture_control(self, tmp_path):
        result = run_suite(load_suite("trend-texture"), tmp_path)
        scores = [result.mean_accuracy(name) for name in ("corrnet-tiny", "r2plus1d-tiny", "r2d-tiny")]
        assert max(scores) - min(scores) <= 0.05

    def test_ablations_lose_accuracy(self, tmp_path):
        result = run_suite(load_suite("ablation-motion"), tmp_path)
        full = result.mean_accuracy("corrnet-tiny")
        for variant in ("corrnet-tiny-nofilter", "corrnet-tiny-nogroup", "corrnet-tiny-concat"):
            assert result.mean_accuracy(variant) < full, variant

    def test_window_sweep(self, tmp_path):
        result = run_suite(load_suite("ksweep-motion"), tmp_path)
        k1, k3, k5 = (result.mean_accuracy(name) for name in ("corrnet-tiny-k1", "corrnet-tiny", "corrnet-tiny-k5"))
        assert k3 >= k1
        assert abs(k5 - k3) <= 0.02
