"""
Integration tests for the management commands and their exit codes.
"""

import json
from io import StringIO

import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from core.exceptions import EXIT_IO, EXIT_NUMERIC, EXIT_USAGE
from synthetic.storage import read_dataset, test_split_path


def run(name, **options):
    out = StringIO()
    call_command(name, stdout=out, **options)
    return out.getvalue()


def exit_code(name, **options):
    with pytest.raises(CommandError) as caught:
        run(name, **options)
    return caught.value.returncode


@pytest.fixture
def trained_run(micro_netspec, motion_data, run_dir):
    out = run_dir / "micro"
    run(
        "train",
        netspec=micro_netspec,
        data=str(motion_data),
        epochs=2,
        warmup=1,
        batch=4,
        clip_len=4,
        seed=1,
        clips=2,
        out=str(out),
    )
    return out


@pytest.mark.integration
class TestGenData:
    def test_writes_both_splits(self, tmp_path):
        path = tmp_path / "motion.svd"
        output = run(
            "gen_data",
            out=str(path),
            n_train=8,
            n_test=4,
            height=16,
            width=16,
            frames=8,
            directions=4,
            textures=2,
            seed=2,
        )
        assert "4 test videos" in output
        assert len(read_dataset(path)) == 8
        test = read_dataset(test_split_path(path))
        assert len(test) == 4
        assert test.num_classes == 4

    def test_config_file_then_flags(self, tmp_path):
        config = tmp_path / "task.json"
        config.write_text(
            json.dumps({"height": 16, "width": 16, "frames": 8, "texture_correlation": "full", "num_textures": 5})
        )
        path = tmp_path / "texture.svd"
        run("gen_data", out=str(path), config=str(config), n_train=6, n_test=3)
        assert read_dataset(path).num_classes == 5
        run("gen_data", out=str(path), config=str(config), n_train=6, n_test=3, textures=3)
        assert read_dataset(path).num_classes == 3

    def test_invalid_task_is_a_usage_error(self, tmp_path):
        assert exit_code("gen_data", out=str(tmp_path / "x.svd"), speed=5.0) == EXIT_USAGE


@pytest.mark.integration
class TestTrainAndEvaluate:
    def test_train_writes_metrics_and_checkpoint(self, trained_run):
        assert (trained_run / "metrics.csv").exists()
        assert (trained_run / "checkpoint.npz").exists()

    def test_evaluate_reports_accuracy(self, trained_run, motion_data):
        output = run(
            "evaluate",
            checkpoint=str(trained_run / "checkpoint.npz"),
            data=str(test_split_path(motion_data)),
            clips=3,
        )
        assert "accuracy" in output
        assert "8 videos, 3 clips each" in output

    def test_missing_dataset_is_an_io_error(self, micro_netspec, tmp_path):
        code = exit_code("train", netspec=micro_netspec, data=str(tmp_path / "absent.svd"), clip_len=4, epochs=2, warmup=1)
        assert code == EXIT_IO

    def test_unknown_netspec_is_a_usage_error(self, motion_data):
        assert exit_code("train", netspec="no-such-net", data=str(motion_data), epochs=2, warmup=1) == EXIT_USAGE

    def test_warmup_past_epochs_is_a_usage_error(self, micro_netspec, motion_data):
        code = exit_code("train", netspec=micro_netspec, data=str(motion_data), epochs=2, warmup=2, clip_len=4)
        assert code == EXIT_USAGE

    def test_corrupt_checkpoint_is_an_io_error(self, tmp_path, motion_data):
        bad = tmp_path / "bad.npz"
        bad.write_bytes(b"not a zip")
        assert exit_code("evaluate", checkpoint=str(bad), data=str(motion_data)) == EXIT_IO


@pytest.mark.integration
class TestInspection:
    def test_inspect_filters(self, trained_run, tmp_path):
        out = tmp_path / "filters"
        output = run("inspect_filters", checkpoint=str(trained_run / "checkpoint.npz"), block="res2.corr", out=str(out))
        # L = 4 frames, C = 4 reduced channels
        assert "16 grids" in output
        assert len(list((out / "grids").glob("*.pgm"))) == 16
        assert (out / "arrows.csv").read_text().count("\n") == 17

    def test_unknown_block_is_a_usage_error(self, trained_run, tmp_path):
        code = exit_code(
            "inspect_filters", checkpoint=str(trained_run / "checkpoint.npz"), block="res5.corr", out=str(tmp_path)
        )
        assert code == EXIT_USAGE

    def test_residual_block_is_not_a_correlation_block(self, trained_run, tmp_path):
        code = exit_code("inspect_filters", checkpoint=str(trained_run / "checkpoint.npz"), block="res2.0", out=str(tmp_path))
        assert code == EXIT_USAGE


@pytest.mark.integration
class TestCostAndBench:
    def test_cost_compares_against_first(self):
        output = run("cost", netspec=["r2plus1d-tiny", "corrnet-tiny"])
        assert "(1.0000 x r2plus1d-tiny)" in output
        assert "corrnet-tiny:" in output

    def test_bench_writes_csv(self, tmp_path, probe_netspec):
        output = run("bench", netspec=probe_netspec, repeats=3, out=str(tmp_path))
        assert "median" in output
        assert (tmp_path / "bench.csv").read_text().startswith("netspec,batch,repeats")
        assert (tmp_path / "cost.csv").exists()

    def test_bench_needs_three_repeats(self, probe_netspec):
        assert exit_code("bench", netspec=probe_netspec, repeats=2) == EXIT_USAGE


@pytest.mark.integration
class TestGradcheckCommand:
    def test_linear_probe_passes(self):
        assert "max relative error" in run("gradcheck", netspec="linear-probe", coords=10)

    def test_failure_exits_with_numeric_code(self):
        assert exit_code("gradcheck", netspec="linear-probe", coords=5, tolerance=0.0, step=1e-2) == EXIT_NUMERIC
