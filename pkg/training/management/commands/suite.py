"""
Train a list of netspecs over a list of seeds and summarize.
"""

from pathlib import Path

from django.conf import settings

from core.configuration import load_config_file
from core.management.base import CorrNetCommand
from training.services.suite import run_suite


class Command(CorrNetCommand):
    help = "Run a committed experiment config (see configs/) and write summary.csv"

    def add_arguments(self, parser):
        parser.add_argument("--config", required=True, help="Suite JSON")
        parser.add_argument("--out", help="Output directory (default RUNS_DIR/<config stem>)")

    def run(self, **options):
        config = load_config_file(options["config"])
        out = options["out"] or settings.CORRNET["RUNS_DIR"] / Path(options["config"]).stem
        result = run_suite(config, out)
        for netspec in dict.fromkeys(run.netspec for run in result.runs):
            self.stdout.write(f"{netspec}: mean multi-clip accuracy {result.mean_accuracy(netspec):.4f}")
        self.success(f"Suite {result.name} finished; summary {result.summary_path}")
