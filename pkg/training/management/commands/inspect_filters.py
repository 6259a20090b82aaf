"""
Dump the learned filter of one correlation block.
"""

from core.management.base import CorrNetCommand
from training.services.filters import inspect_filters


class Command(CorrNetCommand):
    help = "Write per-(t, c) filter grids as CSV and graymaps plus the argmax offset of each grid"

    def add_arguments(self, parser):
        parser.add_argument("--checkpoint", required=True)
        parser.add_argument("--block", required=True, help="Correlation block, e.g. res2.corr")
        parser.add_argument("--out", required=True, help="Output directory")

    def run(self, **options):
        dump = inspect_filters(options["checkpoint"], options["block"], options["out"])
        length, channels, k, _ = dump.weights.shape
        self.success(f"{dump.grid_count} grids ({length} x {channels} of {k} x {k}) from {dump.block} written to {options['out']}")
