"""
Time forward passes next to analytic FLOPs.
"""

from pathlib import Path

from core.management.base import CorrNetCommand
from networks.catalog import resolve_netspec
from training.services.bench import bench


class Command(CorrNetCommand):
    help = "Median forward wall time over repeats, printed with the analytic cost table"

    def add_arguments(self, parser):
        parser.add_argument("--netspec", required=True)
        parser.add_argument("--repeats", type=int, default=5)
        parser.add_argument("--batch", type=int, default=1)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--out", help="Directory for bench.csv and cost.csv")

    def run(self, **options):
        report = bench(resolve_netspec(options["netspec"]), options["repeats"], options["batch"], options["seed"])
        self.stdout.write(report.cost.format_table())
        if options["out"]:
            out = Path(options["out"])
            out.mkdir(parents=True, exist_ok=True)
            with open(out / "bench.csv", "w", newline="") as handle:
                report.write_csv(handle)
            with open(out / "cost.csv", "w", newline="") as handle:
                report.cost.write_csv(handle)
        self.success(
            f"{report.netspec}: median {report.median * 1e3:.2f} ms over {len(report.times)} repeats "
            f"(spread {report.spread:.1%}), {report.cost.total_flops * report.batch:,} multiplies"
        )
