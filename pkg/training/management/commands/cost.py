"""
Analytic parameter and multiply counts of one or more netspecs.
"""

from pathlib import Path

from core.management.base import CorrNetCommand
from networks.catalog import resolve_netspec
from networks.cost import cost_report


class Command(CorrNetCommand):
    help = "Print the per-layer cost table; with several netspecs, compare totals against the first"

    def add_arguments(self, parser):
        parser.add_argument("--netspec", required=True, nargs="+")
        parser.add_argument("--out", help="Directory for <name>.cost.csv files")

    def run(self, **options):
        reports = [cost_report(resolve_netspec(value)) for value in options["netspec"]]
        for report in reports:
            self.stdout.write(report.format_table())
            if options["out"]:
                out = Path(options["out"])
                out.mkdir(parents=True, exist_ok=True)
                with open(out / f"{report.name}.cost.csv", "w", newline="") as handle:
                    report.write_csv(handle)

        base = reports[0]
        for report in reports:
            ratio = report.total_flops / base.total_flops if base.total_flops else float("nan")
            self.success(
                f"{report.name}: {report.total_params:,} params, {report.total_flops:,} multiplies "
                f"({ratio:.4f} x {base.name})"
            )
