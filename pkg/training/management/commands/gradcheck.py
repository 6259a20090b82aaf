"""
Finite-difference check of every backward pass of a network.
"""

from core.management.base import CorrNetCommand
from networks.catalog import resolve_netspec
from training.services.gradcheck import gradcheck, require_passing


class Command(CorrNetCommand):
    help = "Compare backpropagated parameter gradients with central differences; exit 2 on failure"

    def add_arguments(self, parser):
        parser.add_argument("--netspec", required=True)
        parser.add_argument("--coords", type=int, help="Parameter coordinates to check")
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--step", type=float)
        parser.add_argument("--tolerance", type=float)
        parser.add_argument("--batch", type=int)

    def run(self, **options):
        report = gradcheck(
            resolve_netspec(options["netspec"]),
            n_coords=options["coords"],
            seed=options["seed"],
            step=options["step"],
            tolerance=options["tolerance"],
            batch_size=options["batch"],
        )
        require_passing(report)
        self.success(report.summary())
