"""
Analytic parameter and multiply counts.

Correlation: L * C_in * K * K parameters (0 when the filter is frozen) and
C_in * K * K * L * H * W multiplies. Convolution: C_out * C_in * Kt * Ky * Kx
parameters, times the output L' * H' * W' for multiplies. Multiplies are
counted once per multiply-accumulate.
"""

import csv
from dataclasses import dataclass, field

from .assembly import Network

COLUMNS = ("layer", "kind", "params", "flops")


@dataclass
class CostReport:
    name: str
    layers: list = field(default_factory=list)

    @property
    def total_params(self):
        return sum(layer.params for layer in self.layers)

    @property
    def total_flops(self):
        return sum(layer.flops for layer in self.layers)

    def by_layer(self):
        return {layer.name: layer for layer in self.layers}

    def of_kind(self, kind):
        return [layer for layer in self.layers if layer.kind == kind]

    def matching(self, prefix):
        """Entries whose layer name starts with prefix."""
        return [layer for layer in self.layers if layer.name.startswith(prefix)]

    def rows(self):
        rows = [(layer.name, layer.kind, layer.params, layer.flops) for layer in self.layers]
        rows.append(("total", "", self.total_params, self.total_flops))
        return rows

    def write_csv(self, stream):
        writer = csv.writer(stream)
        writer.writerow(COLUMNS)
        writer.writerows(self.rows())

    def format_table(self):
        width = max([len(row[0]) for row in self.rows()] + [5])
        lines = [f"{'layer':<{width}}  {'kind':<17}  {'params':>12}  {'flops':>16}"]
        for name, kind, params, flops in self.rows():
            lines.append(f"{name:<{width}}  {kind:<17}  {params:>12,}  {flops:>16,}")
        return "\n".join(lines)


def cost_report(spec):
    """CostReport for one clip of spec.input; no weights are allocated."""
    return CostReport(spec.name, Network(spec).layer_costs())
