"""
Forward-pass timing next to the analytic cost model.
"""

import csv
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import ConfigError
from networks.assembly import assemble
from networks.cost import cost_report

logger = logging.getLogger(__name__)

BENCH_COLUMNS = ("netspec", "batch", "repeats", "median_s", "min_s", "max_s", "params", "flops")


@dataclass
class BenchReport:
    """
    Attributes:
        netspec (str): Network name
        batch (int): Clips per timed forward
        times (list): Wall time of each repeat in seconds
        cost (CostReport): Analytic counts for one clip
    """

    netspec: str
    batch: int
    times: list = field(default_factory=list)
    cost: object = None

    @property
    def median(self):
        return float(np.median(self.times))

    @property
    def spread(self):
        """(max - min) / median of the repeats."""
        return (max(self.times) - min(self.times)) / self.median if self.median else 0.0

    def row(self):
        return (
            self.netspec,
            self.batch,
            len(self.times),
            f"{self.median:.6f}",
            f"{min(self.times):.6f}",
            f"{max(self.times):.6f}",
            self.cost.total_params,
            self.cost.total_flops * self.batch,
        )

    def write_csv(self, stream):
        writer = csv.writer(stream)
        writer.writerow(BENCH_COLUMNS)
        writer.writerow(self.row())


def bench(spec, repeats=5, batch=1, seed=0):
    """
    Median eval-mode forward time of spec on random clips.

    One untimed warm-up pass precedes the timed repeats.

    Raises:
        ConfigError: If repeats < 3 or batch < 1
    """
    if repeats < 3:
        raise ConfigError(f"bench needs at least 3 repeats, got {repeats}")
    if batch < 1:
        raise ConfigError(f"batch must be >= 1, got {batch}")
    network = assemble(spec, seed)
    clips = np.random.default_rng(seed).uniform(-0.5, 0.5, size=(batch,) + tuple(spec.input))
    network.predict(clips)

    report = BenchReport(spec.name, batch, cost=cost_report(spec))
    for _ in range(repeats):
        started = time.perf_counter()
        network.predict(clips)
        report.times.append(time.perf_counter() - started)
    logger.info(
        f"{spec.name}: median {report.median * 1e3:.1f} ms per forward of {batch} clip(s), "
        f"{report.cost.total_flops * batch:,} multiplies"
    )
    return report
