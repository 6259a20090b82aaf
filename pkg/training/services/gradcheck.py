"""
End-to-end gradient check.

Compares backpropagated parameter gradients of a whole network against
central finite differences of its training-mode loss. A coordinate whose
perturbation flips a ReLU mask or a max-pool winner sits on a kink of the
loss; it is retried with a ten times smaller step and, if still not smooth,
replaced by a fresh coordinate.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from django.conf import settings

from core.exceptions import NumericError
from networks.assembly import assemble
from nn.functional import ReLU, SoftmaxCrossEntropy, TemporalMaxPool3
from nn.numeric import relative_error
from nn.tape import Tape

logger = logging.getLogger(__name__)

MAX_DRAWS_PER_COORD = 20


@dataclass(frozen=True)
class CoordinateCheck:
    parameter: str
    index: tuple
    analytic: float
    numeric: float
    error: float
    step: float


@dataclass
class GradcheckReport:
    """
    Attributes:
        netspec (str): Name of the checked network
        checks (list): CoordinateCheck per compared coordinate
        skipped (int): Coordinates dropped because they sit on a kink
        tolerance (float): Largest acceptable relative error
        requested (int): Coordinates asked for
    """

    netspec: str
    checks: list = field(default_factory=list)
    skipped: int = 0
    tolerance: float = 1e-5
    requested: int = 0

    @property
    def max_error(self):
        return max((check.error for check in self.checks), default=0.0)

    @property
    def worst(self):
        return max(self.checks, key=lambda check: check.error, default=None)

    @property
    def passed(self):
        return len(self.checks) >= self.requested and self.max_error <= self.tolerance

    def summary(self):
        text = (
            f"{self.netspec}: {len(self.checks)} coordinates, max relative error "
            f"{self.max_error:.3e} (tolerance {self.tolerance:.0e}, {self.skipped} skipped at kinks)"
        )
        if self.worst is not None:
            text += f"; worst {self.worst.parameter}{list(self.worst.index)}"
        return text


def routing_signature(tape):
    """Bytes identifying every ReLU mask and max-pool winner recorded on tape."""
    parts = []
    for node in tape.nodes:
        if isinstance(node.function, ReLU):
            parts.append(np.packbits(node.function.saved["mask"]).tobytes())
        elif isinstance(node.function, TemporalMaxPool3):
            parts.append(node.function.saved["winner"].astype(np.uint8).tobytes())
    return b"".join(parts)


class GradientChecker:
    """
    Finite-difference oracle for one initialized network and one batch.

    The loss is the training-mode mean cross-entropy with batch statistics
    and without running-statistics updates.
    """

    def __init__(self, network, clips, labels, step=1e-5, floor=1e-4):
        self.network = network
        self.clips = clips
        self.labels = labels
        self.step = step
        self.floor = floor
        _, _, self.grads = network.forward_backward(clips, labels, update_stats=False)
        _, self.signature = self.probe()

    def probe(self):
        tape = Tape()
        logits = self.network.forward(self.clips, mode="train", tape=tape, update_stats=False)
        loss = SoftmaxCrossEntropy.apply(None, logits, labels=self.labels)
        return float(loss.value), routing_signature(tape)

    def difference(self, parameter, index, step):
        """Central difference at one coordinate; smooth is False if routing changed."""
        original = parameter.value.copy()
        losses, smooth = [], True
        try:
            for sign in (1.0, -1.0):
                values = original.copy()
                values[index] += sign * step
                parameter.tensor.assign_(values)
                loss, signature = self.probe()
                losses.append(loss)
                smooth = smooth and signature == self.signature
        finally:
            parameter.tensor.assign_(original)
        return (losses[0] - losses[1]) / (2.0 * step), smooth

    def check(self, name, index):
        """CoordinateCheck for one coordinate, or None if it sits on a kink."""
        parameter = self.network.registry[name]
        for step in (self.step, self.step / 10.0):
            numeric, smooth = self.difference(parameter, index, step)
            if smooth:
                analytic = float(self.grads[name][index])
                error = float(relative_error(analytic, numeric, self.floor))
                return CoordinateCheck(name, index, analytic, numeric, error, step)
        return None


def gradcheck(spec, n_coords=None, seed=0, step=None, tolerance=None, floor=None, batch_size=None):
    """
    Check n_coords randomly chosen parameter gradients of spec.

    Coordinates are drawn by picking a parameter tensor uniformly, then an
    element of it uniformly, so small tensors (batchnorm, filters) are
    exercised as often as large convolutions. Frozen correlation filters
    are not parameters and are never drawn.

    Returns:
        GradcheckReport
    """
    options = settings.CORRNET["GRADCHECK"]
    n_coords = options["n_coords"] if n_coords is None else n_coords
    step = options["step"] if step is None else step
    tolerance = options["tolerance"] if tolerance is None else tolerance
    floor = options["abs_floor"] if floor is None else floor
    batch_size = options["batch_size"] if batch_size is None else batch_size

    network = assemble(spec, seed)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    clips = rng.uniform(0.0, 1.0, size=(batch_size,) + tuple(spec.input))
    labels = rng.integers(0, spec.num_classes, size=batch_size)
    checker = GradientChecker(network, clips, labels, step, floor)

    report = GradcheckReport(spec.name, tolerance=tolerance, requested=n_coords)
    names = list(network.registry)
    draws = 0
    while names and len(report.checks) < n_coords and draws < MAX_DRAWS_PER_COORD * n_coords:
        draws += 1
        name = names[int(rng.integers(len(names)))]
        shape = network.registry[name].value.shape
        index = tuple(int(rng.integers(extent)) for extent in shape)
        result = checker.check(name, index)
        if result is None:
            report.skipped += 1
            continue
        report.checks.append(result)

    logger.info(report.summary())
    return report


def require_passing(report):
    """
    Raises:
        NumericError: If the report exceeds its tolerance or fell short of
            the requested coordinate count
    """
    if not report.passed:
        raise NumericError(f"gradient check failed: {report.summary()}")
    return report
