"""
Multi-clip evaluation of a checkpoint.
"""

from django.conf import settings

from core.management.base import CorrNetCommand
from training.serializers import evaluation_request_from
from training.services.evaluation import evaluate


class Command(CorrNetCommand):
    help = "Top-1 video accuracy of a checkpoint, averaging softmax over uniformly spaced clips"

    def add_arguments(self, parser):
        parser.add_argument("--checkpoint", required=True)
        parser.add_argument("--data", required=True, help="Dataset file to score")
        parser.add_argument("--clips", type=int)
        parser.add_argument("--config", help="JSON file with checkpoint, data or clips")

    def run(self, **options):
        defaults = {"clips": settings.CORRNET["TRAINING"]["eval_clips"]}
        request = evaluation_request_from(
            self.layered_options(defaults, options, {"checkpoint": "checkpoint", "data": "data", "clips": "clips"})
        )
        result = evaluate(request["checkpoint"], request["data"], request["clips"])
        self.success(f"accuracy {result.accuracy:.4f} ({len(result.labels)} videos, {result.n_clips} clips each)")
