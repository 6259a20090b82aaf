"""
Generate a synthetic motion dataset: PATH plus its PATH.test sibling.
"""

from django.conf import settings

from core.management.base import CorrNetCommand
from synthetic.config import MotionTaskConfig
from synthetic.serializers import motion_config_from
from synthetic.storage import write_splits

FLAGS = {
    "directions": "num_directions",
    "speed": "speed",
    "object": "object",
    "texture_correlation": "texture_correlation",
    "noise": "noise_std",
    "height": "height",
    "width": "width",
    "frames": "frames",
    "textures": "num_textures",
    "n_train": "n_train",
    "n_test": "n_test",
    "seed": "seed",
}


class Command(CorrNetCommand):
    help = "Render a motion-labeled (or texture-labeled) synthetic video dataset"

    def add_arguments(self, parser):
        parser.add_argument("--out", required=True, help="Training split path; the test split goes to <stem>.test.svd")
        parser.add_argument("--config", help="JSON file with task fields")
        parser.add_argument("--directions", type=int)
        parser.add_argument("--speed", type=float)
        parser.add_argument("--object")
        parser.add_argument("--texture-correlation", dest="texture_correlation")
        parser.add_argument("--noise", type=float)
        parser.add_argument("--height", type=int)
        parser.add_argument("--width", type=int)
        parser.add_argument("--frames", type=int)
        parser.add_argument("--textures", type=int)
        parser.add_argument("--n-train", dest="n_train", type=int)
        parser.add_argument("--n-test", dest="n_test", type=int)
        parser.add_argument("--seed", type=int)

    def run(self, **options):
        data = settings.CORRNET["DATA"]
        defaults = dict(MotionTaskConfig.from_settings().as_dict(), n_train=data["n_train"], n_test=data["n_test"], seed=0)
        values = self.layered_options(defaults, options, FLAGS)
        splits = {key: values.pop(key) for key in ("n_train", "n_test", "seed")}
        task = motion_config_from(values)

        train_path, test_path = write_splits(task, options["out"], splits["n_train"], splits["n_test"], splits["seed"])
        self.success(
            f"Wrote {splits['n_train']} training videos to {train_path} and "
            f"{splits['n_test']} test videos to {test_path} ({task.num_classes} classes)"
        )
