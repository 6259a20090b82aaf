"""
Training run configuration.
"""

from dataclasses import asdict, dataclass, fields

from django.conf import settings

from core.exceptions import ConfigError


@dataclass(frozen=True)
class TrainConfig:
    """
    Everything that determines one training run.

    Two runs with equal TrainConfig values on the same platform produce
    byte-identical metrics files.

    Attributes:
        epochs: Passes over the training set
        warmup_epochs: Epochs of linear learning-rate ramp (< epochs)
        lr_max: Peak learning rate; 0 leaves parameters untouched
        momentum: SGD momentum in [0, 1)
        weight_decay: L2 coefficient for convolution and fc weights
        batch_size: Clips per SGD step
        clip_len: Frames per training clip
        seed: Seed for initialization and data order
        netspec: Catalog name or netspec file path
        data: Training dataset path; the test split is its .test sibling
        eval_clips: Clips per video for the final multi-clip evaluation
        epoch_eval_clips: Clips per video for the per-epoch test accuracy
        spatial_jitter: Random canvas crop of training clips
        prefetch: Assemble batches on a background thread
    """

    netspec: str
    data: str
    epochs: int = 60
    warmup_epochs: int = 10
    lr_max: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 1e-4
    batch_size: int = 16
    clip_len: int = 8
    seed: int = 0
    eval_clips: int = 10
    epoch_eval_clips: int = 1
    spatial_jitter: bool = True
    prefetch: bool = False

    def __post_init__(self):
        self.clean()

    def clean(self):
        """
        Validate the run invariants.

        Raises:
            ConfigError: If warmup_epochs >= epochs, a rate is out of range or
                a count is below 1
        """
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if not 0 <= self.warmup_epochs < self.epochs:
            raise ConfigError(
                f"warmup_epochs must lie in [0, epochs), got {self.warmup_epochs} "
                f"with {self.epochs} epochs"
            )
        if self.lr_max < 0:
            raise ConfigError(f"lr_max must be >= 0, got {self.lr_max}")
        if not 0 <= self.momentum < 1:
            raise ConfigError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.weight_decay < 0:
            raise ConfigError(f"weight_decay must be >= 0, got {self.weight_decay}")
        for name in ("batch_size", "clip_len", "eval_clips", "epoch_eval_clips"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")

    def as_dict(self):
        return asdict(self)

    @classmethod
    def field_names(cls):
        return [f.name for f in fields(cls)]

    @classmethod
    def defaults(cls):
        """Every field except netspec and data, from settings.CORRNET["TRAINING"]."""
        training = settings.CORRNET["TRAINING"]
        return {name: training[name] for name in cls.field_names() if name in training}
