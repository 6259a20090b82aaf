"""
Task configuration for the synthetic video generator.
"""

from dataclasses import asdict, dataclass

from django.conf import settings

from core.exceptions import ConfigError

OBJECTS = ("square", "disk", "texture_patch")
TEXTURE_CORRELATIONS = ("none", "full")


@dataclass(frozen=True)
class MotionTaskConfig:
    """
    What the generated videos look like and what their label means.

    With texture_correlation "none" the label is the motion direction and the
    texture is drawn independently of it; with "full" the label is the
    texture id (the appearance control task).

    Attributes:
        num_directions: 4 or 8 evenly spaced motion directions
        speed: Pixels per frame
        object: square, disk or texture_patch
        texture_correlation: none or full
        noise_std: Per-pixel Gaussian noise
        height, width, frames: Video extents (frames is L_full)
        num_textures: Size of the texture bank
    """

    num_directions: int = 8
    speed: float = 0.5
    object: str = "texture_patch"
    texture_correlation: str = "none"
    noise_std: float = 0.02
    height: int = 32
    width: int = 32
    frames: int = 32
    num_textures: int = 8

    def __post_init__(self):
        self.clean()

    def clean(self):
        """
        Validate the task invariants.

        Raises:
            ConfigError: On unknown options, non-positive extents, a zero speed
                with more than one direction, or trajectories longer than half
                the frame
        """
        if self.num_directions not in (4, 8):
            raise ConfigError(f"num_directions must be 4 or 8, got {self.num_directions}")
        if self.object not in OBJECTS:
            raise ConfigError(f"object must be one of {OBJECTS}, got '{self.object}'")
        if self.texture_correlation not in TEXTURE_CORRELATIONS:
            raise ConfigError(
                f"texture_correlation must be one of {TEXTURE_CORRELATIONS}, "
                f"got '{self.texture_correlation}'"
            )
        if min(self.height, self.width, self.frames, self.num_textures) < 1:
            raise ConfigError("height, width, frames and num_textures must be >= 1")
        if self.speed < 0 or self.noise_std < 0:
            raise ConfigError("speed and noise_std must be non-negative")
        if self.speed == 0 and self.num_directions > 1:
            raise ConfigError("speed 0 makes every motion direction look the same")
        travel = self.speed * (self.frames - 1)
        if travel >= min(self.height, self.width) / 2:
            raise ConfigError(
                f"objects travel {travel:g} px, which must stay below half the "
                f"frame ({min(self.height, self.width) / 2:g} px)"
            )

    @property
    def num_classes(self):
        return self.num_directions if self.texture_correlation == "none" else self.num_textures

    @property
    def clip_shape(self):
        return (3, self.frames, self.height, self.width)

    def as_dict(self):
        return asdict(self)

    @classmethod
    def from_settings(cls, **overrides):
        """Defaults from settings.CORRNET["DATA"], with keyword overrides."""
        data = settings.CORRNET["DATA"]
        values = {
            "num_directions": data["num_directions"],
            "speed": data["speed"],
            "object": data["object"],
            "texture_correlation": data["texture_correlation"],
            "noise_std": data["noise_std"],
            "height": data["height"],
            "width": data["width"],
            "frames": data["frames"],
            "num_textures": data["num_textures"],
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)
