"""
Sub-pixel renderer for a single moving object over a static background.

Objects are drawn with analytic area coverage so that motion of a fraction
of a pixel per frame still changes pixel values smoothly. Textures are
evaluated at continuous object coordinates and travel with the object.
"""

import numpy as np

TEXTURE_BANK_SEED = 20210
OBJECT_FRACTION = 0.3


class TextureBank:
    """
    Fixed family of plaid textures indexed by texture id.

    Each texture blends a dark and a bright color with a product of two
    sinusoids; frequencies and colors depend only on the id.
    """

    def __init__(self, size):
        rng = np.random.default_rng(TEXTURE_BANK_SEED)
        self.size = size
        self.dark = rng.uniform(0.0, 0.2, size=(size, 3))
        self.bright = rng.uniform(0.8, 1.0, size=(size, 3))
        self.frequencies = rng.uniform(0.1, 0.35, size=(size, 2))
        self.angles = rng.uniform(0.0, np.pi, size=size)

    def evaluate(self, texture_id, u, v, phase):
        """
        Texture colors at object coordinates (u, v).

        Returns:
            np.ndarray: 3 x H x W
        """
        f1, f2 = self.frequencies[texture_id]
        angle = self.angles[texture_id]
        a = np.cos(angle) * u + np.sin(angle) * v
        b = -np.sin(angle) * u + np.cos(angle) * v
        blend = 0.5 * (1.0 + np.sin(2 * np.pi * (f1 * a + phase[0])) * np.sin(2 * np.pi * (f2 * b + phase[1])))
        dark = self.dark[texture_id][:, None, None]
        bright = self.bright[texture_id][:, None, None]
        return dark * (1.0 - blend) + bright * blend


def box_coverage(start, size, extent):
    """Fraction of each unit pixel [i, i+1) covered by [start, start + size)."""
    edges = np.arange(extent, dtype=np.float64)
    return np.clip(np.minimum(edges + 1.0, start + size) - np.maximum(edges, start), 0.0, 1.0)


def direction_vector(index, num_directions):
    """Unit (dy, dx) of direction index; index 0 points right, indices turn counter-clockwise."""
    angle = 2.0 * np.pi * index / num_directions
    return np.round(np.array([-np.sin(angle), np.cos(angle)]), 12)


class VideoRenderer:
    """Render clips for one MotionTaskConfig."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.textures = TextureBank(cfg.num_textures)
        self.object_size = max(2.0, round(OBJECT_FRACTION * min(cfg.height, cfg.width)))

    def trajectory(self, direction, rng):
        """
        Object top-left corner per frame.

        The midpoint is jittered as far as the frame allows while keeping the
        whole path inside it.
        """
        cfg = self.cfg
        velocity = cfg.speed * direction_vector(direction, cfg.num_directions)
        travel = velocity * (cfg.frames - 1)
        extents = np.array([cfg.height, cfg.width], dtype=np.float64)
        half = self.object_size / 2.0
        low = half + np.abs(travel) / 2.0
        high = extents - low
        draw = rng.uniform(np.minimum(low, high), np.maximum(low, high))
        midpoint = np.where(high > low, draw, extents / 2.0)
        times = np.arange(cfg.frames, dtype=np.float64) - (cfg.frames - 1) / 2.0
        centers = midpoint[None, :] + times[:, None] * velocity[None, :]
        return centers - half

    def background(self, rng):
        """Static mid-gray background with a faint random tint."""
        cfg = self.cfg
        level = rng.uniform(0.35, 0.65)
        tint = rng.uniform(-0.05, 0.05, size=3)
        return np.broadcast_to((level + tint)[:, None, None], (3, cfg.height, cfg.width))

    def object_layer(self, corner, texture_id, phase):
        """(coverage H x W, colors 3 x H x W) of the object at one frame."""
        cfg = self.cfg
        size = self.object_size
        top, left = corner
        rows = np.arange(cfg.height, dtype=np.float64)[:, None] + 0.5
        cols = np.arange(cfg.width, dtype=np.float64)[None, :] + 0.5

        if self.cfg.object == "disk":
            radius = size / 2.0
            distance = np.hypot(rows - (top + radius), cols - (left + radius))
            coverage = np.clip(radius - distance + 0.5, 0.0, 1.0)
        else:
            coverage = np.outer(box_coverage(top, size, cfg.height), box_coverage(left, size, cfg.width))

        if self.cfg.object == "texture_patch":
            colors = self.textures.evaluate(texture_id, cols - left, rows - top, phase)
        else:
            bright = self.textures.bright[texture_id][:, None, None]
            colors = np.broadcast_to(bright, (3, cfg.height, cfg.width))
        return coverage, colors

    def render(self, direction, texture_id, rng):
        """
        One clip of shape 3 x L_full x H x W, values in [0, 1].

        Args:
            direction: Motion direction index
            texture_id: Texture bank index
            rng: numpy Generator seeded for this sample
        """
        cfg = self.cfg
        corners = self.trajectory(direction, rng)
        phase = rng.uniform(0.0, 1.0, size=2)
        background = self.background(rng)

        clip = np.empty(cfg.clip_shape)
        for t, corner in enumerate(corners):
            coverage, colors = self.object_layer(corner, texture_id, phase)
            clip[:, t] = coverage * colors + (1.0 - coverage) * background
        if cfg.noise_std > 0:
            clip += rng.normal(0.0, cfg.noise_std, size=clip.shape)
        return np.clip(clip, 0.0, 1.0)
