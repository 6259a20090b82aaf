"""
Clip tensor layout and channel-axis helpers.

The global axis order of every clip tensor is (C, L, H, W).
"""

import numpy as np

from core.exceptions import ConfigError, ShapeError

from .ndtensor import NDTensor

ROLES = ("C", "L", "H", "W")


class TensorLayout4D:
    """
    Mapping from the four clip roles to tensor axes.

    Attributes:
        roles (tuple): Axis labels in tensor order
    """

    def __init__(self, roles=ROLES):
        roles = tuple(roles)
        if sorted(roles) != sorted(ROLES) or len(roles) != 4:
            raise ConfigError(f"layout needs each of C, L, H, W exactly once, got {roles}")
        self.roles = roles

    def axis(self, role):
        return self.roles.index(role)

    def extents(self, tensor):
        """Dict of role -> extent for a 4-D tensor."""
        if len(tensor.shape) != 4:
            raise ShapeError(f"expected a 4-D clip tensor, got {list(tensor.shape)}")
        return {role: tensor.shape[i] for i, role in enumerate(self.roles)}


CLIP_LAYOUT = TensorLayout4D()


def concat_channels(a, b):
    """
    Stack two clip tensors along the channel axis.

    Output channels [0, C1) are a, [C1, C1 + C2) are b.
    """
    if len(a.shape) != 4 or len(b.shape) != 4:
        raise ShapeError("concat_channels expects two 4-D C x L x H x W tensors")
    if a.shape[1:] != b.shape[1:]:
        raise ShapeError(
            f"concat_channels non-channel mismatch {list(a.shape)} vs {list(b.shape)}"
        )
    return NDTensor.wrap(np.concatenate([a.array, b.array], axis=0))


def slice_channels(x, start, stop):
    """Channels [start, stop) of a clip tensor."""
    return x.slice_axis(CLIP_LAYOUT.axis("C"), start, stop)
