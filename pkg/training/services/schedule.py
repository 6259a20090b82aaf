"""
Learning-rate schedule: linear warm-up followed by a half-cosine decay.
"""

import math

from core.exceptions import ConfigError


def lr_at(step, total_steps, warmup_steps, lr_max):
    """
    Learning rate of SGD step `step` (0-based) out of total_steps.

    Ramps linearly from 0 to lr_max over warmup_steps, then follows
    lr_max * 0.5 * (1 + cos(pi * (step - warmup) / (total - warmup))).
    """
    if not 0 <= step <= total_steps:
        raise ConfigError(f"step {step} outside [0, {total_steps}]")
    if not 0 <= warmup_steps < total_steps:
        raise ConfigError(f"warmup_steps {warmup_steps} outside [0, {total_steps})")
    if step < warmup_steps:
        return lr_max * step / warmup_steps
    progress = (step - warmup_steps) / (total_steps - warmup_steps)
    return lr_max * 0.5 * (1.0 + math.cos(math.pi * progress))
