from __future__ import annotations

import math

from ..errors import InputError


def downsample_frames(horizon: int, budget: int) -> list[int]:
    """Evenly spaced timestep indices including the first and last step."""
    if budget < 2:
        raise InputError("frame budget must be >= 2")
    if horizon < 2:
        raise InputError("trajectory horizon must be >= 2")
    if horizon <= budget:
        return list(range(horizon))
    span = (horizon - 1) / (budget - 1)
    # floor(x + 0.5) keeps indices strictly increasing when span >= 1
    return [int(math.floor(i * span + 0.5)) for i in range(budget)]
