"""Test fixtures for the dynbound package."""

from .configs import (
    BAD_TAU,
    HELESHAW_DESK,
    HELESHAW_SMALL,
    HELESHAW_UNFORCED,
    INTERVAL_DEADZONE,
    LINEAR_SWEEP,
    SHIFTED_MEAN,
    SINGLE_MODE,
    TWO_GRAPH,
    ZERO_DATA,
    write_config,
)

__all__ = [
    "ZERO_DATA",
    "HELESHAW_SMALL",
    "HELESHAW_UNFORCED",
    "HELESHAW_DESK",
    "INTERVAL_DEADZONE",
    "TWO_GRAPH",
    "SHIFTED_MEAN",
    "SINGLE_MODE",
    "LINEAR_SWEEP",
    "BAD_TAU",
    "write_config",
]
