"""Helper functions for seeds, sweep strings and formatting."""

from typing import List, Optional, Tuple
import numpy as np
from src.utils.exceptions import InvalidParameterError
from src.utils.validators import validate_seed

# spawn_key prefixes keep placement and trial streams disjoint
PLACEMENT_STREAM = 0
TRIAL_STREAM = 1


def placement_seed(master_seed: int) -> np.random.SeedSequence:
    """
    Seed sequence for building the placement plan of an experiment.

    Args:
        master_seed: Experiment master seed

    Returns:
        SeedSequence(master_seed, spawn_key=(0,))
    """
    return np.random.SeedSequence(validate_seed(master_seed), spawn_key=(PLACEMENT_STREAM,))


def trial_seed(master_seed: int, trial_index: int) -> np.random.SeedSequence:
    """
    Seed sequence for one Monte Carlo trial.

    The trial stream is numpy's SeedSequence hash of the master seed with
    spawn_key (1, trial_index), so every trial owns an independent stream
    no matter which worker runs it.

    Args:
        master_seed: Experiment master seed
        trial_index: Zero-based trial number

    Returns:
        SeedSequence for the trial
    """
    return np.random.SeedSequence(master_seed, spawn_key=(TRIAL_STREAM, trial_index))


def seed_to_int(seq: np.random.SeedSequence) -> int:
    """Collapse a SeedSequence to one 64-bit integer."""
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def parse_sweep(text: str) -> Tuple[str, List[float]]:
    """
    Parse a sweep string such as "k=1,2,3".

    Args:
        text: "<axis>=<v1,v2,...>"

    Returns:
        (axis, values)
    """
    if "=" not in text:
        raise InvalidParameterError(f"Sweep must look like axis=v1,v2,... got {text!r}")
    axis, raw = text.split("=", 1)
    try:
        values = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise InvalidParameterError(f"Sweep values must be numbers, got {raw!r}")
    if not values:
        raise InvalidParameterError("Sweep needs at least one value")
    return axis.strip().lower(), values


def format_sweep(axis: str, values: List[float]) -> str:
    """Inverse of parse_sweep."""
    return f"{axis}=" + ",".join(repr(float(v)) for v in values)


def format_number(value: Optional[float], decimals: int = 4) -> Optional[float]:
    """
    Format number to specified decimal places.

    Args:
        value: Number to format
        decimals: Number of decimal places

    Returns:
        Formatted number or None if value is None
    """
    if value is None:
        return None
    return round(value, decimals)
