"""
utils.py

Utility functions for GraspLab.
- Input validation helpers shared by the parameter dataclasses.
- Flexible value parsing (measurement CSVs, JSON parameter files).
- Logger factory and deterministic random streams.

Author: GraspLab Team
"""

import logging
import math
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ValidationError


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


def validate_positive(name: str, value: float):
    """
    Raise ValidationError unless value is a finite number > 0.
    """
    if not isinstance(value, (int, float, np.floating, np.integer)) or not math.isfinite(value) or value <= 0:
        raise ValidationError(f"{name} must be a positive number, got {value!r}.")


def validate_non_negative(name: str, value: float, allow_inf: bool = False):
    if not isinstance(value, (int, float, np.floating, np.integer)) or math.isnan(value) or value < 0:
        raise ValidationError(f"{name} must be >= 0, got {value!r}.")
    if math.isinf(value) and not allow_inf:
        raise ValidationError(f"{name} must be finite, got {value!r}.")


def validate_count(name: str, value: int, minimum: int = 1):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < minimum:
        raise ValidationError(f"{name} must be an integer >= {minimum}, got {value!r}.")


def validate_keys(name: str, given: Iterable[str], allowed: Sequence[str]):
    """
    Reject unknown keys in a parameter mapping (JSON parameter files).
    """
    unknown = sorted(set(given) - set(allowed))
    if unknown:
        raise ValidationError(f"Unknown {name} key(s): {', '.join(unknown)}.")


def as_vector(name: str, value, size: int = 3) -> np.ndarray:
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape != (size,) or not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be {size} finite numbers, got {value!r}.")
    return arr


def as_unit_vector(name: str, value, tol: float = 1e-6) -> np.ndarray:
    """
    Return value as a float array of unit length; nearly-unit input is renormalized.
    """
    arr = as_vector(name, value)
    norm = np.linalg.norm(arr)
    if abs(norm - 1.0) > tol:
        raise ValidationError(f"{name} must have unit length, got norm {norm:.6g}.")
    return arr / norm


def rng_for(seed: int, *stream: int) -> np.random.Generator:
    """
    Random generator for work item `stream` under `seed`, independent of scheduling.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed), *[int(s) for s in stream]]))


def clamp(value, min_value, max_value):
    """
    Clamp a numeric value between min_value and max_value.
    """
    return max(min_value, min(value, max_value))


def to_float(value, default: Optional[float] = 0.0):
    """
    Convert value to float, with fallback to default. Blank strings count as missing.
    """
    if isinstance(value, str) and not value.strip():
        return default
    try:
        result = float(value)
    except Exception:
        return default
    return default if math.isnan(result) else result

