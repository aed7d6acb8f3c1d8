"""Small argument-checking helpers shared across the package."""

from __future__ import annotations

import numbers

import numpy as np


def ensure_rng(seed=None) -> np.random.Generator:
    """Coerce ``seed`` into a numpy Generator.

    Accepts None (fresh entropy), an integer, a SeedSequence, or an
    existing Generator (returned unchanged).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (int, np.integer, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise ValueError(f"cannot build a random generator from {seed!r}")


def spawn_seed(master: int, *key: int) -> np.random.SeedSequence:
    """Derive a child SeedSequence from an integer master seed and a path key.

    The derivation is stateless, so streams do not depend on how many
    workers consume them or in which order.
    """
    return np.random.SeedSequence(master, spawn_key=tuple(key))


def check_count(value, name: str, minimum: int = 0) -> int:
    if not isinstance(value, numbers.Integral):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_fraction(value, name: str, *, allow_zero: bool = False,
                   allow_one: bool = True) -> float:
    if not isinstance(value, numbers.Real):
        raise ValueError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    low_ok = value > 0.0 or (allow_zero and value == 0.0)
    high_ok = value < 1.0 or (allow_one and value == 1.0)
    if not (low_ok and high_ok):
        raise ValueError(f"{name}={value} is outside the allowed range")
    return value
