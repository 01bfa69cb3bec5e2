"""Reproducible random streams.

Streams are numpy ``Philox`` (4x64, 10 rounds, counter based) generators
keyed by an integer seed.  Gaussian variates come from the Box-Muller
transform applied to ``Generator.random`` doubles, and Rademacher signs
from thresholding the same doubles at one half, so no version-dependent
ziggurat tables are involved.  Replication ``r`` of an experiment uses
seed ``base_seed + r``.
"""
from __future__ import annotations

import numpy as np

PRNG_NAME = "philox4x64-10+box-muller"
PRNG_VERSION = 1


def make_generator(seed: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    return np.random.Generator(np.random.Philox(int(seed)))


def standard_normal(gen: np.random.Generator, size: int) -> np.ndarray:
    """``size`` iid N(0, 1) draws by Box-Muller, consumed in pairs."""
    pairs = (size + 1) // 2
    u1 = 1.0 - gen.random(pairs)  # in (0, 1], keeps log finite
    u2 = gen.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:size]


def rademacher(gen: np.random.Generator, size: int) -> np.ndarray:
    return np.where(gen.random(size) < 0.5, -1.0, 1.0)


def replication_seed(base_seed: int, r: int) -> int:
    return int(base_seed) + int(r)
