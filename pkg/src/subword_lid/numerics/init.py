"""Seeded parameter initialisation.

All randomness in the package comes from ``numpy.random.Generator`` backed by
PCG64, which produces the same stream on every platform for a given seed.
"""
from __future__ import annotations

import numpy as np

from .autograd import Parameter


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def glorot(rng: np.random.Generator, shape: tuple, name: str) -> Parameter:
    fan_in, fan_out = (shape[0], shape[-1]) if len(shape) > 1 else (shape[0], shape[0])
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return Parameter(rng.uniform(-bound, bound, size=shape), name=name)


def zeros(shape: tuple, name: str) -> Parameter:
    return Parameter(np.zeros(shape), name=name)
