"""Seeded random streams.

Problems are generated from numpy's Philox4x64-10 counter-based bit
generator keyed directly by the seed, so the stream can be reproduced
outside numpy from the published algorithm.  numpy advances the counter
before producing the first block, so the first four 64-bit outputs are the
Philox block for counter 1.
"""
import numpy as np

from .errors import InvalidArgumentError


def make_rng(seed: int) -> np.random.Generator:
    """Generator over ``Philox(key=seed)``."""
    if int(seed) != seed or seed < 0:
        raise InvalidArgumentError(f"seed must be a nonnegative integer, got {seed}")
    return np.random.Generator(np.random.Philox(key=int(seed)))
