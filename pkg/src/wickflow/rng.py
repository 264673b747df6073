"""Seed derivation and counter-based random streams.

All randomness in the package flows from a 64-bit master seed. Replica and
block seeds are derived with :func:`derive_seed`; each seed keys a Philox
counter generator, and Gaussian draws come from the inverse normal CDF so a
given seed always yields the same variates on every platform.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtri

MASK64 = (1 << 64) - 1
# odd constant (2^64 / golden ratio), used to spread replica indices
GOLDEN = 0x9E3779B97F4A7C15


def mix64(x: int) -> int:
    """splitmix64 finalizer. A bijection on 64-bit integers with full avalanche."""
    x &= MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(master: int, replica: int) -> int:
    """Seed for replica ``replica`` of a run keyed by ``master``.

    mix64(master XOR GOLDEN * replica). Both maps are injective for a fixed
    master, so distinct replica indices never collide.
    """
    if replica < 0:
        raise ValueError("replica index must be nonnegative")
    return mix64((master & MASK64) ^ ((GOLDEN * replica) & MASK64))


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed & MASK64))


def uniforms(seed: int, shape) -> np.ndarray:
    """Uniforms on the open interval (0, 1): midpoints of the 2^-53 lattice."""
    u = generator(seed).random(shape)
    return u + 2.0**-54


def normals(seed: int, shape) -> np.ndarray:
    """Standard Gaussians by inverse CDF of :func:`uniforms`."""
    return ndtri(uniforms(seed, shape))
