"""Seed splitting. All randomness in the package derives from here."""
import hashlib

import numpy as np


def derive_seed(seed, *path):
    """Deterministic 64-bit child seed for ``(seed, *path)``."""
    h = hashlib.blake2b(digest_size=8)
    h.update(repr((int(seed),) + tuple(int(p) for p in path)).encode())
    return int.from_bytes(h.digest(), "little")


def rng_for(seed, *path):
    return np.random.Generator(np.random.PCG64(derive_seed(seed, *path)))
