"""Deterministic seed derivation.

Every random draw in the package goes through a generator built here, so a
single master seed pins down all outputs. Sub-seeds are derived by hashing the
base seed together with string/int tags (dataset id, fold index, submodule
name, class index, ...), which keeps the randomness of one axis of a grid run
independent from every other axis.
"""

from __future__ import annotations

import hashlib

import numpy as np

_U64 = (1 << 64) - 1


def derive_seed(base: int, *parts) -> int:
    """Mix ``base`` and ``parts`` into a stable 64-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    h.update(str(int(base) & _U64).encode())
    for part in parts:
        h.update(b"\x1f")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "big")


def derived_rng(base: int, *parts) -> np.random.Generator:
    """A PCG64 generator keyed by ``derive_seed(base, *parts)``."""
    return np.random.default_rng(derive_seed(base, *parts))
