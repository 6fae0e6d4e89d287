"""Counter-based seed derivation.

Every random draw in the package descends from one master seed through a
stable (master, *path) -> seed map, so stage seeds are independent: changing
one path component never perturbs draws made under a different path, and
execution order (serial or parallel) cannot change results.
"""

from __future__ import annotations

import hashlib

import numpy as np

_U32 = 2**32


def _component_key(part: int | str) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) % _U32
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def derive_seed(master: int, *path: int | str) -> int:
    """Derive a 32-bit child seed for the stream named by `path`."""
    seq = np.random.SeedSequence(
        entropy=int(master) % _U32,
        spawn_key=tuple(_component_key(p) for p in path),
    )
    return int(seq.generate_state(1, dtype=np.uint32)[0])


def rng_for(master: int, *path: int | str) -> np.random.Generator:
    """Seeded generator for the stream named by `path`."""
    return np.random.default_rng(derive_seed(master, *path))
