import functools
import hashlib
from typing import Iterable, Tuple

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, *labels) -> int:
    """Derive a 64-bit seed from a base seed and a sequence of labels (ints or strings)."""
    unique_str = "_".join([str(int(seed) & _MASK64)] + [str(label) for label in labels])
    hashed = hashlib.sha256(unique_str.encode()).hexdigest()
    return int(hashed[:16], 16)


@functools.lru_cache(maxsize=1 << 16)
def cell_uniforms(seed: int, cell: Tuple[int, ...], stream: int = 0, count: int = 1) -> Tuple[float, ...]:
    """
    Uniform draws attached to one unit cell.

    The generator is a counter-based Philox stream whose key depends on ``(seed, stream)`` and whose
    counter holds the absolute cell coordinate in its upper words (the lowest word counts draws), so a cell sees
    the same numbers whatever region it is sampled in. Supports d ≤ 3.
    """
    key = derive_seed(seed, "cells", stream)
    counter = np.array([0] + [c & _MASK64 for c in cell] + [0] * (3 - len(cell)), dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key, counter=counter))
    return tuple(rng.random(count).tolist())


def region_uniforms(seed: int, cells: Iterable[Tuple[int, ...]], stream: int = 0) -> np.ndarray:
    return np.array([cell_uniforms(seed, tuple(int(c) for c in cell), stream)[0] for cell in cells])
