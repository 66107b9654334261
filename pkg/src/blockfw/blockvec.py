"""Block-structured vectors.

Blocks are indexed from 0. A point of the product domain is a flat float64
array; :class:`BlockLayout` knows where each block lives inside it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class BlockLayout:
    block_sizes: tuple[int, ...]
    offsets: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.block_sizes)
        if len(sizes) == 0:
            raise ValueError("layout needs at least one block")
        if any(s < 1 for s in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        object.__setattr__(self, "block_sizes", sizes)
        object.__setattr__(self, "offsets", tuple(int(o) for o in np.cumsum((0,) + sizes[:-1])))

    @classmethod
    def uniform(cls, size: int, count: int) -> "BlockLayout":
        return cls((size,) * count)

    @property
    def m(self) -> int:
        return len(self.block_sizes)

    @property
    def n(self) -> int:
        return self.offsets[-1] + self.block_sizes[-1]

    def slice(self, i: int) -> slice:
        if not 0 <= i < self.m:
            raise IndexError(f"block index {i} out of range for {self.m} blocks")
        return slice(self.offsets[i], self.offsets[i] + self.block_sizes[i])

    def slices(self) -> list[slice]:
        return [self.slice(i) for i in range(self.m)]


@dataclass(frozen=True)
class BlockVector:
    """A flat coordinate array paired with its layout.

    The data array is made read-only; use :meth:`copy_data` to get a
    writable copy.
    """

    layout: BlockLayout
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64)
        if data.ndim != 1 or data.shape[0] != self.layout.n:
            raise ValueError(f"data has shape {data.shape}, layout expects ({self.layout.n},)")
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    def block(self, i: int) -> np.ndarray:
        return self.data[self.layout.slice(i)]

    def blocks(self) -> list[np.ndarray]:
        return [self.data[s] for s in self.layout.slices()]

    def copy_data(self) -> np.ndarray:
        return self.data.copy()

    def __len__(self):
        return self.layout.n


def block_slice(v: BlockVector, i: int) -> np.ndarray:
    """Coordinates of block ``i`` (a read-only view)."""
    return v.block(i)


def assemble(layout: BlockLayout, blocks: Sequence[np.ndarray]) -> BlockVector:
    if len(blocks) != layout.m:
        raise ValueError(f"expected {layout.m} blocks, got {len(blocks)}")
    for i, b in enumerate(blocks):
        if len(b) != layout.block_sizes[i]:
            raise ValueError(f"block {i} has length {len(b)}, expected {layout.block_sizes[i]}")
    return BlockVector(layout, np.concatenate([np.asarray(b, dtype=np.float64) for b in blocks]))


def block_dot(u: BlockVector, v: BlockVector, i: int) -> float:
    if u.layout != v.layout:
        raise ValueError("layout mismatch")
    return float(np.dot(u.block(i), v.block(i)))
