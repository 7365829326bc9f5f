"""Fused reshape-permute-reshape specifications."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["PermSpec", "compose", "gather_index"]


@dataclass(frozen=True)
class PermSpec:
    """Reshape an ``in_shape`` matrix to a tensor of ``dims``, permute its axes
    by ``perm`` (output axis k is input axis ``perm[k]``) and reshape the
    result to ``out_shape``."""

    in_shape: tuple[int, int]
    dims: tuple[int, ...]
    perm: tuple[int, ...]
    out_shape: tuple[int, int]

    def __post_init__(self):
        size = math.prod(self.dims)
        if size != self.in_shape[0] * self.in_shape[1] or size != self.out_shape[0] * self.out_shape[1]:
            raise ValueError(f"inconsistent sizes in {self}")
        if sorted(self.perm) != list(range(len(self.dims))):
            raise ValueError(f"{self.perm} is not a permutation of {len(self.dims)} axes")

    @property
    def size(self) -> int:
        return self.in_shape[0] * self.in_shape[1]

    @property
    def is_identity(self) -> bool:
        """True when the data layout is unchanged (only the matrix shape may differ)."""
        return all(k == p for k, p in enumerate(self.perm))

    @property
    def permuted_dims(self) -> tuple[int, ...]:
        return tuple(self.dims[p] for p in self.perm)

    def apply(self, m: np.ndarray) -> np.ndarray:
        """Reference implementation with numpy reshape/transpose."""
        if m.shape != self.in_shape:
            raise ValueError(f"expected a {self.in_shape} matrix, got {m.shape}")
        return np.ascontiguousarray(m.reshape(self.dims).transpose(self.perm)).reshape(self.out_shape)

    @cached_property
    def index(self) -> np.ndarray:
        return gather_index(self.dims, self.perm)

    def __str__(self) -> str:
        return f"perm=[{','.join(map(str, self.perm))}] dims=[{','.join(map(str, self.dims))}]"


def gather_index(dims, perm) -> np.ndarray:
    """Flat source offsets ``idx`` with ``out.flat[k] = in.flat[idx[k]]``.

    Built from row-major strides of the source tensor; the output is
    enumerated in row-major order over the permuted axes.
    """
    strides = [1] * len(dims)
    for k in range(len(dims) - 2, -1, -1):
        strides[k] = strides[k + 1] * dims[k + 1]
    idx = np.zeros(1, dtype=np.intp)
    for p in perm:
        idx = (idx[:, None] + np.arange(dims[p], dtype=np.intp) * strides[p]).reshape(-1)
    return idx


def compose(first: PermSpec, second: PermSpec) -> PermSpec | None:
    """A single spec equal to applying ``first`` then ``second``.

    Only defined when ``second`` splits its input into exactly the axes that
    ``first`` produced; returns None otherwise.
    """
    if first.out_shape != second.in_shape or first.permuted_dims != second.dims:
        return None
    perm = tuple(first.perm[p] for p in second.perm)
    return PermSpec(first.in_shape, first.dims, perm, second.out_shape)
