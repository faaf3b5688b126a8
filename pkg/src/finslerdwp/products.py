"""Doubly warped products of Finsler factor metrics.

The combined metric on the product chart is

    F^2(x, u, y, v) = f2(u)^2 F1^2(x, y) + f1(x)^2 F2^2(u, v)

with warping f1 over the first factor's base coordinates and f2 over the
second's.  Global coordinate order is fixed and every downstream block
formula depends on it: base (x^1..x^n1, u^1..u^n2), fiber
(y^1..y^n1, v^1..v^n2).

``split_tensor`` partitions a tensor over global indices into blocks
keyed by the factor membership of each slot; reassembly is lossless.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product as iter_product

import numpy as np

from .metrics import MetricError, Warping

__all__ = [
    "DoublyWarpedProduct",
    "split_tensor",
    "reassemble_tensor",
]


@dataclass(frozen=True)
class DoublyWarpedProduct:
    """The assembled product metric; usable wherever a factor metric is."""

    m1: object
    m2: object
    w1: Warping
    w2: Warping
    family: str = field(default="dwp", init=False)

    def __post_init__(self):
        if self.m1.dim < 2 or self.m2.dim < 2:
            raise MetricError(
                f"factor dimensions must be >= 2, got {self.m1.dim} and {self.m2.dim}"
            )
        if self.w1.dim != self.m1.dim or self.w2.dim != self.m2.dim:
            raise MetricError("warping dimensions must match their factors")

    @property
    def n1(self) -> int:
        return self.m1.dim

    @property
    def n2(self) -> int:
        return self.m2.dim

    @property
    def dim(self) -> int:
        return self.m1.dim + self.m2.dim

    @property
    def quadratic(self) -> bool:
        return self.m1.quadratic and self.m2.quadratic

    # -- index bookkeeping ---------------------------------------------

    def to_local(self, i: int):
        """Global index -> (factor tag, local index); tags are 0 and 1."""
        if i < self.n1:
            return 0, i
        return 1, i - self.n1

    def to_global(self, tag: int, local: int) -> int:
        return local if tag == 0 else self.n1 + local

    def split_point(self, x, y):
        n1 = self.n1
        return (x[:n1], x[n1:]), (y[:n1], y[n1:])

    # -- evaluation -----------------------------------------------------

    def f_squared(self, x, y):
        n1 = self.n1
        x1, x2 = x[:n1], x[n1:]
        y1, y2 = y[:n1], y[n1:]
        f1 = self.w1.value(x1)
        f2 = self.w2.value(x2)
        return (f2 * f2) * self.m1.f_squared(x1, y1) + (f1 * f1) * self.m2.f_squared(
            x2, y2
        )

    def admissible(self, x, y) -> bool:
        (x1, x2), (y1, y2) = self.split_point(np.asarray(x), np.asarray(y))
        if not self.m1.quadratic and np.linalg.norm(y1) < 1e-6:
            return False
        if not self.m2.quadratic and np.linalg.norm(y2) < 1e-6:
            return False
        in_box1 = all(
            lo <= v <= hi for v, (lo, hi) in zip(x1, self.w1.box)
        )
        in_box2 = all(
            lo <= v <= hi for v, (lo, hi) in zip(x2, self.w2.box)
        )
        return (
            in_box1
            and in_box2
            and self.m1.admissible(x1, y1)
            and self.m2.admissible(x2, y2)
        )

    def is_proper(self, base_points1, base_points2, threshold: float = 1e-8) -> bool:
        """Numerically proper: both squared warpings have a gradient above
        ``threshold`` somewhere on the sampled boxes."""
        return (
            self.w1.max_sq_grad_norm(base_points1) > threshold
            and self.w2.max_sq_grad_norm(base_points2) > threshold
        )


def split_tensor(tensor: np.ndarray, n1: int) -> dict:
    """Partition a tensor over global indices into factor blocks.

    Keys are tuples of tags (0 for the first factor, 1 for the second),
    one per slot; values are the corresponding subarrays.
    """
    tensor = np.asarray(tensor)
    rank = tensor.ndim
    slices = (slice(0, n1), slice(n1, None))
    out = {}
    for pattern in iter_product((0, 1), repeat=rank):
        out[pattern] = tensor[tuple(slices[t] for t in pattern)]
    return out


def reassemble_tensor(blocks: dict, n1: int, n2: int) -> np.ndarray:
    """Inverse of :func:`split_tensor`: bitwise-lossless round trip."""
    rank = len(next(iter(blocks)))
    n = n1 + n2
    out = np.zeros((n,) * rank, dtype=next(iter(blocks.values())).dtype)
    slices = (slice(0, n1), slice(n1, None))
    for pattern, block in blocks.items():
        out[tuple(slices[t] for t in pattern)] = block
    return out
