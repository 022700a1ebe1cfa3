"""k-nearest, k-reciprocal and expanded k-reciprocal neighbour sets.

Every item is its own nearest neighbour: rows of a :class:`NeighborTable`
start with the item itself, followed by the remaining items in ascending
distance with ties broken by ascending index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from krerank.core import stable_argsort
from krerank.errors import KTooLarge


def half_size(k1):
    """``k1 / 2`` rounded half away from zero (7 -> 4, 20 -> 10)."""
    return (k1 + 1) // 2


@dataclass(frozen=True)
class NeighborTable:
    """Per-item neighbour ranking (leading ``width`` columns of the argsort)."""

    order: np.ndarray
    n_total: int

    @property
    def width(self):
        return self.order.shape[1]

    @classmethod
    def from_distances(cls, dist, width=None):
        """Rank every row of the square matrix ``dist``.

        Only the first ``width`` ranks are stored (all of them by default).
        """
        dist = np.asarray(dist)
        n = dist.shape[0]
        width = n if width is None else min(width, n)
        order = np.empty((n, width), dtype=np.int64)
        step = max(1, (1 << 22) // max(n, 1))
        for lo in range(0, n, step):
            hi = min(lo + step, n)
            block = np.array(dist[lo:hi], dtype=np.float64)
            # distances are non-negative, so -1 pins each item to rank 0
            block[np.arange(hi - lo), np.arange(lo, hi)] = -1.0
            order[lo:hi] = stable_argsort(block, axis=1)[:, :width]
        order.setflags(write=False)
        return cls(order, n)

    def check_k(self, k):
        if k < 1:
            raise KTooLarge(f"k must be positive, got {k}")
        if k >= self.n_total:
            raise KTooLarge(f"k={k} must be < item count {self.n_total}")
        if k > self.width:
            raise KTooLarge(f"k={k} exceeds the {self.width} ranks stored in the table")


@dataclass(frozen=True)
class ReciprocalSet:
    owner: int
    members: np.ndarray

    def __contains__(self, item):
        i = np.searchsorted(self.members, item)
        return i < len(self.members) and self.members[i] == item

    def __len__(self):
        return len(self.members)

    def as_set(self):
        return set(self.members.tolist())


def k_nearest(table: NeighborTable, item: int, k: int) -> np.ndarray:
    table.check_k(k)
    return table.order[item, :k].copy()


def k_reciprocal(table: NeighborTable, item: int, k: int) -> ReciprocalSet:
    table.check_k(k)
    cand = table.order[item, :k]
    mutual = (table.order[cand, :k] == item).any(axis=1)
    return ReciprocalSet(item, np.sort(cand[mutual]))


def all_reciprocal(table: NeighborTable, k: int) -> list[np.ndarray]:
    """Sorted member arrays of ``R(i, k)`` for every item ``i``."""
    table.check_k(k)
    n = table.n_total
    cand = table.order[:, :k]
    out = []
    step = max(1, (1 << 22) // (k * k))
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        back = table.order[cand[lo:hi], :k]
        mutual = (back == np.arange(lo, hi)[:, None, None]).any(axis=2)
        out.extend(np.sort(c[m]) for c, m in zip(cand[lo:hi], mutual))
    return out


def _expand(base, inner, n_total):
    # base: R(p, k1); inner: R(., half) for every item. Candidates are tested
    # against the original base, never the partially grown set.
    if len(base) == 0:
        return base
    in_base = np.zeros(n_total, dtype=bool)
    in_base[base] = True
    pieces = [inner[q] for q in base]
    sizes = np.array([len(p) for p in pieces])
    flat = np.concatenate(pieces)
    segment = np.repeat(np.arange(len(pieces)), sizes)
    overlap = np.bincount(segment[in_base[flat]], minlength=len(pieces))
    keep = 3 * overlap >= 2 * sizes
    grown = [base] + [p for p, ok in zip(pieces, keep) if ok]
    return np.unique(np.concatenate(grown))


def expand_reciprocal(table: NeighborTable, item: int, k1: int) -> ReciprocalSet:
    """Grow ``R(item, k1)`` with the half-size reciprocal sets of its members.

    A member ``q`` contributes ``R(q, h)`` (``h = half_size(k1)``) when at
    least two thirds of ``R(q, h)`` already lies in ``R(item, k1)``.
    """
    table.check_k(k1)
    h = half_size(k1)
    base = k_reciprocal(table, item, k1).members
    inner = {int(q): k_reciprocal(table, int(q), h).members for q in base}
    return ReciprocalSet(item, _expand(base, inner, table.n_total))


def all_expanded(table: NeighborTable, k1: int) -> list[np.ndarray]:
    """Expanded sets ``R*(i, k1)`` for every item."""
    outer = all_reciprocal(table, k1)
    inner = all_reciprocal(table, half_size(k1))
    return [_expand(base, inner, table.n_total) for base in outer]
