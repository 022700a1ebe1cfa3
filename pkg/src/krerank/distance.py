"""Original pairwise distances over the probe/gallery union."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from krerank.core import DistanceMatrix, EmbeddingSet, check_size
from krerank.errors import DimensionMismatch, NonPSDMetric

PSD_TOLERANCE = 1e-8
SYMMETRY_TOLERANCE = 1e-5
# Upper bound on elements of the temporary difference tensor per block.
_BLOCK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class MetricSpec:
    """Quadratic-form metric: squared Euclidean or Mahalanobis with matrix ``matrix``."""

    kind: str = "squared-euclidean"
    matrix: np.ndarray = None

    def __post_init__(self):
        if self.kind not in ("squared-euclidean", "mahalanobis"):
            raise ValueError(f"unknown metric kind {self.kind!r}")
        if self.kind == "mahalanobis":
            if self.matrix is None:
                raise ValueError("mahalanobis metric requires a matrix")
            m = np.array(self.matrix, dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise DimensionMismatch(f"metric matrix must be square, got {m.shape}")
            if not np.allclose(m, m.T, rtol=0.0, atol=SYMMETRY_TOLERANCE):
                raise NonPSDMetric("metric matrix is not symmetric")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        elif self.matrix is not None:
            raise ValueError("squared-euclidean metric takes no matrix")

    @classmethod
    def euclidean(cls):
        return cls()

    @classmethod
    def mahalanobis(cls, matrix):
        return cls("mahalanobis", matrix)

    def check_dim(self, dim):
        if self.matrix is not None and self.matrix.shape[0] != dim:
            raise DimensionMismatch(
                f"metric is {self.matrix.shape[0]}-dimensional, features have {dim} dims"
            )


def _quadratic(diff, metric):
    # diff: (..., d). Contractions go through einsum rather than BLAS so that
    # each entry's summation order does not depend on how many rows share a call.
    if metric.matrix is None:
        q = np.einsum("...d,...d->...", diff, diff)
    else:
        t = np.einsum("...d,de->...e", diff, metric.matrix)
        q = np.einsum("...e,...e->...", t, diff)
        if q.size and q.min() < -PSD_TOLERANCE:
            raise NonPSDMetric(f"quadratic form evaluated to {q.min():.3g}")
        np.maximum(q, 0.0, out=q)
    return q


def distances_to(queries, items, metric=MetricSpec()):
    """Distances from each row of ``queries`` to every row of ``items``.

    Entry ``[i, j]`` is bit-identical to the matching entry of
    :func:`pairwise_distance` over any set containing both vectors.
    """
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    items = np.asarray(items, dtype=np.float64)
    if queries.shape[1] != items.shape[1]:
        raise DimensionMismatch(
            f"query dim {queries.shape[1]} != item dim {items.shape[1]}"
        )
    metric.check_dim(items.shape[1])
    out = np.empty((queries.shape[0], items.shape[0]))
    for lo, hi in _blocks(queries.shape[0], items.shape[0] * items.shape[1]):
        out[lo:hi] = _quadratic(items[None, :, :] - queries[lo:hi, None, :], metric)
    return out


def _blocks(n_rows, row_elements):
    step = max(1, _BLOCK_ELEMENTS // max(row_elements, 1))
    return [(lo, min(lo + step, n_rows)) for lo in range(0, n_rows, step)]


def pairwise_distance(
    items: EmbeddingSet, metric: MetricSpec = MetricSpec(), n_probe: int = 0, workers: int = 1
) -> DistanceMatrix:
    """Squared quadratic-form distance between every pair of rows.

    Row blocks are independent and may be spread over ``workers`` threads;
    the result does not depend on the worker count.
    """
    x = items.data
    n = x.shape[0]
    check_size(n)
    metric.check_dim(x.shape[1])
    out = np.empty((n, n))

    def fill(block):
        lo, hi = block
        out[lo:hi] = _quadratic(x[None, :, :] - x[lo:hi, None, :], metric)

    blocks = _blocks(n, x.size)
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, blocks))
    else:
        for block in blocks:
            fill(block)
    return DistanceMatrix(out, n_probe)


def column_max(values):
    """Per-column maxima with zero columns replaced by 1 (left unscaled)."""
    cmax = values.max(axis=0)
    return np.where(cmax > 0, cmax, 1.0)


def normalize_distances(dist: DistanceMatrix) -> DistanceMatrix:
    """Divide each column by its maximum so every entry lies in [0, 1]."""
    return DistanceMatrix(dist.values / column_max(dist.values), dist.n_probe)
