"""Sparse Gaussian-weighted encoding of expanded reciprocal sets.

Features of all items are held together as one CSR matrix (row ``i`` is the
feature of item ``i``); :class:`ReciprocalFeature` is the single-row view
used by the public per-item operations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from krerank.core import DistanceMatrix
from krerank.neighbors import NeighborTable, ReciprocalSet


@dataclass(frozen=True)
class ReciprocalFeature:
    owner: int
    indices: np.ndarray
    weights: np.ndarray
    dimension: int

    @property
    def entries(self):
        return dict(zip(self.indices.tolist(), self.weights.tolist()))

    def dense(self):
        out = np.zeros(self.dimension)
        out[self.indices] = self.weights
        return out


def _values(dist):
    return dist.values if isinstance(dist, DistanceMatrix) else np.asarray(dist)


def kernel_weights(d, binary=False):
    return np.ones(len(d)) if binary else np.exp(-np.asarray(d, dtype=np.float64))


def encode(rset: ReciprocalSet, dist, binary: bool = False) -> ReciprocalFeature:
    """Weight each member ``g`` of ``rset`` by ``exp(-dist[owner, g])``.

    With ``binary=True`` every member gets weight 1. Weights that underflow
    to zero are dropped.
    """
    values = _values(dist)
    idx = np.asarray(rset.members, dtype=np.int64)
    w = kernel_weights(values[rset.owner, idx], binary)
    keep = w > 0
    return ReciprocalFeature(rset.owner, idx[keep], w[keep], values.shape[0])


def encode_rows(sets, row_distances, n_total, binary=False):
    """Build the CSR feature matrix from member arrays.

    ``row_distances(i, members)`` returns the distances from item ``i`` to
    ``members``.
    """
    indptr = np.zeros(len(sets) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(s) for s in sets])
    indices = np.concatenate(sets).astype(np.int64) if sets else np.empty(0, np.int64)
    data = np.concatenate(
        [kernel_weights(row_distances(i, s), binary) for i, s in enumerate(sets)]
    ) if sets else np.empty(0)
    mat = sp.csr_array((data, indices, indptr), shape=(len(sets), n_total))
    mat.eliminate_zeros()
    return mat


def expand_matrix(features, order, k2):
    """Replace each row by the mean of the rows of its ``k2`` nearest items.

    All means read the unexpanded ``features`` snapshot.
    """
    n = features.shape[0]
    cols = np.asarray(order[:, :k2], dtype=np.int64)
    avg = sp.csr_array(
        (np.ones(cols.size), cols.ravel(), np.arange(0, cols.size + 1, k2)),
        shape=(n, features.shape[0]),
    )
    out = (avg @ features).tocsr()
    out.data /= k2
    out.sum_duplicates()
    out.sort_indices()
    out.eliminate_zeros()
    return out


def to_matrix(features):
    rows = sorted(features, key=lambda f: f.owner)
    dim = rows[0].dimension if rows else 0
    indptr = np.concatenate(([0], np.cumsum([len(f.indices) for f in rows]))).astype(np.int64)
    data = np.concatenate([f.weights for f in rows]) if rows else np.empty(0)
    indices = np.concatenate([f.indices for f in rows]) if rows else np.empty(0, np.int64)
    return sp.csr_array((data, indices, indptr), shape=(len(rows), dim))


def from_matrix(mat):
    mat = sp.csr_array(mat)
    mat.sort_indices()
    return [
        ReciprocalFeature(
            i,
            mat.indices[mat.indptr[i]:mat.indptr[i + 1]].astype(np.int64),
            mat.data[mat.indptr[i]:mat.indptr[i + 1]].copy(),
            mat.shape[1],
        )
        for i in range(mat.shape[0])
    ]


def local_query_expansion(
    features: list[ReciprocalFeature], table: NeighborTable, k2: int
) -> list[ReciprocalFeature]:
    """Average every item's feature over its ``k2`` nearest neighbours."""
    table.check_k(k2)
    return from_matrix(expand_matrix(to_matrix(features), table.order, k2))
