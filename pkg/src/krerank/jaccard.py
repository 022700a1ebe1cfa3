"""Jaccard distance between reciprocal features via element-wise min/max sums."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.sparse as sp

from krerank.encoding import ReciprocalFeature, to_matrix
from krerank.errors import DegenerateFeaturesWarning

# The max-sum is derived as |a|_1 + |b|_1 - min-sum; both the pairwise and the
# matrix routine accumulate left to right in ascending item order so that the
# two agree bit for bit and identical features give exactly 0.


def _seqsum(x):
    return float(np.cumsum(x)[-1]) if len(x) else 0.0


def _ratio_distance(smin, smax):
    with np.errstate(divide="ignore", invalid="ignore"):
        d = 1.0 - smin / smax
    return np.clip(np.where(smax > 0, d, 1.0), 0.0, 1.0)


def jaccard_distance(a: ReciprocalFeature, b: ReciprocalFeature) -> float:
    if a.dimension != b.dimension:
        raise ValueError(f"dimension mismatch: {a.dimension} vs {b.dimension}")
    if len(a.indices) == 0 and len(b.indices) == 0:
        warnings.warn("both features are empty", DegenerateFeaturesWarning, stacklevel=2)
        return 1.0
    _, ia, ib = np.intersect1d(a.indices, b.indices, assume_unique=True, return_indices=True)
    smin = _seqsum(np.minimum(a.weights[ia], b.weights[ib]))
    smax = (_seqsum(a.weights) + _seqsum(b.weights)) - smin
    return float(_ratio_distance(smin, smax))


def _row_norms(mat):
    rows = np.repeat(np.arange(mat.shape[0]), np.diff(mat.indptr))
    return np.bincount(rows, weights=mat.data, minlength=mat.shape[0])


def _gather(csc, cols):
    # flat positions of every stored entry in the given columns, column by column
    starts = csc.indptr[cols]
    lens = csc.indptr[cols + 1] - starts
    offsets = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return offsets + np.arange(lens.sum()), lens


def jaccard_block(probes, gallery, workers=1):
    """Distances between every row of ``probes`` and every row of ``gallery``.

    Both arguments are CSR matrices with sorted indices.
    """
    probes = sp.csr_array(probes)
    gallery = sp.csr_array(gallery)
    probes.sort_indices()
    gallery.sort_indices()
    n_p, n_g = probes.shape[0], gallery.shape[0]
    g_norm = _row_norms(gallery)
    p_norm = _row_norms(probes)
    csc = gallery.tocsc()
    csc.sort_indices()
    out = np.empty((n_p, n_g))

    def fill(rows):
        for p in rows:
            lo, hi = probes.indptr[p], probes.indptr[p + 1]
            idx, lens = _gather(csc, probes.indices[lo:hi])
            mins = np.minimum(np.repeat(probes.data[lo:hi], lens), csc.data[idx])
            smin = np.bincount(csc.indices[idx], weights=mins, minlength=n_g)
            smax = (p_norm[p] + g_norm) - smin
            out[p] = _ratio_distance(smin, smax)

    chunks = np.array_split(np.arange(n_p), max(1, min(workers, n_p)))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, chunks))
    else:
        fill(range(n_p))
    empty = (np.diff(probes.indptr) == 0)[:, None] & (np.diff(gallery.indptr) == 0)[None, :]
    if empty.any():
        warnings.warn(
            f"{int(empty.sum())} probe/gallery pairs have empty features; distance set to 1.0",
            DegenerateFeaturesWarning,
            stacklevel=2,
        )
    return out


def jaccard_matrix(features, n_probe: int, workers: int = 1) -> np.ndarray:
    """``n_probe x n_gallery`` Jaccard distances; probes are the first rows."""
    mat = features if sp.issparse(features) else to_matrix(features)
    mat = sp.csr_array(mat)
    return jaccard_block(mat[:n_probe], mat[n_probe:], workers=workers)
