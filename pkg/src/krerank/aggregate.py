"""Final distance, re-ranked lists and the offline/online pipeline split.

Distances are read per item: the distance profile of item ``i`` is column
``i`` of the (column-normalized) matrix, i.e. the raw distances from ``i``
scaled by their own maximum. Neighbour rankings follow the raw distances,
which the per-item scaling does not reorder.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from krerank.core import (
    DistanceMatrix,
    EmbeddingSet,
    RankedResult,
    RerankParams,
    check_size,
    stable_argsort,
    validate_params,
)
from krerank.distance import (
    MetricSpec,
    distances_to,
    normalize_distances,
    pairwise_distance,
)
from krerank.encoding import encode_rows, expand_matrix
from krerank.errors import DimensionMismatch, EmptyGallery
from krerank.jaccard import jaccard_block
from krerank.neighbors import NeighborTable, all_expanded

#: Instrumentation: how often gallery-gallery work was performed.
OP_COUNTS = Counter()


def final_distance(d_orig, d_jaccard, lambda_value):
    """Blend ``(1 - lambda) * d_jaccard + lambda * d_orig``."""
    return (1.0 - lambda_value) * d_jaccard + lambda_value * d_orig


@dataclass(frozen=True)
class RerankOutput:
    """Probe x gallery matrices produced by one pipeline run."""

    original: np.ndarray
    jaccard: np.ndarray
    final: np.ndarray

    def rankings(self):
        return rank_distances(self.final)


def rank_distances(dist_pg) -> list[RankedResult]:
    """Sort each probe row ascending, ties by gallery index."""
    dist_pg = np.asarray(dist_pg, dtype=np.float64)
    order = stable_argsort(dist_pg, axis=1)
    return [
        RankedResult(p, order[p], dist_pg[p, order[p]]) for p in range(dist_pg.shape[0])
    ]


def _jaccard(order, profile_rows, n_total, n_probe, params, workers, binary=False):
    table = NeighborTable(order, n_total)
    sets = all_expanded(table, params.k1)
    features = encode_rows(sets, profile_rows, n_total, binary=binary)
    features = expand_matrix(features, order, params.k2)
    return jaccard_block(features[:n_probe], features[n_probe:], workers=workers)


def _as_distance(items, n_probe, metric, workers):
    if isinstance(items, DistanceMatrix):
        if n_probe is not None and n_probe != items.n_probe:
            raise DimensionMismatch(
                f"n_probe={n_probe} disagrees with the matrix's n_probe={items.n_probe}"
            )
        return items
    if n_probe is None:
        raise TypeError("n_probe is required when passing embeddings")
    return pairwise_distance(items, metric, n_probe=n_probe, workers=workers)


def rerank_components(
    items,
    n_probe=None,
    params: RerankParams = RerankParams(),
    metric: MetricSpec = MetricSpec(),
    normalize: bool = True,
    workers: int = 1,
    binary: bool = False,
) -> RerankOutput:
    """Run the full pipeline and return original, Jaccard and final distances."""
    dist = _as_distance(items, n_probe, metric, workers)
    n, n_probe = dist.n_total, dist.n_probe
    check_size(n)
    if n_probe == n:
        raise EmptyGallery("no gallery items: n_probe equals the item count")
    validate_params(params, n)

    raw = dist.values.T
    scaled = normalize_distances(dist).values.T if normalize else raw
    order = NeighborTable.from_distances(raw, width=params.k1).order
    jac = _jaccard(order, lambda i, s: scaled[i, s], n, n_probe, params, workers, binary)
    original = np.array(scaled[:n_probe, n_probe:])
    return RerankOutput(original, jac, final_distance(original, jac, params.lambda_value))


def rerank(
    items,
    n_probe=None,
    params: RerankParams = RerankParams(),
    metric: MetricSpec = MetricSpec(),
    normalize: bool = True,
    workers: int = 1,
) -> list[RankedResult]:
    """Re-rank the gallery for every probe.

    ``items`` is either an :class:`EmbeddingSet` whose first ``n_probe`` rows
    are probes, or a precomputed :class:`DistanceMatrix`.
    """
    out = rerank_components(items, n_probe, params, metric, normalize, workers)
    return out.rankings()


def original_ranking(items, n_probe=None, metric=MetricSpec(), normalize=True, workers=1):
    """Rank by the (normalized) original distance alone."""
    dist = _as_distance(items, n_probe, metric, workers)
    if dist.n_probe == dist.n_total:
        raise EmptyGallery("no gallery items: n_probe equals the item count")
    scaled = normalize_distances(dist).values.T if normalize else dist.values.T
    return rank_distances(scaled[: dist.n_probe, dist.n_probe :])


@dataclass(frozen=True)
class GalleryIndex:
    """Gallery-side structures computed once and shared by every query.

    ``dist`` holds the raw gallery-gallery distances, ``table`` the
    gallery-only top-``k1`` rankings and ``top_values`` their raw distances.
    A probe's own reciprocal features depend on the probe, so they are
    built per query.
    """

    gallery: EmbeddingSet
    dist: DistanceMatrix
    table: NeighborTable
    top_values: np.ndarray
    col_max: np.ndarray
    params: RerankParams
    metric: MetricSpec
    normalize: bool


def build_gallery_index(
    gallery: EmbeddingSet,
    params: RerankParams = RerankParams(),
    metric: MetricSpec = MetricSpec(),
    normalize: bool = True,
    workers: int = 1,
) -> GalleryIndex:
    n_g = len(gallery)
    validate_params(params, n_g + 1)
    check_size(n_g + 1)
    dist = pairwise_distance(gallery, metric, workers=workers)
    OP_COUNTS["gallery_pairwise"] += 1
    table = NeighborTable.from_distances(dist.values, width=params.k1)
    OP_COUNTS["gallery_ranking"] += 1
    top_values = np.take_along_axis(dist.values, table.order, axis=1)
    top_values.setflags(write=False)
    col_max = dist.values.max(axis=0)
    col_max.setflags(write=False)
    return GalleryIndex(gallery, dist, table, top_values, col_max, params, metric, normalize)


def _union_order(index, probe_row):
    # Top-k1 ranks over {probe} + gallery, probe at union index 0. A gallery
    # item's list is its cached list with the probe spliced in: the probe
    # goes after self and every strictly closer item, before equal ones.
    k1 = index.params.k1
    n_g = len(index.gallery)
    order = np.empty((n_g + 1, k1), dtype=np.int64)
    order[0, 0] = 0
    order[0, 1:] = stable_argsort(probe_row)[: k1 - 1] + 1

    cached = index.table.order + 1
    vals = index.top_values
    w = cached.shape[1]
    pos = 1 + (vals[:, 1:] < probe_row[:, None]).sum(axis=1)
    merged = np.empty((n_g, w + 1), dtype=np.int64)
    cols = np.arange(w + 1)[None, :]
    before = cols < pos[:, None]
    src = np.where(before, cols, cols - 1).clip(0, w - 1)
    merged[:] = np.take_along_axis(cached, src, axis=1)
    merged[cols == pos[:, None]] = 0
    order[1:] = merged[:, :k1]
    return order


def query_one(index: GalleryIndex, probe, workers: int = 1) -> RankedResult:
    """Rank the indexed gallery for a single probe vector.

    Equivalent, bit for bit, to :func:`rerank` over ``[probe] + gallery``.
    """
    probe = np.asarray(probe, dtype=np.float64).ravel()
    if probe.shape[0] != index.gallery.dim:
        raise DimensionMismatch(
            f"probe has {probe.shape[0]} dims, gallery has {index.gallery.dim}"
        )
    if not np.isfinite(probe).all():
        raise ValueError("probe contains non-finite values")
    params = index.params
    n_g = len(index.gallery)
    n = n_g + 1
    probe_row = distances_to(probe, index.gallery.data, index.metric)[0]

    if index.normalize:
        scale = np.empty(n)
        scale[0] = probe_row.max()
        scale[1:] = np.maximum(index.col_max, probe_row)
        scale = np.where(scale > 0, scale, 1.0)
    else:
        scale = np.ones(n)
    gg = index.dist.values

    def profile_rows(i, s):
        s = np.asarray(s)
        if i == 0:
            raw = np.where(s == 0, 0.0, probe_row[np.maximum(s - 1, 0)])
        else:
            raw = np.where(s == 0, probe_row[i - 1], gg[i - 1, np.maximum(s - 1, 0)])
        return raw / scale[i] if index.normalize else raw

    order = _union_order(index, probe_row)
    jac = _jaccard(order, profile_rows, n, 1, params, workers)[0]
    original = probe_row / scale[0] if index.normalize else probe_row
    return rank_distances(final_distance(original, jac, params.lambda_value)[None, :])[0]
