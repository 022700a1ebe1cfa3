"""Reference re-ranking baselines."""

from __future__ import annotations

import numpy as np

from krerank.aggregate import rank_distances
from krerank.core import EmbeddingSet, RankedResult
from krerank.distance import MetricSpec, distances_to
from krerank.errors import EmptyGallery, KTooLarge


def average_query_expansion(
    items: EmbeddingSet, n_probe: int, k: int = 5, metric: MetricSpec = MetricSpec()
) -> list[RankedResult]:
    """Average query expansion (single round).

    Each probe is replaced by the mean of itself and its ``k`` top-ranked
    gallery vectors, and the gallery is ranked again against that mean.
    ``k=0`` reproduces the original ranking.
    """
    probes = items.data[:n_probe]
    gallery = items.data[n_probe:]
    if gallery.shape[0] == 0:
        raise EmptyGallery("no gallery items")
    if k < 0 or k >= gallery.shape[0]:
        raise KTooLarge(f"k={k} must be in [0, {gallery.shape[0]})")
    initial = distances_to(probes, gallery, metric)
    top = np.argsort(initial, axis=1, kind="stable")[:, :k]
    queries = np.stack(
        [np.vstack([probes[p], gallery[top[p]]]).mean(axis=0) for p in range(n_probe)]
    ) if n_probe else np.empty((0, items.dim))
    return rank_distances(distances_to(queries, gallery, metric))
