"""Seeded clustered embeddings for desk-scale experiments.

Random numbers come from NumPy's Philox-4x64 counter-based generator keyed
by the seed, so a given seed yields the same data on every platform.
"""

from __future__ import annotations

import numpy as np

from krerank.core import EmbeddingSet
from krerank.errors import InvalidArgs


def generate_synthetic(
    n_ids: int,
    per_id: int,
    dim: int,
    noise_sigma: float,
    seed: int,
    n_cams: int = 2,
) -> EmbeddingSet:
    """Draw ``n_ids`` centres uniformly in the unit cube and ``per_id`` noisy points each.

    Rows are grouped by identity; within an identity, cameras cycle
    ``0, 1, ..., n_cams - 1``.
    """
    if n_ids < 2 or per_id < 2:
        raise InvalidArgs("need n_ids >= 2 and per_id >= 2")
    if dim < 1 or n_cams < 1:
        raise InvalidArgs("dim and n_cams must be positive")
    if not noise_sigma >= 0:
        raise InvalidArgs(f"noise_sigma must be non-negative, got {noise_sigma}")
    rng = np.random.Generator(np.random.Philox(seed))
    centers = rng.random((n_ids, dim))
    noise = rng.standard_normal((n_ids, per_id, dim)) * noise_sigma
    data = (centers[:, None, :] + noise).reshape(n_ids * per_id, dim)
    ids = np.repeat(np.arange(n_ids), per_id)
    cams = np.tile(np.arange(per_id) % n_cams, n_ids)
    return EmbeddingSet(data, ids, cams)


def split_probe_gallery(items: EmbeddingSet, probes_per_id: int = 1):
    """Move the first ``probes_per_id`` rows of every identity to the front.

    Returns ``(union, n_probe)`` with probes first, then the gallery, each in
    original row order.
    """
    seen = {}
    probe_rows, gallery_rows = [], []
    for row, pid in enumerate(items.ids.tolist()):
        count = seen.get(pid, 0)
        (probe_rows if count < probes_per_id else gallery_rows).append(row)
        seen[pid] = count + 1
    return items.take(probe_rows + gallery_rows), len(probe_rows)
