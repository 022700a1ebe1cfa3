"""CMC and mAP under the single-query protocol with optional junk removal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from krerank.core import EmbeddingSet
from krerank.errors import LabelMismatch

JUNK_POLICIES = ("none", "camid")


@dataclass(frozen=True)
class GroundTruth:
    """Identity/camera labels of probes and gallery.

    With ``junk="camid"`` gallery items sharing both identity and camera
    with the probe are dropped from that probe's list before scoring.
    """

    probe_ids: np.ndarray
    gallery_ids: np.ndarray
    probe_cams: np.ndarray = None
    gallery_cams: np.ndarray = None
    junk: str = "none"

    def __post_init__(self):
        if self.junk not in JUNK_POLICIES:
            raise ValueError(f"junk policy must be one of {JUNK_POLICIES}, got {self.junk!r}")
        for name in ("probe_ids", "gallery_ids", "probe_cams", "gallery_cams"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, np.asarray(value, dtype=np.int64))
        if self.junk == "camid" and (self.probe_cams is None or self.gallery_cams is None):
            raise LabelMismatch("junk policy 'camid' needs camera labels")
        for ids, cams, side in (
            (self.probe_ids, self.probe_cams, "probe"),
            (self.gallery_ids, self.gallery_cams, "gallery"),
        ):
            if cams is not None and cams.shape != ids.shape:
                raise LabelMismatch(f"{side} cams and ids differ in length")

    @classmethod
    def from_sets(cls, probes: EmbeddingSet, gallery: EmbeddingSet, junk="none"):
        return cls(probes.ids, gallery.ids, probes.cams, gallery.cams, junk)


@dataclass(frozen=True)
class EvalReport:
    cmc: np.ndarray
    map: float
    n_valid_probes: int
    ap: np.ndarray = None

    @property
    def rank1(self):
        return float(self.cmc[0]) if len(self.cmc) else 0.0

    def to_text(self, ranks=(1, 5, 10, 20)):
        lines = [f"mAP: {self.map:.2%}"]
        lines += [
            f"Rank-{r:<3d} {self.cmc[r - 1]:.2%}" for r in ranks if r <= len(self.cmc)
        ]
        lines.append(f"valid probes: {self.n_valid_probes}")
        return "\n".join(lines)

    def to_csv(self):
        rows = ["rank,cmc"] + [f"{r + 1},{v!r}" for r, v in enumerate(self.cmc.tolist())]
        rows.append(f"map,{self.map!r}")
        rows.append(f"n_valid_probes,{self.n_valid_probes}")
        return "\n".join(rows) + "\n"


def average_precision(matches):
    """Mean precision at the rank of every positive in a 0/1 relevance list."""
    matches = np.asarray(matches, dtype=bool)
    hits = np.flatnonzero(matches)
    if hits.size == 0:
        return 0.0
    precision = np.arange(1, hits.size + 1) / (hits + 1)
    return float(precision.mean())


def evaluate(results, truth: GroundTruth, max_rank: int = 50) -> EvalReport:
    """Score ranked lists; probes without any valid positive are skipped."""
    n_g = len(truth.gallery_ids)
    if len(results) != len(truth.probe_ids):
        raise LabelMismatch(
            f"{len(results)} rankings for {len(truth.probe_ids)} probe labels"
        )
    hit_ranks = []
    aps = []
    for res in results:
        order = np.asarray(res.order)
        if order.shape[0] != n_g:
            raise LabelMismatch(f"ranking has {order.shape[0]} entries, gallery has {n_g}")
        p = res.probe_index
        ids = truth.gallery_ids[order]
        keep = np.ones(n_g, dtype=bool)
        if truth.junk == "camid":
            cams = truth.gallery_cams[order]
            keep = ~((ids == truth.probe_ids[p]) & (cams == truth.probe_cams[p]))
        matches = ids[keep] == truth.probe_ids[p]
        if not matches.any():
            continue
        hit_ranks.append(int(np.argmax(matches)))
        aps.append(average_precision(matches))
    n_valid = len(aps)
    if n_valid == 0:
        return EvalReport(np.zeros(max_rank), 0.0, 0, np.empty(0))
    first = np.asarray(hit_ranks)
    cmc = (first[None, :] < np.arange(1, max_rank + 1)[:, None]).sum(axis=1) / n_valid
    aps = np.asarray(aps)
    # np.sum uses pairwise summation, keeping the mean stable under reordering
    return EvalReport(cmc, float(np.sum(aps) / n_valid), n_valid, aps)
