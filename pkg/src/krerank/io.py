"""Reading and writing features, distance matrices and rankings.

KRF1 feature files are laid out as::

    b"KRF1"                      4 bytes
    rows, dim, flags             3 x little-endian uint32
    data                         rows * dim little-endian float32, row-major
    ids    (if flags & 1)        rows little-endian int32
    cams   (if flags & 2)        rows little-endian int32
"""

from __future__ import annotations

import csv
import struct
import warnings
from pathlib import Path

import numpy as np

from krerank.core import UNKNOWN_CAM, DistanceMatrix, EmbeddingSet, RankedResult
from krerank.distance import SYMMETRY_TOLERANCE
from krerank.errors import (
    AsymmetryWarning,
    BadMagic,
    NonFiniteValue,
    NotSquare,
    TruncatedFile,
)

MAGIC = b"KRF1"
HAS_IDS = 1
HAS_CAMS = 2
_HEADER = struct.Struct("<4sIII")


def _first_bad_row(values):
    bad = ~np.isfinite(values).all(axis=1)
    return int(np.flatnonzero(bad)[0]) if bad.any() else None


def save_features(path, items: EmbeddingSet, ids=True, cams=True):
    n, d = items.data.shape
    flags = (HAS_IDS if ids else 0) | (HAS_CAMS if cams else 0)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, n, d, flags))
        fh.write(np.ascontiguousarray(items.data, dtype="<f4").tobytes())
        if ids:
            fh.write(items.ids.astype("<i4").tobytes())
        if cams:
            fh.write(items.cams.astype("<i4").tobytes())


def read_krf(raw: bytes) -> EmbeddingSet:
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, got {raw[:4]!r}")
    if len(raw) < _HEADER.size:
        raise TruncatedFile("header is incomplete")
    _, n, d, flags = _HEADER.unpack_from(raw)
    n_labels = bool(flags & HAS_IDS) + bool(flags & HAS_CAMS)
    expected = _HEADER.size + 4 * n * d + 4 * n * n_labels
    if len(raw) != expected:
        raise TruncatedFile(f"declared sizes need {expected} bytes, file has {len(raw)}")
    offset = _HEADER.size
    data = np.frombuffer(raw, dtype="<f4", count=n * d, offset=offset).reshape(n, d)
    offset += 4 * n * d
    bad = _first_bad_row(data)
    if bad is not None:
        raise NonFiniteValue(bad)
    ids = cams = None
    if flags & HAS_IDS:
        ids = np.frombuffer(raw, dtype="<i4", count=n, offset=offset)
        offset += 4 * n
    if flags & HAS_CAMS:
        cams = np.frombuffer(raw, dtype="<i4", count=n, offset=offset)
    return EmbeddingSet(data.astype(np.float64), ids, cams)


def save_features_csv(path, items: EmbeddingSet):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(items.dim)] + ["id", "cam"])
        for row, pid, cam in zip(items.data.tolist(), items.ids.tolist(), items.cams.tolist()):
            writer.writerow([repr(v) for v in row] + [pid, cam])


def read_features_csv(path) -> EmbeddingSet:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        feat_cols = [i for i, h in enumerate(header) if h.startswith("f") and h[1:].isdigit()]
        if not feat_cols:
            raise ValueError(f"{path}: no feature columns named f0..f<d-1>")
        id_col = header.index("id") if "id" in header else None
        cam_col = header.index("cam") if "cam" in header else None
        data, ids, cams = [], [], []
        for row_no, row in enumerate(reader):
            values = [float(row[i]) for i in feat_cols]
            if not np.isfinite(values).all():
                raise NonFiniteValue(row_no)
            data.append(values)
            if id_col is not None:
                ids.append(int(row[id_col]))
            if cam_col is not None:
                cams.append(int(row[cam_col]))
    return EmbeddingSet(
        np.array(data, dtype=np.float64),
        ids if id_col is not None else None,
        cams if cam_col is not None else None,
    )


def load_features(path) -> EmbeddingSet:
    """Load a KRF1 file, or a CSV file (by ``.csv`` suffix)."""
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return read_features_csv(path)
    return read_krf(path.read_bytes())


def _read_matrix(path):
    path = Path(path)
    if path.suffix.lower() == ".npy":
        values = np.load(path, allow_pickle=False)
    else:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
        widths = {len(r) for r in rows}
        if len(widths) > 1:
            raise NotSquare(f"{path}: ragged rows")
        values = np.array([[float(v) for v in r] for r in rows], dtype=np.float64)
    return np.atleast_2d(np.asarray(values, dtype=np.float64))


def load_matrix(path):
    """Plain numeric matrix from ``.npy`` or headerless CSV."""
    return _read_matrix(path)


def load_distance_matrix(path, n_probe: int) -> DistanceMatrix:
    """Load a square distance matrix; asymmetric input is averaged with its transpose."""
    values = _read_matrix(path)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise NotSquare(f"distance matrix has shape {values.shape}")
    bad = _first_bad_row(values)
    if bad is not None:
        raise NonFiniteValue(bad)
    gap = np.abs(values - values.T).max() if values.size else 0.0
    if gap > SYMMETRY_TOLERANCE:
        warnings.warn(
            f"distance matrix asymmetric by up to {gap:.3g}; symmetrized by averaging",
            AsymmetryWarning,
            stacklevel=2,
        )
    return DistanceMatrix((values + values.T) / 2, n_probe)


def save_distance_matrix(path, dist: DistanceMatrix):
    path = Path(path)
    if path.suffix.lower() == ".npy":
        np.save(path, dist.values)
        return
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows([repr(v) for v in row] for row in dist.values.tolist())


RANKING_HEADER = ["probe_index", "rank", "gallery_index", "final_distance"]


def write_rankings(fh, results):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(RANKING_HEADER)
    for res in results:
        for rank, (g, d) in enumerate(zip(res.order.tolist(), res.distances.tolist())):
            writer.writerow([res.probe_index, rank, g, repr(d)])


def save_rankings(path, results):
    with open(path, "w", newline="") as fh:
        write_rankings(fh, results)


def load_rankings(path) -> list[RankedResult]:
    rows = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for rec in reader:
            rows.setdefault(int(rec["probe_index"]), []).append(
                (int(rec["rank"]), int(rec["gallery_index"]), float(rec["final_distance"]))
            )
    out = []
    for p, entries in rows.items():
        entries.sort()
        out.append(RankedResult(p, [e[1] for e in entries], [e[2] for e in entries]))
    return out


def load_labels(path):
    """``id,cam`` CSV with one row per item (probes first); returns two arrays."""
    ids, cams = [], []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            ids.append(int(rec["id"]))
            cams.append(int(rec["cam"]) if rec.get("cam") not in (None, "") else UNKNOWN_CAM)
    return np.array(ids, dtype=np.int64), np.array(cams, dtype=np.int64)
