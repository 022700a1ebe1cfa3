"""Shared domain types, parameter validation and deterministic ordering."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from krerank.errors import (
    DimensionMismatch,
    InvalidParams,
    NonFiniteValue,
    TooManyItems,
)

#: Camera label used when cameras are unknown.
UNKNOWN_CAM = -1

DEFAULT_MAX_ITEMS = 30_000


def _frozen(arr):
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EmbeddingSet:
    """Feature vectors (one per row) with identity and camera labels."""

    data: np.ndarray
    ids: np.ndarray = None
    cams: np.ndarray = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise DimensionMismatch(
                f"embedding data must be a non-empty 2-D matrix, got shape {data.shape}"
            )
        bad = ~np.isfinite(data).all(axis=1)
        if bad.any():
            raise NonFiniteValue(int(np.flatnonzero(bad)[0]))
        n = data.shape[0]
        ids = np.arange(n) if self.ids is None else np.asarray(self.ids)
        cams = np.full(n, UNKNOWN_CAM) if self.cams is None else np.asarray(self.cams)
        if ids.shape != (n,) or cams.shape != (n,):
            raise DimensionMismatch("ids and cams must have one entry per row")
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "ids", _frozen(ids.astype(np.int64)))
        object.__setattr__(self, "cams", _frozen(cams.astype(np.int64)))

    def __len__(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]

    def take(self, rows):
        rows = np.asarray(rows)
        return EmbeddingSet(self.data[rows], self.ids[rows], self.cams[rows])

    @staticmethod
    def concat(first, second):
        return EmbeddingSet(
            np.vstack([first.data, second.data]),
            np.concatenate([first.ids, second.ids]),
            np.concatenate([first.cams, second.cams]),
        )


@dataclass(frozen=True)
class RerankParams:
    k1: int = 20
    k2: int = 6
    lambda_value: float = 0.3

    def __post_init__(self):
        for name in ("k1", "k2"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < 1:
                raise InvalidParams(name, f"must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        object.__setattr__(self, "lambda_value", float(self.lambda_value))

    @property
    def half(self):
        """Inner neighbourhood size used during set expansion, rounded half up."""
        return (self.k1 + 1) // 2


def validate_params(params: RerankParams, n_total: int) -> RerankParams:
    """Check ``params`` against a union of ``n_total`` items.

    Returns ``params`` itself so calls can be chained.
    """
    if params.k2 > params.k1:
        raise InvalidParams("k2", f"k2={params.k2} exceeds k1={params.k1}")
    if params.k1 >= n_total:
        raise InvalidParams("k1", f"k1={params.k1} must be < total item count {n_total}")
    lam = params.lambda_value
    if not (0.0 <= lam <= 1.0):
        raise InvalidParams("lambda", f"lambda={lam} outside [0, 1]")
    return params


@dataclass(frozen=True)
class DistanceMatrix:
    """Dense pairwise distances over probes followed by gallery items."""

    values: np.ndarray
    n_probe: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise DimensionMismatch(f"distance matrix must be square, got {values.shape}")
        if not 0 <= self.n_probe <= values.shape[0]:
            raise DimensionMismatch(f"n_probe={self.n_probe} out of range")
        bad = ~np.isfinite(values).all(axis=1)
        if bad.any():
            raise NonFiniteValue(int(np.flatnonzero(bad)[0]))
        if (values < 0).any():
            raise ValueError("distances must be non-negative")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "n_probe", int(self.n_probe))

    @property
    def n_total(self):
        return self.values.shape[0]

    @property
    def n_gallery(self):
        return self.n_total - self.n_probe


@dataclass(frozen=True)
class RankedResult:
    """Gallery ranking for one probe.

    ``order`` holds gallery indices (0-based within the gallery) and
    ``distances`` the final distance of each entry of ``order``.
    """

    probe_index: int
    order: np.ndarray
    distances: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "order", _frozen(np.asarray(self.order, dtype=np.int64)))
        object.__setattr__(
            self, "distances", _frozen(np.asarray(self.distances, dtype=np.float64))
        )


def stable_argsort(values, axis=-1):
    """Ascending argsort with ties resolved by ascending index."""
    return np.argsort(values, axis=axis, kind="stable")


def max_items():
    """Largest union size the engine accepts (``KRE_MAX_ITEMS`` overrides)."""
    raw = os.environ.get("KRE_MAX_ITEMS")
    return int(raw) if raw else DEFAULT_MAX_ITEMS


def check_size(n_total):
    cap = max_items()
    if n_total > cap:
        raise TooManyItems(
            f"{n_total} items exceed the cap of {cap}; the dense distance matrix would "
            f"need {n_total * n_total * 8 / 1e9:.1f} GB (set KRE_MAX_ITEMS to raise it)"
        )
