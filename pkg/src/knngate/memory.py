"""Immutable labeled memory with exact k-nearest-neighbor queries."""
import struct
from dataclasses import dataclass

import numpy as np

from . import _backend
from ._pykernels import NORM_CODES

MAGIC = b"KNNGMEM\x00"
FILE_VERSION = 1
_HEADER = struct.Struct("<8sIIQII")


class MemoryStore:
    """n labeled points in R^d with a fixed norm.

    Arrays are copied and frozen on construction.
    """

    def __init__(self, points, labels, n_labels, norm="l2"):
        pts = np.array(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError("points must be a non-empty (n, d) array")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        labs = np.array(labels, dtype=np.int64).reshape(-1)
        if labs.size != pts.shape[0]:
            raise ValueError(f"{labs.size} labels for {pts.shape[0]} points")
        if n_labels < 1 or labs.min() < 1 or labs.max() > n_labels:
            raise ValueError(f"labels must lie in 1..{n_labels}")
        if norm not in NORM_CODES:
            raise ValueError(f"norm must be one of {sorted(NORM_CODES)}, got {norm!r}")
        pts = np.ascontiguousarray(pts)
        pts.setflags(write=False)
        labs.setflags(write=False)
        self._points = pts
        self._labels = labs
        self._C = int(n_labels)
        self._norm = norm

    points = property(lambda self: self._points)
    labels = property(lambda self: self._labels)
    n_labels = property(lambda self: self._C)
    norm = property(lambda self: self._norm)

    @property
    def n(self):
        return self._points.shape[0]

    @property
    def d(self):
        return self._points.shape[1]

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"MemoryStore(n={self.n}, d={self.d}, C={self._C}, norm={self._norm!r})"

    def save(self, path):
        header = _HEADER.pack(MAGIC, FILE_VERSION, self.d, self.n, self._C,
                              NORM_CODES[self._norm])
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(self._points.astype("<f8").tobytes())
            fh.write(self._labels.astype("<u4").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) < _HEADER.size:
            raise ValueError(f"{path}: truncated header")
        magic, version, d, n, C, code = _HEADER.unpack_from(raw)
        if magic != MAGIC:
            raise ValueError(f"{path}: not a memory store file")
        if version != FILE_VERSION:
            raise ValueError(f"{path}: unsupported version {version}")
        norms = {v: k for k, v in NORM_CODES.items()}
        if code not in norms:
            raise ValueError(f"{path}: unknown norm code {code}")
        expected = _HEADER.size + n * d * 8 + n * 4
        if len(raw) != expected:
            raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
        off = _HEADER.size
        pts = np.frombuffer(raw, dtype="<f8", count=n * d, offset=off).reshape(n, d)
        labs = np.frombuffer(raw, dtype="<u4", count=n, offset=off + n * d * 8)
        return cls(pts, labs, C, norms[code])


@dataclass(frozen=True)
class NeighborSet:
    indices: np.ndarray
    distances: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        for arr in (self.indices, self.distances, self.labels):
            arr.setflags(write=False)

    @property
    def k(self):
        return self.indices.size

    def __len__(self):
        return self.indices.size


def knn_query(store, x, k):
    """Exact k nearest neighbors of ``x``; equal distances resolve by index."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != store.d:
        raise ValueError(f"query has dimension {x.size}, store has {store.d}")
    if not np.all(np.isfinite(x)):
        raise ValueError("query must be finite")
    k = int(k)
    if not 1 <= k <= store.n:
        raise ValueError(f"k must satisfy 1 <= k <= n = {store.n}, got k = {k}")
    idx, dist = _backend.knn_scan(store.points, x, k, NORM_CODES[store.norm])
    return NeighborSet(idx, np.asarray(dist, dtype=np.float64), store.labels[idx])


def knn_radius(neighbors):
    """Distance to the k-th nearest neighbor."""
    if len(neighbors) == 0:
        raise ValueError("empty neighbor set")
    return float(neighbors.distances[-1])
