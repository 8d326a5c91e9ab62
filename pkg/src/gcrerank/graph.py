"""Exact k-nearest-neighbor similarity graphs.

Each node ``i`` links to its ``k`` nearest rows by squared Euclidean
distance with weight ``exp(-dist / gamma)``. The diagonal is implicit with
weight 1. Graphs are stored in CSR form without the diagonal.
"""

from __future__ import annotations

import csv
import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ._parallel import map_spans
from .errors import GCRError, IoFailure
from .features import FeatureSet

# elements per distance block; bounds temporary memory
_BLOCK_ELEMS = 1 << 22
_MAX_SPAN = 256


class Restrict(str, enum.Enum):
    ALL = "all"
    CROSS_CAMERA = "cross-camera"


@dataclass(frozen=True)
class NeighborGraph:
    """Sparse off-diagonal part of a similarity matrix.

    Row ``i`` holds ``indices[indptr[i]:indptr[i+1]]`` with matching
    ``weights``. For graphs built by :func:`build_graph` the neighbors are in
    ascending distance order; symmetrized graphs are sorted by column.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    symmetric: bool = False
    k: int | None = None
    gamma: float | None = None
    restrict: Restrict = Restrict.ALL

    def __post_init__(self):
        indptr = np.asarray(self.indptr, dtype=np.int64)
        indices = np.asarray(self.indices, dtype=np.int64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if indptr.shape != (self.n + 1,) or indptr[0] != 0 or indptr[-1] != len(indices):
            raise ValueError("indptr does not describe the index array")
        if len(weights) != len(indices):
            raise ValueError("weights and indices differ in length")
        object.__setattr__(self, "indptr", indptr)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "restrict", Restrict(self.restrict))

    @property
    def nnz(self):
        return len(self.indices)

    def neighbors(self, i):
        a, b = self.indptr[i], self.indptr[i + 1]
        return list(zip(self.indices[a:b].tolist(), self.weights[a:b].tolist()))

    def row_ids(self):
        return np.repeat(np.arange(self.n), np.diff(self.indptr))

    def to_csr(self):
        """Off-diagonal part as a scipy CSR matrix (row order preserved)."""
        return sp.csr_matrix((self.weights, self.indices, self.indptr), shape=(self.n, self.n))

    def to_dense(self):
        """Full n x n matrix including the unit diagonal."""
        out = np.eye(self.n)
        out[self.row_ids(), self.indices] = self.weights
        return out

    @classmethod
    def from_lists(cls, lists, symmetric=False, **kw):
        """Build from ``[[(j, w), ...], ...]``; mainly for tests."""
        indptr = np.zeros(len(lists) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([len(row) for row in lists])
        flat = [pair for row in lists for pair in row]
        indices = np.array([j for j, _ in flat], dtype=np.int64)
        weights = np.array([w for _, w in flat], dtype=np.float64)
        return cls(len(lists), indptr, indices, weights, symmetric, **kw)


def _as64(x):
    return np.asarray(x.data if isinstance(x, FeatureSet) else x, dtype=np.float64)


def pairwise_sq_dists(fs, i) -> np.ndarray:
    """Squared distances from row ``i`` to every row, accumulated in float64."""
    x = _as64(fs)
    diff = x - x[i]
    out = (diff * diff).sum(axis=1)
    out[i] = 0.0
    return out


def block_sq_dists(x, y, start, stop):
    """Rows ``start:stop`` of the exact squared-distance matrix between x and y."""
    diff = x[start:stop, None, :] - y[None, :, :]
    return (diff * diff).sum(axis=2)


def knn_select(dists, k, exclude=None, eligible=None) -> np.ndarray:
    """Indices of the ``k`` smallest distances, ties broken by lower index.

    ``exclude`` is never returned; when ``eligible`` (boolean mask) is given
    only those positions are candidates.
    """
    d = np.array(dists, dtype=np.float64)
    valid = np.ones(len(d), dtype=bool) if eligible is None else np.array(eligible, dtype=bool)
    if exclude is not None:
        valid[exclude] = False
    m = min(int(k), int(valid.sum()))
    if m <= 0:
        return np.empty(0, dtype=np.int64)
    d[~valid] = np.inf
    if m < len(d):
        kth = np.partition(d, m - 1)[m - 1]
        cand = np.flatnonzero((d <= kth) & valid)
    else:
        cand = np.flatnonzero(valid)
    order = np.lexsort((cand, d[cand]))
    return cand[order[:m]].astype(np.int64)


def _gram_margin(d):
    # rounding bound on ||x||^2 + ||y||^2 - 2 x.y relative to ||x||^2 + ||y||^2
    return 4.0 * (d + 2) * np.finfo(np.float64).eps


def knn_graph(x, k, gamma, cameras=None, workers=None) -> NeighborGraph:
    """Asymmetric k-NN graph over the rows of ``x``.

    With ``cameras`` given, candidates for row ``i`` are limited to rows on a
    different camera; a row with no such candidate gets an empty list.

    Candidates are prefiltered with the Gram-matrix expansion of the squared
    distance, keeping everything within its rounding bound of the k-th
    value; survivors are re-scored with exact differences, so the selection
    and weights match :func:`pairwise_sq_dists` exactly.
    """
    x = _as64(x)
    n, d = x.shape
    cams = None if cameras is None else np.asarray(cameras)
    sq = np.einsum("ij,ij->i", x, x)
    margin = _gram_margin(d)
    sq_max = float(sq.max()) if n else 0.0

    def work(start, stop):
        approx = sq[start:stop, None] + sq[None, :] - 2.0 * (x[start:stop] @ x.T)
        idx_rows, w_rows = [], []
        for r, i in enumerate(range(start, stop)):
            valid = np.ones(n, dtype=bool) if cams is None else cams != cams[i]
            valid[i] = False
            m = min(int(k), int(valid.sum()))
            if m == 0:
                idx_rows.append(np.empty(0, dtype=np.int64))
                w_rows.append(np.empty(0))
                continue
            row = np.where(valid, approx[r], np.inf)
            kth = np.partition(row, m - 1)[m - 1]
            cand = np.flatnonzero(row <= kth + margin * (sq[i] + sq_max))
            diff = x[cand] - x[i]
            exact = (diff * diff).sum(axis=1)
            order = np.lexsort((cand, exact))[:m]
            idx_rows.append(cand[order])
            w_rows.append(np.exp(-exact[order] / gamma))
        return idx_rows, w_rows

    parts = map_spans(work, n, max(1, min(_MAX_SPAN, _BLOCK_ELEMS // max(1, n))), workers)
    idx = [row for part in parts for row in part[0]]
    wts = [row for part in parts for row in part[1]]
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in idx])
    return NeighborGraph(
        n,
        indptr,
        np.concatenate(idx) if idx else np.empty(0, np.int64),
        np.concatenate(wts) if wts else np.empty(0),
        symmetric=False,
        k=int(k),
        gamma=float(gamma),
        restrict=Restrict.ALL if cams is None else Restrict.CROSS_CAMERA,
    )


def build_graph(fs: FeatureSet, p, restrict=Restrict.ALL, workers=None) -> NeighborGraph:
    restrict = Restrict(restrict)
    cameras = fs.meta.camera if restrict is Restrict.CROSS_CAMERA else None
    return knn_graph(fs.data, p.k, p.gamma, cameras=cameras, workers=workers)


def symmetrize(g: NeighborGraph) -> NeighborGraph:
    """``(A + A.T) / 2``; a missing direction contributes zero."""
    if g.symmetric:
        return g
    a = g.to_csr()
    s = ((a + a.T) * 0.5).tocsr()
    s.sort_indices()
    s.eliminate_zeros()
    return NeighborGraph(
        g.n, s.indptr, s.indices, s.data, symmetric=True, k=g.k, gamma=g.gamma, restrict=g.restrict
    )


def degrees(g: NeighborGraph):
    """Row and column degrees including the unit diagonal."""
    row = 1.0 + np.bincount(g.row_ids(), weights=g.weights, minlength=g.n)
    col = 1.0 + np.bincount(g.indices, weights=g.weights, minlength=g.n)
    return row, col


def cache_sidecar(path) -> Path:
    return Path(path).with_suffix(".json")


def save_graph(g: NeighborGraph, path) -> None:
    """Write ``src,dst,weight`` CSV plus a JSON sidecar."""
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(("src", "dst", "weight"))
            for i, j, w in zip(g.row_ids().tolist(), g.indices.tolist(), g.weights.tolist()):
                writer.writerow((i, j, f"{w:.9g}"))
        side = {
            "n": g.n,
            "k": g.k,
            "gamma": g.gamma,
            "restrict": g.restrict.value,
            "symmetric": g.symmetric,
        }
        cache_sidecar(path).write_text(json.dumps(side, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_graph(path) -> NeighborGraph:
    path = Path(path)
    try:
        side = json.loads(cache_sidecar(path).read_text(encoding="utf-8"))
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["src", "dst", "weight"]:
                raise GCRError(f"bad graph cache header {header}")
            rows = [(int(a), int(b), float(c)) for a, b, c in reader]
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    n = int(side["n"])
    src = np.array([r[0] for r in rows], dtype=np.int64)
    if len(src) and (np.any(np.diff(src) < 0) or src.max() >= n):
        raise GCRError("graph cache rows must be grouped by ascending src")
    indptr = np.zeros(n + 1, dtype=np.int64)
    indptr[1:] = np.cumsum(np.bincount(src, minlength=n))
    return NeighborGraph(
        n,
        indptr,
        np.array([r[1] for r in rows], dtype=np.int64),
        np.array([r[2] for r in rows], dtype=np.float64),
        symmetric=bool(side["symmetric"]),
        k=side.get("k"),
        gamma=side.get("gamma"),
        restrict=side.get("restrict", "all"),
    )
