"""Feature propagation over k-NN graphs.

One step maps ``X`` to ``D_r^{-1/2} A D_c^{-1/2} X`` where ``A`` includes the
unit diagonal. For a symmetrized graph the two degree vectors coincide.
All sums are taken in float64 against a frozen copy of the input.
"""

from __future__ import annotations

import time
from contextlib import contextmanager

import numpy as np

from ._parallel import map_spans
from .errors import GraphSizeMismatch
from .features import FeatureSet, normalize_array
from .graph import degrees, knn_graph, symmetrize

ROW_SPAN = 256
_LOCAL_BLOCK_ELEMS = 1 << 21


class Timer:
    """Accumulates wall time per named phase."""

    def __init__(self):
        self.totals = {}

    @contextmanager
    def phase(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.totals[name] = self.totals.get(name, 0.0) + time.perf_counter() - t0


@contextmanager
def _maybe(timer, name):
    if timer is None:
        yield
    else:
        with timer.phase(name):
            yield


class _Operator:
    """``D_r^{-1/2} A D_c^{-1/2}`` prepared once for reuse across rounds."""

    def __init__(self, g):
        d_row, d_col = degrees(g)
        self.n = g.n
        self.a = g.to_csr()
        self.row_scale = 1.0 / np.sqrt(d_row)
        self.col_scale = 1.0 / np.sqrt(d_col)

    def apply(self, x, workers=None):
        if self.n != x.shape[0]:
            raise GraphSizeMismatch(f"graph has {self.n} nodes, features have {x.shape[0]} rows")
        y = x * self.col_scale[:, None]
        a, scale = self.a, self.row_scale

        def work(start, stop):
            return scale[start:stop, None] * (y[start:stop] + a[start:stop] @ y)

        return np.vstack(map_spans(work, self.n, ROW_SPAN, workers))


def propagate_array(x, g, workers=None) -> np.ndarray:
    """One propagation step on a float array; returns float64."""
    return _Operator(g).apply(np.asarray(x, dtype=np.float64), workers)


def propagate_once(fs: FeatureSet, g, workers=None) -> FeatureSet:
    return fs.with_data(propagate_array(fs.data, g, workers))


def _graph_for(x, p, workers, cameras=None):
    g = knn_graph(x, p.k, p.gamma, cameras=cameras, workers=workers)
    return symmetrize(g) if p.symmetrize else g


def run_global_array(x, p, workers=None, graph=None, timer=None) -> np.ndarray:
    """``p.iters`` rounds of build-graph / propagate / renormalize.

    A supplied ``graph`` is used for every round instead of building one.
    """
    x = np.asarray(x, dtype=np.float64)
    op = None if graph is None else _Operator(graph)
    for _ in range(p.iters):
        if op is None or (graph is None and p.recompute_graph):
            with _maybe(timer, "graph"):
                op = _Operator(_graph_for(x, p, workers))
        with _maybe(timer, "propagate"):
            x = op.apply(x, workers)
            if p.renormalize:
                x = normalize_array(x)
    return x


def run_global(fs: FeatureSet, p, workers=None, graph=None, timer=None) -> FeatureSet:
    if p.iters == 0:
        return fs
    x = run_global_array(fs.data, p, workers, graph, timer)
    return fs.with_data(x, normalized=p.renormalize and _all_unit(x))


def _all_unit(x):
    return bool(np.all(np.abs(np.linalg.norm(x, axis=1) - 1.0) <= 1e-4))


def local_neighbors(x, k, workers=None) -> np.ndarray:
    """``(n, m)`` index matrix whose row i is ``[i, N_i...]``."""
    g = knn_graph(x, k, 1.0, workers=workers)
    m = min(int(k), g.n - 1)
    nbr = g.indices.reshape(g.n, m)
    return np.hstack([np.arange(g.n)[:, None], nbr])


def run_local_array(x, p, workers=None, timer=None) -> np.ndarray:
    """Decentralized propagation: each row is updated on its own dense
    ``(k+1) x (k+1)`` neighborhood, which is fixed from the input features.
    """
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    with _maybe(timer, "graph"):
        idx = local_neighbors(x, p.k, workers)
    m = idx.shape[1]

    def work(start, stop):
        xl = x[idx[start:stop]]
        diff = xl[:, :, None, :] - xl[:, None, :, :]
        a = np.exp(-(diff * diff).sum(axis=3) / p.gamma)
        deg = a.sum(axis=2)
        inv = 1.0 / np.sqrt(deg)
        s = inv[:, :, None] * a * inv[:, None, :]
        for _ in range(p.iters):
            xl = np.matmul(s, xl)
            if p.renormalize:
                norms = np.sqrt(np.einsum("bmd,bmd->bm", xl, xl))
                xl = xl / np.maximum(norms, 1e-12)[:, :, None]
        return xl[:, 0, :]

    size = max(1, _LOCAL_BLOCK_ELEMS // (m * m * d))
    with _maybe(timer, "propagate"):
        return np.vstack(map_spans(work, n, size, workers))


def run_local(fs: FeatureSet, p, workers=None, timer=None) -> FeatureSet:
    if p.iters == 0:
        return fs
    x = run_local_array(fs.data, p, workers, timer)
    return fs.with_data(x, normalized=p.renormalize and _all_unit(x))

