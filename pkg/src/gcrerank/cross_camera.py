"""Fusion of global and cross-camera propagation.

``X' = alpha * P_all(X) + (1 - alpha) * P_cross(X)`` where ``P_cross`` uses
the graph whose neighbors come only from other cameras.
"""

from __future__ import annotations

import numpy as np

from .errors import GraphSizeMismatch
from .features import FeatureSet, normalize_array
from .graph import knn_graph, symmetrize
from .propagation import _all_unit, _maybe, propagate_array


def propagate_fused_array(x, g_all, g_cr, alpha, workers=None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if g_all.n != g_cr.n:
        raise GraphSizeMismatch(f"graphs have {g_all.n} and {g_cr.n} nodes")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha * propagate_array(x, g_all, workers) + (1.0 - alpha) * propagate_array(
        x, g_cr, workers
    )


def propagate_fused(fs: FeatureSet, g_all, g_cr, alpha, workers=None) -> FeatureSet:
    return fs.with_data(propagate_fused_array(fs.data, g_all, g_cr, alpha, workers))


def run_cross_camera_array(x, cameras, p, workers=None, timer=None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    cameras = np.asarray(cameras)
    for _ in range(p.iters):
        with _maybe(timer, "graph"):
            g_all = knn_graph(x, p.k, p.gamma, workers=workers)
            g_cr = knn_graph(x, p.k, p.gamma, cameras=cameras, workers=workers)
            if p.symmetrize:
                g_all, g_cr = symmetrize(g_all), symmetrize(g_cr)
        with _maybe(timer, "propagate"):
            x = propagate_fused_array(x, g_all, g_cr, p.alpha, workers)
            if p.renormalize:
                x = normalize_array(x)
    return x


def run_cross_camera(fs: FeatureSet, p, workers=None, timer=None) -> FeatureSet:
    if p.iters == 0:
        return fs
    x = run_cross_camera_array(fs.data, fs.meta.camera, p, workers, timer)
    return fs.with_data(x, normalized=p.renormalize and _all_unit(x))
