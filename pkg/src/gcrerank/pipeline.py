"""Mode dispatch for image-level re-ranking."""

from __future__ import annotations

from .cross_camera import run_cross_camera
from .params import Mode
from .propagation import run_global, run_local


def rerank(fs, p, workers=None, graph=None, timer=None):
    """Run the re-ranking selected by ``p.mode``.

    ``graph`` (a cached :class:`~gcrerank.graph.NeighborGraph`) is only
    meaningful for the global mode, where it replaces per-round graph builds.
    """
    if p.mode is Mode.GLOBAL:
        return run_global(fs, p, workers=workers, graph=graph, timer=timer)
    if graph is not None:
        raise ValueError("a cached graph can only be used with the global mode")
    if p.mode is Mode.CROSS_CAMERA:
        return run_cross_camera(fs, p, workers=workers, timer=timer)
    return run_local(fs, p, workers=workers, timer=timer)
