"""Re-ranking hyperparameters and worker-count resolution."""

from __future__ import annotations

import enum
import os
from dataclasses import asdict, dataclass


class Mode(str, enum.Enum):
    GLOBAL = "global"
    CROSS_CAMERA = "cross-camera"
    LOCAL = "local"


@dataclass(frozen=True)
class Params:
    """Re-ranking settings; the defaults are the recommended configuration.

    ``lambda_`` is the profile-vector regularization weight (``lambda`` is a
    Python keyword).
    """

    k: int = 15
    gamma: float = 0.2
    iters: int = 3
    alpha: float = 0.7
    lambda_: float = 10.0
    symmetrize: bool = True
    renormalize: bool = True
    recompute_graph: bool = True
    mode: Mode = Mode.GLOBAL

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be an integer >= 1, got {self.k}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if int(self.iters) != self.iters or self.iters < 0:
            raise ValueError(f"iters must be an integer >= 0, got {self.iters}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.lambda_ >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lambda_}")

    def replace(self, **changes):
        return Params(**{**asdict(self), **changes})

    def to_dict(self):
        out = asdict(self)
        out["mode"] = self.mode.value
        return out


WORKERS_ENV = "GCR_WORKERS"


def resolve_workers(workers=None):
    """Explicit value wins, then ``$GCR_WORKERS``, then 1."""
    if workers is None:
        workers = os.environ.get(WORKERS_ENV) or 1
    workers = int(workers)
    if workers < 1:
        raise ValueError(f"worker count must be >= 1, got {workers}")
    return workers
