"""Seeded synthetic re-identification data.

Random numbers come from numpy's ``PCG64`` bit generator
(``numpy.random.default_rng(seed)``), drawn in this fixed order:

1. identity centroids, ``standard_normal((num_ids, dim))``, normalized
2. camera bias directions, ``standard_normal((cams, dim))``, normalized and
   scaled to ``camera_shift``
3. query camera per identity, ``integers(cams, size=num_ids)``
4. frame noise, ``standard_normal((num_ids, cams, frames_per_tracklet, dim))``
   scaled by ``cluster_std``

Each frame is ``normalize(centroid + camera_bias + noise)``. There is one
tracklet per (identity, camera) with id ``identity * cams + camera``; rows
are ordered by identity, then camera, then frame.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .features import FeatureSet, SampleMeta, Split, normalize_array


@dataclass(frozen=True)
class SynthSpec:
    num_ids: int = 50
    cams: int = 4
    frames_per_tracklet: int = 4
    dim: int = 32
    cluster_std: float = 0.1
    camera_shift: float = 0.8
    seed: int = 0

    def __post_init__(self):
        for name in ("num_ids", "cams", "frames_per_tracklet", "dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.cluster_std < 0 or self.camera_shift < 0:
            raise ValueError("cluster_std and camera_shift must be >= 0")

    def replace(self, **changes):
        return SynthSpec(**{**asdict(self), **changes})

    def to_json(self):
        return json.dumps(asdict(self), indent=2)


def generate(spec: SynthSpec) -> FeatureSet:
    rng = np.random.default_rng(spec.seed)
    centroids = normalize_array(rng.standard_normal((spec.num_ids, spec.dim)))
    bias = normalize_array(rng.standard_normal((spec.cams, spec.dim))) * spec.camera_shift
    query_cam = rng.integers(spec.cams, size=spec.num_ids)
    noise = rng.standard_normal((spec.num_ids, spec.cams, spec.frames_per_tracklet, spec.dim))

    raw = centroids[:, None, None, :] + bias[None, :, None, :] + spec.cluster_std * noise
    data = normalize_array(raw.reshape(-1, spec.dim))

    ident, cam, _ = np.meshgrid(
        np.arange(spec.num_ids), np.arange(spec.cams), np.arange(spec.frames_per_tracklet), indexing="ij"
    )
    ident, cam = ident.ravel(), cam.ravel()
    split = np.where(cam == query_cam[ident], int(Split.QUERY), int(Split.GALLERY))
    meta = SampleMeta(ident, cam, ident * spec.cams + cam, split)
    return FeatureSet(data.astype(np.float32), meta, normalized=True)


# camera-bias benchmark for image-level re-ranking (n = 3200)
IMAGE_BENCHMARK = SynthSpec(
    num_ids=50, cams=4, frames_per_tracklet=16, dim=56, cluster_std=0.1, camera_shift=0.8
)

# tracklet benchmark; noisier frames so profile quality matters (n = 800, 200 tracklets)
VIDEO_BENCHMARK = SynthSpec(
    num_ids=50, cams=4, frames_per_tracklet=4, dim=32, cluster_std=0.4, camera_shift=0.8
)


def benchmark(kind="image", seed=0) -> FeatureSet:
    base = {"image": IMAGE_BENCHMARK, "video": VIDEO_BENCHMARK}[kind]
    return generate(base.replace(seed=seed))
