"""Tracklet profile vectors and tracklet-level re-ranking.

A profile is either the frame mean of a tracklet, or the regularized
least-squares direction

    (G + lambda * n * I) w = b - a

where, over all ``n`` frames sharing the tracklet's camera, ``G`` is the
``d x d`` Gram matrix and ``a`` the mean frame, and ``b`` is the tracklet
mean. Subtracting ``a`` removes the per-camera bias.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .cross_camera import run_cross_camera_array
from .evaluation import DEFAULT_MAX_RANK, evaluate_features
from .errors import MissingTrackletMetadata, SingularSystem, UnknownTracklet
from .features import FeatureSet, SampleMeta, normalize_array

DEGENERATE_RHS = 1e-10


class ProfileMethod(str, enum.Enum):
    MEAN = "mean"
    CLOSED_FORM = "closed-form"


def tracklet_index(meta: SampleMeta) -> dict:
    """Tracklet id -> sorted frame row indices."""
    if not meta.has_tracklets:
        raise MissingTrackletMetadata("no row carries a tracklet id")
    ids = meta.tracklet
    order = np.argsort(ids, kind="stable")
    uniq, starts = np.unique(ids[order], return_index=True)
    groups = np.split(order, starts[1:])
    return {int(t): g for t, g in zip(uniq, groups) if t >= 0}


@dataclass(frozen=True)
class ProfileSet:
    profiles: np.ndarray
    tracklet: np.ndarray
    identity: np.ndarray
    camera: np.ndarray
    split: np.ndarray
    method: ProfileMethod

    def __post_init__(self):
        if not np.all(np.isfinite(self.profiles)):
            raise ValueError("profiles must be finite")

    @property
    def count(self):
        return self.profiles.shape[0]

    def with_profiles(self, profiles):
        return ProfileSet(
            np.asarray(profiles, dtype=np.float64),
            self.tracklet,
            self.identity,
            self.camera,
            self.split,
            self.method,
        )

    def as_feature_set(self) -> FeatureSet:
        meta = SampleMeta(self.identity, self.camera, self.tracklet, self.split)
        return FeatureSet(self.profiles.astype(np.float32), meta)

    @classmethod
    def from_feature_set(cls, fs: FeatureSet, method=ProfileMethod.CLOSED_FORM):
        m = fs.meta
        return cls(fs.data.astype(np.float64), m.tracklet, m.identity, m.camera, m.split, method)


def _frames(fs, c, index=None):
    index = tracklet_index(fs.meta) if index is None else index
    try:
        return index[int(c)]
    except KeyError:
        raise UnknownTracklet(f"tracklet {c} not present") from None


def mean_profile(fs: FeatureSet, c, index=None) -> np.ndarray:
    rows = _frames(fs, c, index)
    return fs.data[rows].astype(np.float64).mean(axis=0)


class CameraSystem:
    """Factorized ``G + lambda * n * I`` for one camera group."""

    def __init__(self, x, lambda_):
        x = np.asarray(x, dtype=np.float64)
        self.n, d = x.shape
        self.mean = x.mean(axis=0)
        self.gram = x.T @ x
        self.matrix = self.gram + lambda_ * self.n * np.eye(d)
        if lambda_ == 0 and np.linalg.matrix_rank(self.gram) < d:
            raise SingularSystem("lambda is 0 and the Gram matrix is rank deficient")
        try:
            self.factor = scipy.linalg.cho_factor(self.matrix, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc

    def solve(self, rhs):
        return scipy.linalg.cho_solve(self.factor, rhs, check_finite=False)


def _camera_system(fs, camera, lambda_):
    return CameraSystem(fs.data[fs.meta.camera == camera], lambda_)


def profile_from_system(system, tracklet_mean, renormalize=True):
    """Solve for one tracklet; falls back to the mean when ``b == a``."""
    rhs = tracklet_mean - system.mean
    if np.linalg.norm(rhs) < DEGENERATE_RHS:
        w = tracklet_mean
    else:
        w = system.solve(rhs)
    return normalize_array(w[None, :])[0] if renormalize else w


def closed_form_profile(fs: FeatureSet, c, lambda_, renormalize=True, index=None) -> np.ndarray:
    rows = _frames(fs, c, index)
    camera = fs.meta.camera[rows[0]]
    system = _camera_system(fs, camera, lambda_)
    return profile_from_system(system, mean_profile(fs, c, index), renormalize)


def _tracklet_meta(fs, index):
    ids = np.array(sorted(index), dtype=np.int64)
    first = np.array([index[t][0] for t in ids])
    for t in ids:
        splits = np.unique(fs.meta.split[index[t]])
        if len(splits) != 1:
            raise ValueError(f"tracklet {t} mixes query and gallery frames")
    m = fs.meta
    return ids, m.identity[first], m.camera[first], m.split[first]


def build_profiles(fs: FeatureSet, p, method=ProfileMethod.CLOSED_FORM) -> ProfileSet:
    method = ProfileMethod(method)
    index = tracklet_index(fs.meta)
    ids, identity, camera, split = _tracklet_meta(fs, index)
    means = np.stack([mean_profile(fs, t, index) for t in ids])
    if method is ProfileMethod.MEAN:
        out = normalize_array(means) if p.renormalize else means
    else:
        systems = {int(c): _camera_system(fs, c, p.lambda_) for c in np.unique(camera)}
        out = np.stack(
            [
                profile_from_system(systems[int(cam)], mu, p.renormalize)
                for cam, mu in zip(camera, means)
            ]
        )
    return ProfileSet(out, ids, identity, camera, split, method)


def run_gcrv(fs: FeatureSet, p, workers=None, method=ProfileMethod.CLOSED_FORM, timer=None) -> ProfileSet:
    """Profile generation followed by fused global/cross-camera propagation
    over the tracklet profiles, rebuilding both graphs every round."""
    ps = build_profiles(fs, p, method)
    if p.iters == 0:
        return ps
    return ps.with_profiles(run_cross_camera_array(ps.profiles, ps.camera, p, workers, timer))


def evaluate_profiles(ps: ProfileSet, protocol="cross-camera", max_rank=None):
    """Rank query tracklets against gallery tracklets and score them."""
    return evaluate_features(ps.as_feature_set(), protocol, max_rank or DEFAULT_MAX_RANK)
