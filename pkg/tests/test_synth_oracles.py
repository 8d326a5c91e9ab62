import json

import numpy as np
import pytest

from gcrerank.errors import NoConvergence
from gcrerank.evaluation import evaluate_features
from gcrerank.features import Split
from gcrerank.oracles import (
    brute_force_ap,
    brute_force_expected_ap,
    dense_oracle_propagate,
    dense_similarity,
    naive_rank,
    naive_sq_dists,
    numeric_profile_oracle,
    profile_gradient,
    profile_objective,
)
from gcrerank.synth import IMAGE_BENCHMARK, SynthSpec, benchmark, generate


def test_same_seed_same_bytes():
    spec = SynthSpec(num_ids=5, cams=3, frames_per_tracklet=2, dim=8, seed=4)
    a, b = generate(spec), generate(spec)
    assert a.data.tobytes() == b.data.tobytes()
    assert generate(spec.replace(seed=5)).data.tobytes() != a.data.tobytes()


def test_layout_and_metadata():
    spec = SynthSpec(num_ids=3, cams=2, frames_per_tracklet=2, dim=4)
    fs = generate(spec)
    assert (fs.n, fs.d) == (12, 4)
    assert fs.normalized
    assert fs.meta.identity.tolist() == [0] * 4 + [1] * 4 + [2] * 4
    assert fs.meta.camera.tolist() == [0, 0, 1, 1] * 3
    assert fs.meta.tracklet.tolist() == [0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5]
    per_id = fs.meta.split.reshape(3, 4)
    assert np.all((per_id == Split.QUERY).sum(axis=1) == 2)


def test_noiseless_frames_identical():
    fs = generate(SynthSpec(num_ids=4, cams=1, frames_per_tracklet=3, dim=6, cluster_std=0.0, camera_shift=0.0))
    x = fs.data.reshape(4, 3, 6)
    assert np.all(x == x[:, :1])


def test_spec_json_round_trip():
    spec = SynthSpec(seed=9)
    assert SynthSpec(**json.loads(spec.to_json())) == spec


def test_invalid_spec():
    with pytest.raises(ValueError):
        SynthSpec(cams=0)
    with pytest.raises(ValueError):
        SynthSpec(cluster_std=-1)


def test_benchmark_baseline_is_stable_across_seeds():
    maps = np.array([evaluate_features(benchmark("image", s)).mAP for s in range(10)])
    assert maps.std(ddof=1) / maps.mean() < 0.10


def test_benchmark_size():
    assert benchmark("image").n == IMAGE_BENCHMARK.num_ids * IMAGE_BENCHMARK.cams * IMAGE_BENCHMARK.frames_per_tracklet


def test_naive_sq_dists_example():
    np.testing.assert_array_equal(naive_sq_dists([[0, 0], [3, 4]]), [[0, 25], [25, 0]])


def test_dense_similarity_example():
    x = np.array([[0.0], [1.0], [3.0]])
    a = dense_similarity(x, 1, 1.0)
    np.testing.assert_allclose(a, [[1, np.exp(-1), 0], [np.exp(-1), 1, 0], [0, np.exp(-4), 1]])
    a_cr = dense_similarity(x, 1, 1.0, cameras=[0, 0, 1])
    assert a_cr[0, 2] == pytest.approx(np.exp(-9))


def test_dense_propagate_example():
    a = np.array([[1.0, 1.0], [0.0, 1.0]])
    out = dense_oracle_propagate(np.eye(2), a)
    d_r, d_c = np.array([2.0, 1.0]), np.array([1.0, 2.0])
    np.testing.assert_allclose(out, a / np.sqrt(np.outer(d_r, d_c)))
    with pytest.raises(ValueError):
        dense_oracle_propagate(np.eye(2), a, "bogus")


def test_naive_rank_ties():
    assert naive_rank([[0.0]], [[1.0], [-1.0], [0.5]]).tolist() == [[2, 0, 1]]


def test_brute_force_helpers():
    assert brute_force_ap([0, 1]) == 0.5
    assert np.isnan(brute_force_ap([0, 0]))
    assert brute_force_expected_ap(1, 2) == pytest.approx(0.75)


def test_profile_gradient_is_derivative():
    rng = np.random.default_rng(0)
    group, w = rng.standard_normal((12, 4)), rng.standard_normal(4)
    frames = group[:3]
    h = 1e-6
    num = [
        (profile_objective(w + h * e, group, frames, 2.0) - profile_objective(w - h * e, group, frames, 2.0)) / (2 * h)
        for e in np.eye(4)
    ]
    np.testing.assert_allclose(profile_gradient(w, group, frames, 2.0), num, atol=1e-6)


def test_numeric_oracle_stationary_and_limits():
    rng = np.random.default_rng(1)
    group = rng.standard_normal((20, 3))
    w = numeric_profile_oracle(group, group[:5], 1.0)
    assert np.linalg.norm(profile_gradient(w, group, group[:5], 1.0)) < 1e-8
    with pytest.raises(NoConvergence):
        numeric_profile_oracle(group, group[:5], 1.0, tol=0.0, max_iter=3)
    with pytest.raises(ValueError):
        numeric_profile_oracle(np.zeros((2, 65)), np.zeros((1, 65)), 1.0)
