import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcrerank.errors import GraphSizeMismatch
from gcrerank.features import normalize_rows
from gcrerank.graph import NeighborGraph, build_graph, degrees, knn_graph, symmetrize
from gcrerank.oracles import dense_oracle_propagate, dense_similarity
from gcrerank.params import Mode, Params
from gcrerank.pipeline import rerank
from gcrerank.propagation import Timer, local_neighbors, propagate_once, run_global, run_local

from conftest import make_fs, random_fs
from tolerances import DENSE_PROPAGATION, LINEARITY, LOCAL_VS_DENSE, PERMUTATION

RAW = dict(renormalize=False)


def test_singleton_is_identity():
    fs = make_fs([[0.3, -2.0]])
    g = build_graph(fs, Params())
    assert g.nnz == 0
    np.testing.assert_array_equal(propagate_once(fs, g).data, fs.data)


def test_two_node_mutual_edge():
    g = NeighborGraph.from_lists([[(1, 1.0)], [(0, 1.0)]], symmetric=True)
    out = propagate_once(make_fs([[1.0, 0.0], [0.0, 1.0]]), g)
    np.testing.assert_allclose(out.data, [[0.5, 0.5], [0.5, 0.5]], atol=1e-7)
    same = propagate_once(make_fs([[0.2, 0.7], [0.2, 0.7]]), g)
    np.testing.assert_allclose(same.data, [[0.2, 0.7], [0.2, 0.7]], atol=1e-7)


@pytest.mark.parametrize("sym", [False, True])
def test_matches_dense_oracle(sym):
    fs = random_fs(20, 20, 5)
    g = build_graph(fs, Params(k=4))
    a = dense_similarity(fs.data, 4, 0.2)
    if sym:
        g = symmetrize(g)
        a = (a + a.T) / 2
    ref = dense_oracle_propagate(fs.data, a, "symmetric" if sym else "asymmetric")
    np.testing.assert_allclose(propagate_once(fs, g).data, ref, atol=DENSE_PROPAGATION, rtol=0)


def test_graph_size_mismatch():
    with pytest.raises(GraphSizeMismatch):
        propagate_once(make_fs([[1.0], [2.0]]), NeighborGraph.from_lists([[]]))


def test_edgeless_graph_is_exact_identity():
    fs = random_fs(1, 12, 3)
    g = NeighborGraph.from_lists([[] for _ in range(12)])
    assert propagate_once(fs, g).data.tobytes() == fs.data.tobytes()


def test_zero_iterations_unchanged():
    fs = random_fs(2, 15, 3)
    for mode in Mode:
        assert rerank(fs, Params(iters=0, mode=mode)).data.tobytes() == fs.data.tobytes()


def test_single_iteration_is_one_step():
    fs = random_fs(3, 30, 4)
    p = Params(iters=1, symmetrize=False, **RAW)
    ref = propagate_once(fs, build_graph(fs, p))
    np.testing.assert_array_equal(run_global(fs, p).data, ref.data)


def _clusters(seed, per=20, d=8, std=0.15):
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((3, d))
    x = np.repeat(centers, per, axis=0) + std * rng.standard_normal((3 * per, d))
    return normalize_rows(make_fs(x, identity=np.repeat(np.arange(3), per))), np.repeat(np.arange(3), per)


def _intra_spread(x, labels):
    total = 0.0
    for c in np.unique(labels):
        pts = x[labels == c].astype(np.float64)
        diff = pts[:, None] - pts[None]
        total += np.sqrt((diff**2).sum(-1)).mean()
    return total / len(np.unique(labels))


def test_three_iterations_tighten_clusters():
    fs, labels = _clusters(0)
    out = run_global(fs, Params(iters=3))
    assert _intra_spread(out.data, labels) < _intra_spread(fs.data, labels)


def test_fixed_graph_and_cached_graph_agree():
    fs = random_fs(4, 40, 4)
    p = Params(recompute_graph=False)
    g = symmetrize(build_graph(fs, p))
    np.testing.assert_array_equal(run_global(fs, p).data, run_global(fs, Params(), graph=g).data)


@settings(max_examples=25, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 1000))
def test_linearity(a, b, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((25, 4))
    y = rng.standard_normal((25, 4))
    g = symmetrize(knn_graph(x, 5, 0.5))
    lhs = propagate_once(make_fs(a * x + b * y), g).data
    rhs = a * propagate_once(make_fs(x), g).data + b * propagate_once(make_fs(y), g).data
    np.testing.assert_allclose(lhs, rhs, atol=LINEARITY * max(1.0, abs(a) + abs(b)) * 4)


@pytest.mark.parametrize("mode", list(Mode))
def test_permutation_equivariance(mode):
    fs = random_fs(5, 45, 6, cams=3)
    perm = np.random.default_rng(2).permutation(fs.n)
    p = Params(k=6, mode=mode)
    out = rerank(fs, p).data
    out_perm = rerank(fs.take(perm), p).data
    np.testing.assert_allclose(out_perm, out[perm], atol=PERMUTATION)


def test_row_norm_bound():
    fs = random_fs(6, 60, 5)
    g = build_graph(fs, Params(k=8))
    for graph in (g, symmetrize(g)):
        row, col = degrees(graph)
        deg = np.concatenate([row, col])
        out = propagate_once(fs, graph).data.astype(np.float64)
        bound = np.linalg.norm(fs.data, axis=1).max() * np.sqrt(deg.max() / deg.min())
        assert np.linalg.norm(out, axis=1).max() <= bound + 1e-6


def test_local_matches_dense_when_neighborhood_is_everything():
    fs = random_fs(7, 6, 3)
    p = Params(k=10, iters=1, mode=Mode.LOCAL, **RAW)
    a = np.exp(-np.sum((fs.data[:, None].astype(float) - fs.data[None]) ** 2, axis=-1) / p.gamma)
    ref = dense_oracle_propagate(fs.data, a, "symmetric")
    np.testing.assert_allclose(run_local(fs, p).data, ref, atol=LOCAL_VS_DENSE)
    dense_graph = symmetrize(build_graph(fs, p))
    np.testing.assert_allclose(run_local(fs, p).data, propagate_once(fs, dense_graph).data, atol=LOCAL_VS_DENSE)


def test_local_singleton():
    fs = make_fs([[0.6, 0.8]])
    np.testing.assert_allclose(run_local(fs, Params(mode=Mode.LOCAL)).data, fs.data, atol=1e-7)


def test_local_worker_invariance():
    fs = random_fs(8, 200, 16)
    p = Params(mode=Mode.LOCAL)
    one = run_local(fs, p, workers=1)
    eight = run_local(fs, p, workers=8)
    assert one.data.tobytes() == eight.data.tobytes()


def test_global_worker_invariance():
    fs = random_fs(9, 600, 8)
    assert run_global(fs, Params(), workers=1).data.tobytes() == run_global(fs, Params(), workers=3).data.tobytes()


def test_local_depends_only_on_neighborhood():
    fs = random_fs(10, 40, 4)
    p = Params(k=5, mode=Mode.LOCAL)
    idx = local_neighbors(fs.data.astype(np.float64), p.k)
    i = 0
    outside = [j for j in range(fs.n) if j not in set(idx[i].tolist())]
    x = fs.data.copy()
    x[outside[0]] = 100.0  # moved far away, so it stays outside row 0's neighborhood
    before = run_local(fs, p).data[i]
    after = run_local(fs.with_data(x), p).data[i]
    assert before.tobytes() == after.tobytes()


def test_timer_records_phases():
    t = Timer()
    run_global(random_fs(1, 30, 3), Params(), timer=t)
    assert set(t.totals) == {"graph", "propagate"}
