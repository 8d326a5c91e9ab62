"""Slow, literal reference computations used to check the fast kernels.

Nothing here imports the graph, propagation or profile code: every oracle
rebuilds what it needs from plain loops or full dense matrices.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import NoConvergence

DENSE_LIMIT = 500
PROFILE_DIM_LIMIT = 64


def naive_sq_dists(x):
    """Full squared-distance matrix from a double loop over row pairs."""
    x = np.asarray(x, dtype=np.float64)
    n, d = x.shape
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            s = 0.0
            for c in range(d):
                t = x[i, c] - x[j, c]
                s += t * t
            out[i, j] = s
    return out


def dense_similarity(x, k, gamma, cameras=None):
    """Dense ``A~`` with unit diagonal, neighbors found by a full stable sort."""
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    if n > DENSE_LIMIT:
        raise ValueError(f"dense oracle limited to n <= {DENSE_LIMIT}")
    dist = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=2)
    a = np.eye(n)
    for i in range(n):
        cand = [
            j for j in range(n) if j != i and (cameras is None or cameras[j] != cameras[i])
        ]
        cand.sort(key=lambda j: (dist[i, j], j))
        for j in cand[:k]:
            a[i, j] = math.exp(-dist[i, j] / gamma)
    return a


def dense_oracle_propagate(x, a, variant="asymmetric"):
    """``D_r^{-1/2} A D_c^{-1/2} X`` with full diagonal matrices.

    ``variant="symmetric"`` uses the row degrees on both sides.
    """
    x = np.asarray(x, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    if len(a) > DENSE_LIMIT:
        raise ValueError(f"dense oracle limited to n <= {DENSE_LIMIT}")
    d_r = np.diag(a.sum(axis=1) ** -0.5)
    if variant == "symmetric":
        d_c = d_r
    elif variant == "asymmetric":
        d_c = np.diag(a.sum(axis=0) ** -0.5)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return d_r @ a @ d_c @ x


def dense_oracle_fused(x, a, a_cr, alpha):
    return alpha * dense_oracle_propagate(x, a) + (1 - alpha) * dense_oracle_propagate(x, a_cr)


def naive_rank(q, g):
    """Per query, gallery positions sorted by (distance, index)."""
    q = np.asarray(q, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    out = []
    for qi in q:
        d = [float(np.sum((qi - gj) ** 2)) for gj in g]
        out.append(sorted(range(len(g)), key=lambda j: (d[j], j)))
    return np.array(out, dtype=np.int64)


def brute_force_ap(relevance):
    """AP of a relevance list by direct precision-at-hit summation."""
    total, hits, acc = sum(relevance), 0, 0.0
    if total == 0:
        return float("nan")
    for pos, rel in enumerate(relevance, start=1):
        if rel:
            hits += 1
            acc += hits / pos
    return acc / total


def brute_force_expected_ap(num_pos, num_items):
    """Mean AP over every placement of ``num_pos`` positives in a list."""
    total, count = 0.0, 0
    for pos in itertools.combinations(range(num_items), num_pos):
        rel = [0] * num_items
        for p in pos:
            rel[p] = 1
        total += brute_force_ap(rel)
        count += 1
    return total / count


def profile_objective(w, group, frames, lambda_):
    """``mean(X) . w - mean(frames) . w + ||X w||^2 / n + lambda/2 ||w||^2``."""
    group = np.asarray(group, dtype=np.float64)
    frames = np.asarray(frames, dtype=np.float64)
    n = len(group)
    xw = group @ w
    return (
        group.mean(axis=0) @ w
        - frames.mean(axis=0) @ w
        + (xw @ xw) / n
        + 0.5 * lambda_ * (w @ w)
    )


def profile_gradient(w, group, frames, lambda_):
    group = np.asarray(group, dtype=np.float64)
    frames = np.asarray(frames, dtype=np.float64)
    n = len(group)
    return (
        group.mean(axis=0)
        - frames.mean(axis=0)
        + (2.0 / n) * (group.T @ (group @ w))
        + lambda_ * w
    )


def numeric_profile_oracle(group, frames, lambda_, tol=1e-8, max_iter=200_000):
    """Minimize :func:`profile_objective` by steepest descent from zero.

    The objective is quadratic, so each step length is the exact minimizer
    along the gradient; curvature comes from a difference of gradients.
    """
    group = np.asarray(group, dtype=np.float64)
    if group.shape[1] > PROFILE_DIM_LIMIT:
        raise ValueError(f"profile oracle limited to d <= {PROFILE_DIM_LIMIT}")
    w = np.zeros(group.shape[1])
    g0 = profile_gradient(w, group, frames, lambda_)
    for _ in range(max_iter):
        g = profile_gradient(w, group, frames, lambda_)
        gg = g @ g
        if math.sqrt(gg) < tol:
            return w
        hg = profile_gradient(g, group, frames, lambda_) - g0
        w = w - (gg / (g @ hg)) * g
    raise NoConvergence(f"gradient norm still {math.sqrt(gg):.3e} after {max_iter} steps")
