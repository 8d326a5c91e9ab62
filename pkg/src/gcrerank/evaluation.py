"""Ranking and mAP / CMC scoring.

AP for a query is ``(1/R) * sum over hits h of (h / rank(h))`` where ``R``
is the number of valid positives left after filtering. Gallery rows with
identity -1 are junk and always removed; the cross-camera protocol also
removes rows sharing both identity and camera with the query. Queries left
with no positive are skipped and counted separately.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, QuerySetMismatch
from .features import JUNK, FeatureSet, SampleMeta
from .graph import block_sq_dists

DEFAULT_MAX_RANK = 50


class Protocol(str, enum.Enum):
    CROSS_CAMERA = "cross-camera"
    PLAIN = "plain"


@dataclass(frozen=True)
class RankResult:
    """``order[q]`` lists gallery positions by ascending distance."""

    order: np.ndarray
    dist: np.ndarray


def rank(queries, gallery) -> RankResult:
    q = np.asarray(queries.data if isinstance(queries, FeatureSet) else queries, dtype=np.float64)
    g = np.asarray(gallery.data if isinstance(gallery, FeatureSet) else gallery, dtype=np.float64)
    if q.ndim != 2 or g.ndim != 2 or q.shape[1] != g.shape[1]:
        raise DimensionMismatch(f"query shape {q.shape} vs gallery shape {g.shape}")
    span = max(1, (1 << 22) // max(1, g.shape[0] * g.shape[1]))
    dist = np.vstack(
        [block_sq_dists(q, g, a, min(a + span, len(q))) for a in range(0, len(q), span)]
    ) if len(q) else np.empty((0, len(g)))
    order = np.argsort(dist, axis=1, kind="stable")
    return RankResult(order, np.take_along_axis(dist, order, axis=1))


@dataclass
class EvalReport:
    mAP: float
    cmc: np.ndarray
    per_query_ap: np.ndarray
    query_rows: np.ndarray
    num_skipped: int
    skipped_rows: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def num_queries(self):
        return len(self.per_query_ap)

    def rank1(self):
        return float(self.cmc[0]) if len(self.cmc) else 0.0

    def to_dict(self):
        return {
            "mAP": float(self.mAP),
            "cmc": [float(v) for v in self.cmc],
            "num_queries": int(self.num_queries),
            "num_skipped": int(self.num_skipped),
            "per_query_ap": [float(v) for v in self.per_query_ap],
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text


def average_precision(matches) -> float:
    """AP of a 0/1 relevance list (filtered ranking order)."""
    matches = np.asarray(matches, dtype=bool)
    hits = np.flatnonzero(matches) + 1
    if len(hits) == 0:
        return float("nan")
    return float(np.mean(np.arange(1, len(hits) + 1) / hits))


def evaluate_reid(
    r: RankResult,
    query_meta: SampleMeta,
    gallery_meta: SampleMeta,
    protocol=Protocol.CROSS_CAMERA,
    max_rank=DEFAULT_MAX_RANK,
) -> EvalReport:
    protocol = Protocol(protocol)
    nq = r.order.shape[0]
    if len(query_meta) != nq or len(gallery_meta) != r.order.shape[1]:
        raise DimensionMismatch("metadata does not cover the ranked rows")
    cmc = np.zeros(max_rank)
    aps, rows, skipped = [], [], []
    for q in range(nq):
        ids = gallery_meta.identity[r.order[q]]
        cams = gallery_meta.camera[r.order[q]]
        keep = ids != JUNK
        qid = query_meta.identity[q]
        if protocol is Protocol.CROSS_CAMERA:
            keep &= ~((ids == qid) & (cams == query_meta.camera[q]))
        matches = ids[keep] == qid
        if qid == JUNK or not matches.any():
            skipped.append(q)
            continue
        aps.append(average_precision(matches))
        rows.append(q)
        first = int(np.argmax(matches))
        if first < max_rank:
            cmc[first:] += 1
    aps = np.array(aps, dtype=np.float64)
    if len(aps):
        cmc /= len(aps)
        mAP = float(np.mean(aps))
    else:
        mAP = 0.0
    return EvalReport(
        mAP=mAP,
        cmc=cmc,
        per_query_ap=aps,
        query_rows=np.array(rows, dtype=np.int64),
        num_skipped=len(skipped),
        skipped_rows=np.array(skipped, dtype=np.int64),
    )


def evaluate_features(fs: FeatureSet, protocol=Protocol.CROSS_CAMERA, max_rank=DEFAULT_MAX_RANK):
    """Rank query rows against gallery rows of one set and score them."""
    q = np.flatnonzero(fs.meta.is_query)
    g = np.flatnonzero(~fs.meta.is_query)
    r = rank(fs.data[q], fs.data[g])
    report = evaluate_reid(r, fs.meta.take(q), fs.meta.take(g), protocol, max_rank)
    report.query_rows = q[report.query_rows]
    report.skipped_rows = q[report.skipped_rows]
    return report


@dataclass(frozen=True)
class Comparison:
    delta_mAP: float
    delta_cmc: np.ndarray
    per_query_delta: np.ndarray

    def to_dict(self):
        return {
            "delta_mAP": self.delta_mAP,
            "delta_cmc": [float(v) for v in self.delta_cmc],
            "per_query_delta": [float(v) for v in self.per_query_delta],
        }


def compare(a: EvalReport, b: EvalReport) -> Comparison:
    """Metrics of ``b`` minus metrics of ``a``."""
    if not np.array_equal(a.query_rows, b.query_rows) or len(a.cmc) != len(b.cmc):
        raise QuerySetMismatch("reports were computed on different query sets")
    return Comparison(
        delta_mAP=float(b.mAP - a.mAP),
        delta_cmc=b.cmc - a.cmc,
        per_query_delta=b.per_query_ap - a.per_query_ap,
    )


def expected_random_ap(num_pos, num_items) -> float:
    """Expected AP of a uniformly random ordering of ``num_items`` rows of
    which ``num_pos`` are relevant."""
    R, N = num_pos, num_items
    r = np.arange(1, N + 1, dtype=np.float64)
    if N == 1:
        return 1.0
    return float(np.sum(1.0 / r + (R - 1) * (r - 1) / ((N - 1) * r)) / N)


def format_table(rows, ranks=(1, 5, 10)) -> str:
    """Fixed-width table of ``(name, EvalReport)`` pairs."""
    head = f"{'method':<28}" + "".join(f"{'Rank-' + str(k):>9}" for k in ranks) + f"{'mAP':>9}"
    lines = [head, "-" * len(head)]
    for name, rep in rows:
        cells = "".join(
            f"{100 * rep.cmc[k - 1]:>9.1f}" if k <= len(rep.cmc) else f"{'-':>9}" for k in ranks
        )
        lines.append(f"{name:<28}{cells}{100 * rep.mAP:>9.1f}")
    return "\n".join(lines)
