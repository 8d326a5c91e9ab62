"""Graph-convolution re-ranking for visual retrieval."""

__version__ = "0.1.0"

from .cross_camera import propagate_fused, run_cross_camera
from .evaluation import EvalReport, Protocol, RankResult, compare, evaluate_features, evaluate_reid, rank
from .features import FeatureSet, SampleMeta, Split, load_features, normalize_rows, save_features
from .graph import NeighborGraph, Restrict, build_graph, degrees, knn_select, pairwise_sq_dists, symmetrize
from .params import Mode, Params
from .pipeline import rerank
from .propagation import propagate_once, run_global, run_local
from .synth import SynthSpec, benchmark, generate
from .video import (
    ProfileMethod,
    ProfileSet,
    build_profiles,
    closed_form_profile,
    evaluate_profiles,
    mean_profile,
    run_gcrv,
)

__all__ = [
    "EvalReport",
    "FeatureSet",
    "Mode",
    "NeighborGraph",
    "Params",
    "ProfileMethod",
    "ProfileSet",
    "Protocol",
    "RankResult",
    "Restrict",
    "SampleMeta",
    "Split",
    "SynthSpec",
    "benchmark",
    "build_graph",
    "build_profiles",
    "closed_form_profile",
    "compare",
    "degrees",
    "evaluate_features",
    "evaluate_profiles",
    "evaluate_reid",
    "generate",
    "knn_select",
    "load_features",
    "mean_profile",
    "normalize_rows",
    "pairwise_sq_dists",
    "propagate_fused",
    "propagate_once",
    "rank",
    "rerank",
    "run_cross_camera",
    "run_gcrv",
    "run_global",
    "run_local",
    "save_features",
    "symmetrize",
]
