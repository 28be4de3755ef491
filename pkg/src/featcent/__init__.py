"""Training-free feature centralization and re-identification evaluation
toolkit: neighbor feature centralization, auxiliary-feature aggregation,
identity-density measurement, data cleansing, retrieval evaluation, and a
seeded synthetic benchmark generator.
"""

__version__ = "0.1.0"

from .centralize import (
    AggregateParams,
    AuxFeatureSet,
    NfcParams,
    PipelineResult,
    aggregate,
    nfc,
    pipeline,
    select_representative,
)
from .cleanse import (
    CleanseReport,
    PoseRecord,
    PoseValidConfig,
    build_manifests,
    normalize_pose,
    outlier_filter,
    pose_valid,
)
from .core import (
    DistanceMatrix,
    FeatureSet,
    IdentityStats,
    fit_identity_stats,
    identity_center,
    l2_normalize,
    mahalanobis,
    pairwise_distances,
)
from .evaluation import EvalProtocol, EvalResult, evaluate, id2, k_reciprocal_rerank
from .synth import SynthConfig, generate, split_query_gallery

__all__ = [
    "AggregateParams", "AuxFeatureSet", "CleanseReport", "DistanceMatrix",
    "EvalProtocol", "EvalResult", "FeatureSet", "IdentityStats", "NfcParams",
    "PipelineResult", "PoseRecord", "PoseValidConfig", "SynthConfig",
    "aggregate", "build_manifests", "evaluate", "fit_identity_stats",
    "generate", "id2", "identity_center", "k_reciprocal_rerank",
    "l2_normalize", "mahalanobis", "nfc", "normalize_pose", "outlier_filter",
    "pairwise_distances", "pipeline", "pose_valid", "select_representative",
    "split_query_gallery",
]
