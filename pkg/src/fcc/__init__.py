"""Cluster-consistency filtering of multi-image keypoint matches.

The package models matches across a collection of images as one sparse graph
over all keypoints, scores every match by comparing walk counts that stay
inside a keypoint cluster against walk counts that hop between two keypoints
of one image, iteratively reweights the graph by those scores, and finally
thresholds them to drop corrupted matches.  A synthetic scene generator and
evaluation metrics reproduce controlled experiments end to end.
"""

from .errors import (
    ConfigInvalid,
    EstimateNotSubset,
    FccError,
    HeaderMismatch,
    IndexOutOfRange,
    ParseError,
    PowerTooLarge,
    TooLargeForOracle,
    WithinImageEdge,
)
from .filtering import (
    FccConfig,
    FccResult,
    IterationTrace,
    fcc_run,
    fcc_scores,
    large_scale_schedule,
    midsize_schedule,
)
from .graph import (
    ComponentLabeling,
    ImagePartition,
    MatchGraph,
    build_graph,
    connected_components,
    cycle_consistent_completion,
)
from .metrics import (
    EvalReport,
    ScoreHistogram,
    er_walk_density,
    evaluate,
    score_histogram,
)
from .stats import (
    EdgeStatistics,
    SparsityStats,
    combine,
    dense_oracle,
    masked_s1,
    masked_s1_plus_s2,
    sparse_power,
    sparsity_of,
)
from .synthetic import (
    LabeledInstance,
    Projection,
    RemoveAddCorruption,
    ReplaceCorruption,
    SyntheticConfig,
    SyntheticScene,
    generate_instance,
    generate_matches,
    generate_scene,
    project_keypoints,
)

__version__ = "0.1.0"

__all__ = [
    "ComponentLabeling",
    "ConfigInvalid",
    "EdgeStatistics",
    "EstimateNotSubset",
    "EvalReport",
    "FccConfig",
    "FccError",
    "FccResult",
    "HeaderMismatch",
    "ImagePartition",
    "IndexOutOfRange",
    "IterationTrace",
    "LabeledInstance",
    "MatchGraph",
    "ParseError",
    "PowerTooLarge",
    "Projection",
    "RemoveAddCorruption",
    "ReplaceCorruption",
    "ScoreHistogram",
    "SparsityStats",
    "SyntheticConfig",
    "SyntheticScene",
    "TooLargeForOracle",
    "WithinImageEdge",
    "build_graph",
    "combine",
    "connected_components",
    "cycle_consistent_completion",
    "dense_oracle",
    "er_walk_density",
    "evaluate",
    "fcc_run",
    "fcc_scores",
    "generate_instance",
    "generate_matches",
    "generate_scene",
    "large_scale_schedule",
    "masked_s1",
    "masked_s1_plus_s2",
    "midsize_schedule",
    "project_keypoints",
    "score_histogram",
    "sparse_power",
    "sparsity_of",
]
