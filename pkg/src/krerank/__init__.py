"""k-reciprocal encoding re-ranking for retrieval and person re-identification."""

from krerank.core import (
    DistanceMatrix,
    EmbeddingSet,
    RankedResult,
    RerankParams,
    validate_params,
)
from krerank.distance import MetricSpec, normalize_distances, pairwise_distance
from krerank.neighbors import (
    NeighborTable,
    ReciprocalSet,
    expand_reciprocal,
    k_nearest,
    k_reciprocal,
)
from krerank.encoding import ReciprocalFeature, encode, local_query_expansion
from krerank.jaccard import jaccard_distance, jaccard_matrix
from krerank.aggregate import (
    GalleryIndex,
    build_gallery_index,
    final_distance,
    query_one,
    rank_distances,
    rerank,
)
from krerank.evaluation import EvalReport, GroundTruth, evaluate
from krerank.baselines import average_query_expansion

__version__ = "0.1.0"

__all__ = [
    "DistanceMatrix",
    "EmbeddingSet",
    "EvalReport",
    "GalleryIndex",
    "GroundTruth",
    "MetricSpec",
    "NeighborTable",
    "RankedResult",
    "ReciprocalFeature",
    "ReciprocalSet",
    "RerankParams",
    "average_query_expansion",
    "build_gallery_index",
    "encode",
    "evaluate",
    "expand_reciprocal",
    "final_distance",
    "jaccard_distance",
    "jaccard_matrix",
    "k_nearest",
    "k_reciprocal",
    "local_query_expansion",
    "normalize_distances",
    "pairwise_distance",
    "query_one",
    "rank_distances",
    "rerank",
    "validate_params",
]
