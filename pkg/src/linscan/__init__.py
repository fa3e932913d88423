"""Density clustering that keeps intersecting linear point features apart.

Each point is summarized by a local Gaussian (mean and spectrally normalized
covariance of its nearest neighbors), and clustering runs in that embedding
under a symmetrized KL-derived distance, so two lines crossing at a point are
far apart even where they touch in the plane.  The package also ships the
plain Euclidean DBSCAN/OPTICS engines it is benchmarked against, a synthetic
benchmark generator, pair-counting accuracy scores, and a random-search
tuning harness.
"""

__version__ = "0.1.0"

from .core import (
    NOISE,
    DegenerateMatrixError,
    EmbeddingSet,
    EmptyCloudError,
    GaussianEmbedding,
    LinscanParams,
    NeighborhoodTooSmallError,
    PointCloud,
    UndefinedOrientationError,
    canonicalize_labels,
)
from .density import DistanceOracle, OpticsResult, dbscan, extract_dbscan, extract_xi, optics
from .divergence import (
    TriangleReport,
    can_prune,
    dist,
    dist_matrix,
    kl_approx,
    kl_gaussian,
    triangle_slack,
)
from .embedding import embed_all, embed_point
from .evaluation import (
    BenchmarkResult,
    ParamRange,
    SearchResult,
    SearchSpace,
    SyntheticSpec,
    adjusted_rand_index,
    benchmark,
    data_diameter,
    generate,
    linscan_search_space,
    optics_search_space,
    rand_index,
    random_search,
)
from .neighbors import NeighborIndex, build, knn, knn_all, range_query
from .oracles import EmbeddingOracle, EuclideanOracle
from .pipeline import (
    ClusterSummary,
    LinscanResult,
    cluster_orientation,
    linscan,
    spectral_filter,
)

__all__ = [
    "NOISE",
    "__version__",
    # core types and errors
    "PointCloud",
    "LinscanParams",
    "GaussianEmbedding",
    "EmbeddingSet",
    "canonicalize_labels",
    "DegenerateMatrixError",
    "EmptyCloudError",
    "NeighborhoodTooSmallError",
    "UndefinedOrientationError",
    # neighbor index
    "NeighborIndex",
    "build",
    "knn",
    "knn_all",
    "range_query",
    # embedding
    "embed_point",
    "embed_all",
    # divergence
    "dist",
    "dist_matrix",
    "can_prune",
    "kl_gaussian",
    "kl_approx",
    "triangle_slack",
    "TriangleReport",
    # engines
    "DistanceOracle",
    "OpticsResult",
    "dbscan",
    "optics",
    "extract_dbscan",
    "extract_xi",
    "EuclideanOracle",
    "EmbeddingOracle",
    # pipeline
    "linscan",
    "LinscanResult",
    "spectral_filter",
    "ClusterSummary",
    "cluster_orientation",
    # evaluation
    "rand_index",
    "adjusted_rand_index",
    "SyntheticSpec",
    "generate",
    "ParamRange",
    "SearchSpace",
    "linscan_search_space",
    "optics_search_space",
    "data_diameter",
    "random_search",
    "SearchResult",
    "benchmark",
    "BenchmarkResult",
]
