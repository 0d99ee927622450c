"""Approximation algorithms for Bregman and metric tensor co-clustering."""

from .cluster1d import (
    Assignment,
    ClusterConfig,
    cluster_1d,
    kernel_kmeans,
    lloyd_refine,
    seed_dsq,
    seed_uniform,
)
from .divergence import (
    CurvatureBounds,
    DivergenceSpec,
    from_token,
    kl_curvature_bounds,
    representative,
    scalar_div,
    tensor_div,
)
from .exceptions import BudgetExceeded, DimensionError, DomainError
from .tenclus import (
    CoClustering,
    RunConfig,
    block_representatives,
    cotec,
    evaluate_objective,
    sitec,
    variant_pipeline,
)
from .tensor import DenseTensor, fibers_along, inner_product, lp_norm, multilinear_multiply

__version__ = "0.1.0"
