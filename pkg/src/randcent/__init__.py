"""Eigenvector and Katz-Bonacich centrality on random network models."""
from .inequality import Dominance, LorenzCurve, gini, lorenz_compare, lorenz_curve
from .netmodel import (
    BlockModel,
    ClusteredModel,
    ExpectedMatrix,
    ModelSpec,
    MulticharacteristicModel,
    RealizedNetwork,
    SpatialGridModel,
    WeightedIntervalModel,
    build_counterexample_split,
    build_counterexample_star,
    build_expected_sbm,
    build_kronecker,
    build_spatial_grid,
    group_sizes,
    sample_bernoulli,
    sample_clustered,
    sample_weighted_uniform,
)
from .spectral import (
    EigenPair,
    InfeasiblePhi,
    KatzResult,
    NonConvergence,
    SpectralDiagnostics,
    block_centrality,
    diagnostics,
    eigenvector_centrality,
    katz_bonacich,
    reduced_block_matrix,
    second_eigenvalue,
    top_eigenpair,
)

__version__ = "0.1.0"
