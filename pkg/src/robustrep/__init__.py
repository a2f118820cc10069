"""Robust penalties, factorized robust PCA and robust clustering."""
from ._backend import BACKEND
from .penalties import (
    Family,
    PenaltySpec,
    elementwise_value_and_grad,
    elementwise_value_sum,
    penalty_gradient,
    penalty_value,
    soft_threshold,
)
from .solver import (
    BlockProblem,
    NonFiniteObjective,
    RankDeficient,
    SolveConfig,
    SolveReport,
    palm_solve,
    project_orthonormal_columns,
    prox_l1_offdiag,
)
from .rpca import RpcaInput, RpcaResult, foreground_mask, recover_sparse, rpca_solve
from .clustering import (
    ClusterAssignment,
    KMeansDegenerate,
    NotSymmetric,
    SpectralEmbedding,
    build_similarity,
    clustering_error,
    eig_factorize,
    gaussian_affinity,
    kmeans,
    robust_eig_factorize,
    spectral_cluster,
    subspace_represent,
)
from .datagen import (
    SyntheticDataset,
    gen_dynamic_background,
    gen_five_clusters,
    gen_union_of_subspaces,
)

__version__ = "0.1.0"
