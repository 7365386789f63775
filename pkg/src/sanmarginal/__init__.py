"""Time-marginal distributions of Stochastic Automata Networks in low-rank
hierarchical Tucker format."""
from .dense import (
    DenseMatrix,
    DenseTensor,
    dense_generator,
    dense_marginal,
    matricize,
    tree_singular_values,
    unmatricize,
)
from .errors import (
    CapExceeded,
    DimMismatch,
    EmptyModeSet,
    IndexOutOfRange,
    InvalidConfig,
    InvalidGamma,
    InvalidModel,
    InvalidParams,
    InvalidPermutation,
    NotConverged,
    SanMarginalError,
    SingularSystem,
    TreeMismatch,
)
from .formats import *  # noqa: F401,F403
from .formats import __all__ as _formats_all
from .san import (
    MhnParams,
    SanModel,
    build_cp_generator,
    build_identity,
    build_initial,
    build_ones,
    diagonal_spectrum,
    from_mhn,
    gamma_bound,
    load_model,
    mhn_gamma,
    validate_model,
)
from .solver import (
    SolverConfig,
    SolverReport,
    convergence_bound,
    low_rank_uniformization,
    relative_residual,
)

__version__ = "0.1.0"

__all__ = [
    "CapExceeded",
    "DenseMatrix",
    "DenseTensor",
    "DimMismatch",
    "EmptyModeSet",
    "IndexOutOfRange",
    "InvalidConfig",
    "InvalidGamma",
    "InvalidModel",
    "InvalidParams",
    "InvalidPermutation",
    "MhnParams",
    "NotConverged",
    "SanMarginalError",
    "SanModel",
    "SingularSystem",
    "SolverConfig",
    "SolverReport",
    "TreeMismatch",
    "build_cp_generator",
    "build_identity",
    "build_initial",
    "build_ones",
    "convergence_bound",
    "dense_generator",
    "dense_marginal",
    "diagonal_spectrum",
    "from_mhn",
    "gamma_bound",
    "load_model",
    "low_rank_uniformization",
    "matricize",
    "mhn_gamma",
    "relative_residual",
    "tree_singular_values",
    "unmatricize",
    "validate_model",
    *_formats_all,
]
