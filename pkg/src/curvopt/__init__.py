"""
Sub-sampled second-order optimization for non-convex finite sums.

Trust-region, adaptive cubic regularization and Gauss-Newton drivers over a
matrix-free finite-sum oracle, with uniform and non-uniform Hessian
sub-sampling, first-order baselines, and a propagation-counted experiment
harness.
"""

__version__ = "0.1.0"

from .data_io import (
    LabelRule,
    SparseDataset,
    binarize_labels,
    load_libsvm,
    max_abs_scale,
    parse_libsvm,
    select_labels,
    serialize_libsvm,
    train_test_split,
)
from .errors import (
    ConfigError,
    CurvoptError,
    DimensionMismatchError,
    InvalidBatchError,
    LibSVMFormatError,
    SamplingError,
    SolverFailureError,
)
from .operators import HessianOperator, ggn_operator, hessian_operator
from .optimizers import (
    ARCConfig,
    GNConfig,
    HessianSource,
    LBFGSConfig,
    SGDConfig,
    StopReason,
    TRConfig,
    Trace,
    run_arc,
    run_gauss_newton,
    run_lbfgs,
    run_sgd_momentum,
    run_tr,
)
from .oracle import (
    AlgorithmKind,
    BatchSpec,
    FiniteSumOracle,
    PropagationLedger,
    charge_iteration,
    eval_grad,
    eval_loss,
    hvp,
)
from .problems import MLPProblem, MLPSpec, NLSProblem, QuadraticProblem
from .sampling import build_nonuniform_distribution, sample_batch, uniform_distribution
from .subproblem import (
    SubproblemResult,
    dense_reference_cubic,
    dense_reference_tr,
    estimate_min_eigenvalue,
    lanczos_min_eigenpair,
    solve_cubic_subproblem,
    solve_tr_subproblem,
)

__all__ = [
    "ARCConfig",
    "AlgorithmKind",
    "BatchSpec",
    "ConfigError",
    "CurvoptError",
    "DimensionMismatchError",
    "FiniteSumOracle",
    "GNConfig",
    "HessianOperator",
    "HessianSource",
    "InvalidBatchError",
    "LBFGSConfig",
    "LabelRule",
    "LibSVMFormatError",
    "MLPProblem",
    "MLPSpec",
    "NLSProblem",
    "PropagationLedger",
    "QuadraticProblem",
    "SGDConfig",
    "SamplingError",
    "SolverFailureError",
    "SparseDataset",
    "StopReason",
    "SubproblemResult",
    "TRConfig",
    "Trace",
    "binarize_labels",
    "build_nonuniform_distribution",
    "charge_iteration",
    "dense_reference_cubic",
    "dense_reference_tr",
    "estimate_min_eigenvalue",
    "eval_grad",
    "eval_loss",
    "ggn_operator",
    "hessian_operator",
    "hvp",
    "lanczos_min_eigenpair",
    "load_libsvm",
    "max_abs_scale",
    "parse_libsvm",
    "run_arc",
    "run_gauss_newton",
    "run_lbfgs",
    "run_sgd_momentum",
    "run_tr",
    "sample_batch",
    "select_labels",
    "serialize_libsvm",
    "solve_cubic_subproblem",
    "solve_tr_subproblem",
    "train_test_split",
    "uniform_distribution",
]
