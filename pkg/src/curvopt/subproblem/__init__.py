"""Trust-region and cubic-regularization sub-problem solvers."""

from .dense import dense_reference_cubic, dense_reference_tr, solve_cubic_eigen, solve_tr_eigen
from .lanczos import (
    DEFAULT_LANCZOS_CAP,
    LanczosProcess,
    estimate_min_eigenvalue,
    lanczos_min_eigenpair,
    solve_cubic_subproblem,
    solve_tr_lanczos,
)
from .steihaug import solve_tr_subproblem
from .utils import (
    SubproblemResult,
    Termination,
    cubic_model,
    quadratic_model,
    tr_cauchy_step,
)

__all__ = [
    "DEFAULT_LANCZOS_CAP",
    "LanczosProcess",
    "SubproblemResult",
    "Termination",
    "cubic_model",
    "dense_reference_cubic",
    "dense_reference_tr",
    "estimate_min_eigenvalue",
    "lanczos_min_eigenpair",
    "quadratic_model",
    "solve_cubic_eigen",
    "solve_cubic_subproblem",
    "solve_tr_eigen",
    "solve_tr_lanczos",
    "solve_tr_subproblem",
    "tr_cauchy_step",
]
