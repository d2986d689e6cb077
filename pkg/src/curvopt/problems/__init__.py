"""Objective families: NLS classification, small MLPs, and toy quadratics."""

from .initialization import InitScheme, initial_point
from .mlp import (
    Activation,
    DatasetInMemory,
    LossKind,
    MLPProblem,
    MLPSpec,
    mlp_forward,
    mlp_ggn_vp,
    mlp_grad,
    mlp_hvp,
)
from .nls import (
    NLSProblem,
    nls_ggn_vp,
    nls_grad,
    nls_hvp,
    nls_loss,
    nls_scalar_second_derivative,
    sigmoid,
)
from .toy import QuadraticProblem, isotropic_quadratic, saddle_problem

__all__ = [
    "Activation",
    "DatasetInMemory",
    "InitScheme",
    "LossKind",
    "MLPProblem",
    "MLPSpec",
    "NLSProblem",
    "QuadraticProblem",
    "initial_point",
    "isotropic_quadratic",
    "mlp_forward",
    "mlp_ggn_vp",
    "mlp_grad",
    "mlp_hvp",
    "nls_ggn_vp",
    "nls_grad",
    "nls_hvp",
    "nls_loss",
    "nls_scalar_second_derivative",
    "saddle_problem",
    "sigmoid",
]
