"""Outer-loop optimizers and their settings."""

from ..subproblem import estimate_min_eigenvalue
from .config import ARCConfig, GNConfig, HessianSource, LBFGSConfig, SGDConfig, TRConfig
from .first_order import heavy_ball_step, run_sgd_momentum
from .lbfgs import curvature_pair_ok, run_lbfgs, two_loop_direction
from .records import IterationRecord, StopReason, Trace
from .trust_region import (
    agreement_ratio,
    run_arc,
    run_gauss_newton,
    run_tr,
    update_radius,
    update_sigma,
)

__all__ = [
    "ARCConfig",
    "GNConfig",
    "HessianSource",
    "IterationRecord",
    "LBFGSConfig",
    "SGDConfig",
    "StopReason",
    "TRConfig",
    "Trace",
    "agreement_ratio",
    "curvature_pair_ok",
    "estimate_min_eigenvalue",
    "heavy_ball_step",
    "run_arc",
    "run_gauss_newton",
    "run_lbfgs",
    "run_sgd_momentum",
    "run_tr",
    "two_loop_direction",
    "update_radius",
    "update_sigma",
]
