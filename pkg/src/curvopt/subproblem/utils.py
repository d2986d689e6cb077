from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..oracle import ParamVector


class Termination(str, Enum):
    INTERIOR = "interior_convergence"
    BOUNDARY = "boundary_hit"
    NEGATIVE_CURVATURE = "negative_curvature"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True, slots=True, eq=False)
class SubproblemResult:
    """Approximate model minimizer with its model value and product count."""

    step: ParamVector
    model_value: float
    hvp_count: int
    termination: Termination

    @property
    def step_norm(self) -> float:
        return float(np.linalg.norm(self.step))


def quadratic_model(g: ParamVector, s: ParamVector, Hs: ParamVector) -> float:
    return float(g @ s + 0.5 * (s @ Hs))


def cubic_model(g: ParamVector, s: ParamVector, Hs: ParamVector, sigma: float) -> float:
    return quadratic_model(g, s, Hs) + sigma / 3.0 * float(np.linalg.norm(s)) ** 3


def boundary_step_length(z: ParamVector, d: ParamVector, delta: float) -> float:
    """Positive root tau of ||z + tau d|| = delta, for ||z|| <= delta."""
    dd = float(d @ d)
    zd = float(z @ d)
    zz = float(z @ z)
    disc = max(zd * zd + dd * (delta * delta - zz), 0.0)
    root = np.sqrt(disc)
    # Avoid cancellation when zd > 0.
    if zd > 0:
        return float((delta * delta - zz) / (zd + root))
    return float((root - zd) / dd)


def tr_cauchy_step(g: ParamVector, Hg: ParamVector, delta: float) -> ParamVector:
    """Minimizer of the quadratic model along -g inside the ball of radius delta."""
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return np.zeros_like(g)
    gHg = float(g @ Hg)
    tau = delta / gnorm
    if gHg > 0:
        tau = min(gnorm * gnorm / gHg, tau)
    return -tau * g
