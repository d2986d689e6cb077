"""
Sub-sampled Hessian construction.

The estimator is H = (1/(n|S|)) sum_{j in S} (1/p_j) Hess f_j(x) with indices
drawn i.i.d. with replacement from {p_i}; it is unbiased for the mean Hessian.
For objectives f_i(x) = l_i(a_i^T x) the informative distribution is
p_i proportional to |l_i''(a_i^T x)| * ||a_i||^2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Protocol

import numpy as np
import numpy.typing as npt

from ._common import SeedLike, normalize_generator
from .errors import SamplingError
from .operators import HessianOperator, hessian_operator
from .oracle import BatchSpec, FiniteSumOracle

logger = logging.getLogger(__name__)

# Mixed in only when some numerators vanish, to keep every p_i > 0.
_UNIFORM_FLOOR = 1e-8


class DistributionKind(str, Enum):
    UNIFORM = "uniform"
    NONUNIFORM = "nonuniform"


class GeneralizedLinearProblem(Protocol):
    """Objectives of the form f_i(x) = l_i(a_i^T x)."""

    n: int

    @property
    def row_norms_sq(self) -> npt.NDArray[np.float64]: ...

    def scalar_second_derivatives(self, x: Any) -> npt.NDArray[np.float64]: ...


@dataclass(frozen=True, slots=True, eq=False)
class SamplingDistribution:
    probabilities: npt.NDArray[np.float64]
    kind: DistributionKind

    def __post_init__(self) -> None:
        p = self.probabilities
        if p.ndim != 1 or p.shape[0] == 0:
            raise SamplingError("probabilities must be a non-empty 1-D array")
        if np.any(p <= 0) or not np.all(np.isfinite(p)):
            raise SamplingError("probabilities must be finite and strictly positive")
        if abs(float(p.sum()) - 1.0) > 1e-12:
            raise SamplingError(f"probabilities sum to {float(p.sum())!r}, expected 1")

    @property
    def n(self) -> int:
        return int(self.probabilities.shape[0])


def uniform_distribution(n: int) -> SamplingDistribution:
    return SamplingDistribution(np.full(n, 1.0 / n), DistributionKind.UNIFORM)


def build_nonuniform_distribution(problem: GeneralizedLinearProblem, x: Any) -> SamplingDistribution:
    """p_i proportional to |l_i''(a_i^T x)| ||a_i||^2; uniform if every numerator is 0."""
    second = np.asarray(problem.scalar_second_derivatives(x), dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(second))
    if bad.size:
        raise SamplingError(
            f"non-finite second derivative at sample {int(bad[0])}", index=int(bad[0])
        )
    weights = np.abs(second) * problem.row_norms_sq
    total = float(weights.sum())
    n = weights.shape[0]
    if total <= 0.0 or not np.isfinite(total):
        logger.debug("all sampling numerators vanish; falling back to uniform")
        return uniform_distribution(n)
    p = weights / total
    if np.any(p <= 0):
        p = (1.0 - _UNIFORM_FLOOR) * p + _UNIFORM_FLOOR / n
    p = p / p.sum()
    return SamplingDistribution(p, DistributionKind.NONUNIFORM)


def sample_batch(dist: SamplingDistribution, size: int, seed: SeedLike) -> BatchSpec:
    """Draw `size` indices i.i.d. with replacement; weight 1/(n * size * p_j)."""
    if size < 1:
        raise ValueError("size must be at least 1")
    rng = normalize_generator(seed)
    n = dist.n
    if dist.kind is DistributionKind.UNIFORM:
        idx = rng.integers(0, n, size=size)
    else:
        idx = rng.choice(n, size=size, replace=True, p=dist.probabilities)
    idx = np.asarray(idx, dtype=np.intp)
    weights = 1.0 / (n * size * dist.probabilities[idx])
    return BatchSpec(idx, weights, 1.0)


def subsampled_hessian_operator(
    oracle: FiniteSumOracle, x: Any, batch: BatchSpec
) -> HessianOperator:
    """v -> sum_j w_j Hess f_j(x) v; each application charges 2|S| propagations."""
    return hessian_operator(oracle, x, batch)
