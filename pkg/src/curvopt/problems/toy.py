"""Separable quadratic finite sums used for driver tests and demonstrations."""

from __future__ import annotations

from typing import Any

import numpy as np

from ..oracle import FiniteSumOracle, ParamVector


class QuadraticProblem(FiniteSumOracle):
    """f_i(x) = 1/2 sum_k D[i, k] x_k^2.

    `curvature` is either a length-d diagonal shared by every sample or an
    (n, d) array of per-sample diagonals. The Gauss-Newton product uses
    `ggn_curvature` (defaults to |D|, the PSD part).
    """

    def __init__(
        self,
        curvature: Any,
        *,
        n_samples: int = 1,
        ggn_curvature: Any | None = None,
        chunk_size: int = 4096,
    ):
        D = np.asarray(curvature, dtype=np.float64)
        if D.ndim == 1:
            D = np.tile(D, (n_samples, 1))
        if D.ndim != 2:
            raise ValueError("curvature must be a vector or an (n, d) array")
        G = np.abs(D) if ggn_curvature is None else np.asarray(ggn_curvature, dtype=np.float64)
        if G.ndim == 1:
            G = np.tile(G, (D.shape[0], 1))
        if G.shape != D.shape:
            raise ValueError("ggn_curvature must match curvature")
        super().__init__(D.shape[0], D.shape[1], chunk_size=chunk_size)
        self.curvature = D
        self.ggn_curvature = G

    def _loss_chunk(self, x: ParamVector, idx: np.ndarray, w: np.ndarray) -> float:
        return float(w @ (0.5 * (self.curvature[idx] @ (x * x))))

    def _grad_chunk(self, x: ParamVector, idx: np.ndarray, w: np.ndarray) -> ParamVector:
        return (w @ self.curvature[idx]) * x

    def _hvp_chunk(self, x: ParamVector, v: ParamVector, idx: np.ndarray, w: np.ndarray) -> ParamVector:
        return (w @ self.curvature[idx]) * v

    def _ggn_chunk(self, x: ParamVector, v: ParamVector, idx: np.ndarray, w: np.ndarray) -> ParamVector:
        return (w @ self.ggn_curvature[idx]) * v


def saddle_problem() -> QuadraticProblem:
    """F(x) = 1/2 (x_1^2 - x_2^2) with Gauss-Newton curvature diag(1, 1)."""
    return QuadraticProblem([1.0, -1.0])


def isotropic_quadratic(dim: int, n_samples: int = 1) -> QuadraticProblem:
    """f_i(x) = 1/2 ||x||^2."""
    return QuadraticProblem(np.ones(dim), n_samples=n_samples)
