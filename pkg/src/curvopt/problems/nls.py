"""
Non-linear least squares binary classification.

    F(w) = (1/n) sum_i (y_i - phi(a_i^T w))^2,   phi = logistic sigmoid,

with labels y_i in {0, 1} and rows a_i stored as CSR. Per-sample curvature is
rank one, l''(z_i) a_i a_i^T, so products cost O(nnz) per batch.
"""

from __future__ import annotations

from typing import Any

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .._forward_cache import ForwardCache
from ..errors import DimensionMismatchError, LabelMappingError
from ..oracle import FiniteSumOracle, ParamVector, as_param_vector


def sigmoid(z: Any) -> Any:
    """1 / (1 + exp(-z)), stable for large |z|."""
    return expit(z)


def nls_scalar_second_derivative(z: Any, y: Any) -> Any:
    """Second derivative of (y - phi(z))^2 with respect to z.

    l''(z) = 2 phi'(z)^2 - 2 (y - phi(z)) phi''(z) with phi' = phi(1 - phi)
    and phi'' = phi(1 - phi)(1 - 2 phi).
    """
    phi = expit(z)
    d1 = phi * (1.0 - phi)
    d2 = d1 * (1.0 - 2.0 * phi)
    return 2.0 * d1 * d1 - 2.0 * (y - phi) * d2


class NLSProblem(FiniteSumOracle):
    def __init__(
        self,
        features: Any,
        labels: Any,
        *,
        chunk_size: int = 4096,
        workers: int | None = None,
        cache_capacity: int = 32,
    ):
        A = sp.csr_matrix(features, dtype=np.float64)
        y = np.asarray(labels, dtype=np.float64).ravel()
        if A.shape[0] != y.shape[0]:
            raise DimensionMismatchError("labels", A.shape[0], y.shape[0])
        if not np.all((y == 0.0) | (y == 1.0)):
            raise LabelMappingError("NLS labels must be 0 or 1; binarize first")
        super().__init__(A.shape[0], A.shape[1], chunk_size=chunk_size, workers=workers)
        self.features = A
        self.labels = y
        self._row_norms_sq = np.asarray(A.multiply(A).sum(axis=1), dtype=np.float64).ravel()
        self._cache = ForwardCache(cache_capacity)

    @property
    def row_norms_sq(self) -> np.ndarray:
        return self._row_norms_sq

    def _forward(self, x: ParamVector, idx: np.ndarray) -> tuple[sp.csr_matrix, np.ndarray]:
        """Rows a_idx and margins z = a_idx^T x, memoized per (x, idx)."""
        key = ForwardCache.make_key(x, idx)

        def compute() -> tuple[sp.csr_matrix, np.ndarray]:
            rows = self.features[idx]
            return rows, rows @ x

        return self._cache.get_or_compute(key, compute)

    def _loss_chunk(self, x: ParamVector, idx: np.ndarray, w: np.ndarray) -> float:
        _, z = self._forward(x, idx)
        resid = self.labels[idx] - expit(z)
        return float(w @ (resid * resid))

    def _grad_chunk(self, x: ParamVector, idx: np.ndarray, w: np.ndarray) -> ParamVector:
        rows, z = self._forward(x, idx)
        phi = expit(z)
        coeff = 2.0 * (phi - self.labels[idx]) * phi * (1.0 - phi)
        return rows.T @ (w * coeff)

    def _hvp_chunk(self, x: ParamVector, v: ParamVector, idx: np.ndarray, w: np.ndarray) -> ParamVector:
        rows, z = self._forward(x, idx)
        curv = nls_scalar_second_derivative(z, self.labels[idx])
        return rows.T @ (w * curv * (rows @ v))

    def _ggn_chunk(self, x: ParamVector, v: ParamVector, idx: np.ndarray, w: np.ndarray) -> ParamVector:
        rows, z = self._forward(x, idx)
        phi = expit(z)
        d1 = phi * (1.0 - phi)
        return rows.T @ (w * 2.0 * d1 * d1 * (rows @ v))

    def scalar_second_derivatives(self, x: Any) -> np.ndarray:
        """l''(a_i^T x) for every sample (one forward pass, charged)."""
        x = as_param_vector(x, self.dim)
        out = nls_scalar_second_derivative(self.features @ x, self.labels)
        self.ledger.charge(forward=self.n)
        return np.asarray(out, dtype=np.float64)

    def predict_proba(self, x: Any) -> np.ndarray:
        x = as_param_vector(x, self.dim)
        return expit(self.features @ x)

    def error_rate(self, x: Any) -> float:
        """Fraction misclassified at threshold 0.5 (not charged to the ledger)."""
        pred = (self.predict_proba(x) >= 0.5).astype(np.float64)
        return float(np.mean(pred != self.labels))


def nls_loss(problem: NLSProblem, w: Any, batch: Any = None) -> float:
    return problem.loss(w, batch)


def nls_grad(problem: NLSProblem, w: Any, batch: Any = None) -> ParamVector:
    return problem.grad(w, batch)


def nls_hvp(problem: NLSProblem, w: Any, v: Any, batch: Any = None) -> ParamVector:
    return problem.hvp(w, v, batch)


def nls_ggn_vp(problem: NLSProblem, w: Any, v: Any, batch: Any = None) -> ParamVector:
    return problem.ggn_vp(w, v, batch)
