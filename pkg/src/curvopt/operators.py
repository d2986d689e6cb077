"""Matrix-free symmetric operators for sub-problem solvers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .oracle import BatchSpec, FiniteSumOracle, ParamVector, as_param_vector


@dataclass(slots=True)
class HessianOperator:
    """Symmetric linear map v -> Hv that counts its applications.

    `calls` is the number of products issued; solvers read it to report
    their Hessian-vector product count.
    """

    dim: int
    matvec_fn: Callable[[ParamVector], ParamVector]
    kind: str = "full"
    batch_size: int = 0
    calls: int = 0

    def matvec(self, v: ParamVector) -> ParamVector:
        self.calls += 1
        return self.matvec_fn(v)

    def __matmul__(self, v: ParamVector) -> ParamVector:
        return self.matvec(v)

    @classmethod
    def from_dense(cls, matrix: Any) -> "HessianOperator":
        H = np.asarray(matrix, dtype=np.float64)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {H.shape}")
        return cls(dim=H.shape[0], matvec_fn=lambda v: H @ v, kind="dense")


def hessian_operator(
    oracle: FiniteSumOracle, x: Any, batch: BatchSpec | None = None
) -> HessianOperator:
    x = as_param_vector(x, oracle.dim).copy()
    batch = batch if batch is not None else BatchSpec.full(oracle.n)
    kind = "full" if batch.is_full(oracle.n) else "subsampled"
    return HessianOperator(
        dim=oracle.dim,
        matvec_fn=lambda v: oracle.hvp(x, v, batch),
        kind=kind,
        batch_size=len(batch),
    )


def ggn_operator(
    oracle: FiniteSumOracle, x: Any, batch: BatchSpec | None = None
) -> HessianOperator:
    if not oracle.supports_ggn:
        raise TypeError(f"{type(oracle).__name__} does not expose a Gauss-Newton product")
    x = as_param_vector(x, oracle.dim).copy()
    batch = batch if batch is not None else BatchSpec.full(oracle.n)
    return HessianOperator(
        dim=oracle.dim,
        matvec_fn=lambda v: oracle.ggn_vp(x, v, batch),
        kind="ggn",
        batch_size=len(batch),
    )
