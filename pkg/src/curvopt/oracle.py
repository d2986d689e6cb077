"""
Finite-sum objective oracles and the propagation ledger.

Provides:
- ParamVector helpers (`as_param_vector`)
- BatchSpec: sample indices, per-index weights and an overall scale
- PropagationLedger plus the per-iteration cost model (`charge_iteration`)
- FiniteSumOracle: base class with deterministic chunked reductions
- eval_loss / eval_grad / hvp: module-level entry points
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable

import numpy as np
import numpy.typing as npt

from ._common import chunk_slices
from .errors import (
    DimensionMismatchError,
    InvalidBatchError,
    NonFiniteError,
    UnknownAlgorithmError,
)

ParamVector = npt.NDArray[np.float64]


def as_param_vector(x: Any, dim: int | None = None, *, name: str = "x") -> ParamVector:
    """Coerce to a 1-D float64 vector, checking length and finiteness."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatchError(name, "1-D vector", arr.shape)
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatchError(name, dim, arr.shape[0])
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite entries")
    return arr


# ============================================================================
# Batches
# ============================================================================


@dataclass(frozen=True, slots=True, eq=False)
class BatchSpec:
    """Weighted sample selection reduced as `scale * sum_j weights[j] * f_{indices[j]}`.

    The full batch uses unit weights with scale 1/n (the mean). Sampled
    Hessian batches carry the importance weights 1/(n|S|p_j) with scale 1.
    Indices may repeat (sampling with replacement).
    """

    indices: npt.NDArray[np.intp]
    weights: npt.NDArray[np.float64]
    scale: float = 1.0

    @classmethod
    def full(cls, n: int) -> "BatchSpec":
        return cls(np.arange(n, dtype=np.intp), np.ones(n), 1.0 / n)

    @classmethod
    def mean_of(cls, indices: Any) -> "BatchSpec":
        """Plain average over `indices` (mini-batches, single samples)."""
        idx = np.asarray(indices, dtype=np.intp)
        return cls(idx, np.full(idx.shape[0], 1.0 / max(idx.shape[0], 1)), 1.0)

    def __len__(self) -> int:
        return int(self.indices.shape[0])

    def is_full(self, n: int) -> bool:
        return len(self) == n and bool(np.array_equal(self.indices, np.arange(n)))

    def validate(self, n: int) -> None:
        if self.indices.ndim != 1 or self.weights.shape != self.indices.shape:
            raise InvalidBatchError("indices and weights must be 1-D arrays of equal length")
        if len(self) == 0:
            raise InvalidBatchError("batch is empty")
        if self.indices.min() < 0 or self.indices.max() >= n:
            raise InvalidBatchError(f"batch indices must lie in [0, {n - 1}]")
        if not np.all(np.isfinite(self.weights)) or np.any(self.weights <= 0):
            raise InvalidBatchError("batch weights must be finite and strictly positive")
        if not np.isfinite(self.scale) or self.scale <= 0:
            raise InvalidBatchError("batch scale must be finite and strictly positive")


# ============================================================================
# Propagation accounting
# ============================================================================


class AlgorithmKind(str, Enum):
    TR = "tr"
    ARC = "arc"
    GN = "gn"
    LBFGS = "lbfgs"
    SGD = "sgd"


@dataclass(slots=True)
class PropagationLedger:
    """Running forward/backward propagation counts.

    `iteration_charges` holds one entry per driver iteration (the cost-model
    values); `overhead_charges` holds extra charges such as refreshing a
    non-uniform sampling distribution.
    """

    forward_count: int = 0
    backward_count: int = 0
    iteration_charges: list[int] = field(default_factory=list)
    overhead_charges: list[int] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.forward_count + self.backward_count

    def charge(self, forward: int = 0, backward: int = 0) -> int:
        if forward < 0 or backward < 0:
            raise ValueError("propagation charges must be non-negative")
        self.forward_count += int(forward)
        self.backward_count += int(backward)
        return int(forward) + int(backward)


def charge_iteration(
    ledger: PropagationLedger,
    algorithm_kind: AlgorithmKind | str,
    n: int,
    batch_size: int,
    r: int,
) -> int:
    """Charge one outer iteration and return its propagation count.

    Second-order methods (TR, ARC, GN) pay 2(n + |S| r): one full
    function+gradient pass plus r Hessian-vector products on the Hessian
    batch. L-BFGS pays 2n, SGD pays 2|S|. Charges split evenly into forward
    and backward passes.
    """

    try:
        kind = AlgorithmKind(algorithm_kind)
    except ValueError:
        raise UnknownAlgorithmError(f"unknown algorithm kind {algorithm_kind!r}") from None
    if r < 0:
        raise ValueError("r must be non-negative")
    if batch_size < 0 or batch_size > n:
        raise ValueError(f"batch_size must lie in [0, n={n}], got {batch_size}")

    if kind in (AlgorithmKind.TR, AlgorithmKind.ARC, AlgorithmKind.GN):
        half = n + batch_size * r
    elif kind is AlgorithmKind.LBFGS:
        half = n
    else:
        half = batch_size
    ledger.charge(forward=half, backward=half)
    ledger.iteration_charges.append(2 * half)
    return 2 * half


def charge_distribution_refresh(ledger: PropagationLedger, n: int) -> int:
    """One forward pass over the data to recompute non-uniform probabilities."""
    ledger.charge(forward=n)
    ledger.overhead_charges.append(n)
    return n


# ============================================================================
# Oracles
# ============================================================================


class FiniteSumOracle(ABC):
    """Base class for objectives F(x) = (1/n) sum_i f_i(x).

    Subclasses implement weighted chunk kernels over an index array; the base
    class validates inputs, splits the batch into fixed-size chunks, sums the
    chunk results in index order (optionally evaluating chunks on a thread
    pool) and charges the call-level `ledger`:

    - loss: |batch| forward
    - grad: |batch| forward + |batch| backward
    - hvp / ggn_vp: |batch| forward + |batch| backward

    Driver-level accounting is kept separately by the optimizers.
    """

    def __init__(self, n: int, dim: int, *, chunk_size: int = 4096, workers: int | None = None):
        if n <= 0 or dim <= 0:
            raise ValueError("n and dim must be positive")
        self.n = int(n)
        self.dim = int(dim)
        self.chunk_size = int(chunk_size)
        self.workers = workers
        self.ledger = PropagationLedger()
        self._executor: ThreadPoolExecutor | None = None

    # -- kernels -------------------------------------------------------------

    @abstractmethod
    def _loss_chunk(self, x: ParamVector, idx: np.ndarray, w: np.ndarray) -> float: ...

    @abstractmethod
    def _grad_chunk(self, x: ParamVector, idx: np.ndarray, w: np.ndarray) -> ParamVector: ...

    @abstractmethod
    def _hvp_chunk(
        self, x: ParamVector, v: ParamVector, idx: np.ndarray, w: np.ndarray
    ) -> ParamVector: ...

    def _ggn_chunk(
        self, x: ParamVector, v: ParamVector, idx: np.ndarray, w: np.ndarray
    ) -> ParamVector:
        raise NotImplementedError(f"{type(self).__name__} has no Gauss-Newton product")

    @property
    def supports_ggn(self) -> bool:
        return type(self)._ggn_chunk is not FiniteSumOracle._ggn_chunk

    # -- reduction -----------------------------------------------------------

    def _pool(self) -> ThreadPoolExecutor | None:
        if not self.workers or self.workers <= 1:
            return None
        if self._executor is None:
            self._executor = ThreadPoolExecutor(
                max_workers=self.workers, thread_name_prefix="curvopt-oracle"
            )
        return self._executor

    def _reduce(self, kernel: Callable[..., Any], batch: BatchSpec, *args: ParamVector) -> Any:
        idx, w = batch.indices, batch.weights
        spans = chunk_slices(len(batch), self.chunk_size)
        pool = self._pool()
        if pool is not None and len(spans) > 1:
            parts = list(pool.map(lambda sl: kernel(*args, idx[sl], w[sl]), spans))
        else:
            parts = [kernel(*args, idx[sl], w[sl]) for sl in spans]
        total = parts[0]
        for part in parts[1:]:
            total = total + part
        return total * batch.scale

    def _prepare(self, x: Any, batch: BatchSpec | None) -> tuple[ParamVector, BatchSpec]:
        x = as_param_vector(x, self.dim)
        if batch is None:
            batch = BatchSpec.full(self.n)
        batch.validate(self.n)
        return x, batch

    # -- public API ----------------------------------------------------------

    def loss(self, x: Any, batch: BatchSpec | None = None) -> float:
        x, batch = self._prepare(x, batch)
        value = float(self._reduce(self._loss_chunk, batch, x))
        self.ledger.charge(forward=len(batch))
        return value

    def grad(self, x: Any, batch: BatchSpec | None = None) -> ParamVector:
        x, batch = self._prepare(x, batch)
        out = np.asarray(self._reduce(self._grad_chunk, batch, x), dtype=np.float64)
        self.ledger.charge(forward=len(batch), backward=len(batch))
        return out

    def hvp(self, x: Any, v: Any, batch: BatchSpec | None = None) -> ParamVector:
        x, batch = self._prepare(x, batch)
        v = as_param_vector(v, self.dim, name="v")
        out = np.asarray(self._reduce(self._hvp_chunk, batch, x, v), dtype=np.float64)
        self.ledger.charge(forward=len(batch), backward=len(batch))
        return out

    def ggn_vp(self, x: Any, v: Any, batch: BatchSpec | None = None) -> ParamVector:
        x, batch = self._prepare(x, batch)
        v = as_param_vector(v, self.dim, name="v")
        out = np.asarray(self._reduce(self._ggn_chunk, batch, x, v), dtype=np.float64)
        self.ledger.charge(forward=len(batch), backward=len(batch))
        return out

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self) -> "FiniteSumOracle":
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()


def eval_loss(oracle: FiniteSumOracle, x: Any, batch: BatchSpec | None = None) -> float:
    """Weighted batch mean of f_i at x. A non-finite value is returned as-is."""
    return oracle.loss(x, batch)


def eval_grad(oracle: FiniteSumOracle, x: Any, batch: BatchSpec | None = None) -> ParamVector:
    return oracle.grad(x, batch)


def hvp(oracle: FiniteSumOracle, x: Any, v: Any, batch: BatchSpec | None = None) -> ParamVector:
    return oracle.hvp(x, v, batch)
