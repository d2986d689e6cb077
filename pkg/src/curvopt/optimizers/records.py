from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable

from ..oracle import ParamVector


class StopReason(str, Enum):
    CONVERGED = "converged"
    BUDGET = "budget"
    MAX_ITERS = "max_iters"
    DIVERGED = "diverged"
    LINE_SEARCH_FAILED = "line_search_failed"


@dataclass(slots=True)
class IterationRecord:
    """One outer iteration.

    `train_loss` and the error rates describe the iterate after the update;
    `radius_or_sigma` is the value the iteration used. Fields a method does
    not produce stay None.
    """

    iter: int
    cumulative_propagations: int
    train_loss: float | None = None
    train_error: float | None = None
    test_error: float | None = None
    rho: float | None = None
    radius_or_sigma: float | None = None
    step_norm: float | None = None
    accepted: bool | None = None
    subproblem_hvps: int | None = None
    batch_size: int | None = None


class Trace(list[IterationRecord]):
    """Records of one run plus how it ended."""

    def __init__(self, records: Iterable[IterationRecord] = ()):
        super().__init__(records)
        self.stop_reason: StopReason | None = None
        self.initial_loss: float | None = None
        self.final_x: ParamVector | None = None

    @property
    def props(self) -> list[int]:
        return [r.cumulative_propagations for r in self]


RecordSink = Callable[[IterationRecord], None]
Evaluator = Callable[[ParamVector], "tuple[float | None, float | None]"]


def evaluation_cost(evaluator: Evaluator | None, n: int) -> int:
    """Forward passes one evaluator call spends.

    Evaluators may declare a `cost` attribute; otherwise one pass over the
    n training samples is assumed.
    """
    if evaluator is None:
        return 0
    return int(getattr(evaluator, "cost", n))
