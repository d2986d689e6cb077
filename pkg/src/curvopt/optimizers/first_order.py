from __future__ import annotations

import logging
from typing import Any

import numpy as np

from .._common import SeedLike, default_eval_every, normalize_generator, sample_count
from ..oracle import (
    AlgorithmKind,
    BatchSpec,
    FiniteSumOracle,
    ParamVector,
    PropagationLedger,
    as_param_vector,
    charge_iteration,
)
from .config import SGDConfig
from .records import Evaluator, IterationRecord, RecordSink, StopReason, Trace, evaluation_cost

logger = logging.getLogger(__name__)


def heavy_ball_step(
    x: ParamVector, v: ParamVector, g: ParamVector, alpha: float, beta: float
) -> tuple[ParamVector, ParamVector]:
    """v <- beta v + g; x <- x - alpha v."""
    v = beta * v + g
    return x - alpha * v, v


def run_sgd_momentum(
    oracle: FiniteSumOracle,
    config: SGDConfig,
    x0: Any,
    seed: SeedLike = 0,
    *,
    ledger: PropagationLedger | None = None,
    evaluator: Evaluator | None = None,
    on_record: RecordSink | None = None,
) -> Trace:
    """Mini-batch SGD with heavy-ball momentum and a fixed step size.

    Batches are drawn uniformly without replacement each iteration. The
    full-data loss (and `evaluator`) run every `eval_every` iterations and on
    the last one; those passes are not charged to `ledger`. A non-finite
    iterate or loss stops the run with `StopReason.DIVERGED`.
    """

    rng = normalize_generator(seed)
    ledger = ledger if ledger is not None else PropagationLedger()
    n = oracle.n
    size = sample_count(n, config.batch_ratio)
    every = config.eval_every or default_eval_every(n + evaluation_cost(evaluator, n), size)

    x = as_param_vector(x0, oracle.dim, name="x0").copy()
    v = np.zeros_like(x)
    trace = Trace()
    trace.initial_loss = oracle.loss(x)
    trace.stop_reason = StopReason.MAX_ITERS

    for t in range(config.max_iters):
        idx = rng.choice(n, size=size, replace=False)
        g = oracle.grad(x, BatchSpec.mean_of(idx))
        x, v = heavy_ball_step(x, v, g, config.alpha, config.beta)
        charge_iteration(ledger, AlgorithmKind.SGD, n, size, 0)

        out_of_budget = config.max_props is not None and ledger.total >= config.max_props
        last = out_of_budget or t == config.max_iters - 1
        record = IterationRecord(
            iter=t,
            cumulative_propagations=ledger.total,
            step_norm=float(config.alpha * np.linalg.norm(v)),
            batch_size=size,
        )

        diverged = not np.all(np.isfinite(x))
        if not diverged and (last or (t + 1) % every == 0):
            record.train_loss = oracle.loss(x)
            diverged = not np.isfinite(record.train_loss)
            if not diverged and evaluator is not None:
                record.train_error, record.test_error = evaluator(x)

        trace.append(record)
        if on_record is not None:
            on_record(record)
        if diverged:
            trace.stop_reason = StopReason.DIVERGED
            logger.info("sgd diverged at iteration %d (alpha=%g)", t, config.alpha)
            break
        if out_of_budget:
            trace.stop_reason = StopReason.BUDGET
            break

    trace.final_x = x
    logger.info(
        "sgd stopped (%s) after %d iterations, %d propagations",
        trace.stop_reason.value, len(trace), ledger.total,
    )
    return trace
