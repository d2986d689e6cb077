from __future__ import annotations

import logging
from collections import deque
from typing import Any, Iterable

import numpy as np

from ..oracle import (
    AlgorithmKind,
    FiniteSumOracle,
    ParamVector,
    PropagationLedger,
    as_param_vector,
    charge_iteration,
)
from .config import LBFGSConfig
from .records import Evaluator, IterationRecord, RecordSink, StopReason, Trace

logger = logging.getLogger(__name__)

_PAIR_RTOL = 1e-10

CurvaturePair = tuple[ParamVector, ParamVector]


def curvature_pair_ok(s: ParamVector, y: ParamVector) -> bool:
    """Keep (s, y) only if <s, y> > 1e-10 ||s|| ||y||."""
    return float(s @ y) > _PAIR_RTOL * float(np.linalg.norm(s)) * float(np.linalg.norm(y))


def two_loop_direction(g: ParamVector, pairs: Iterable[CurvaturePair]) -> ParamVector:
    """-H_k g for the L-BFGS inverse-Hessian approximation (oldest pair first).

    The initial matrix is gamma I with gamma = <s, y> / <y, y> of the newest pair.
    """
    pairs = list(pairs)
    q = np.array(g, dtype=np.float64)
    if not pairs:
        return -q
    rhos = [1.0 / float(s @ y) for s, y in pairs]
    alphas = []
    for (s, y), rho in zip(reversed(pairs), reversed(rhos)):
        a = rho * float(s @ q)
        q -= a * y
        alphas.append(a)
    s_new, y_new = pairs[-1]
    r = (float(s_new @ y_new) / float(y_new @ y_new)) * q
    for (s, y), rho, a in zip(pairs, rhos, reversed(alphas)):
        b = rho * float(y @ r)
        r += (a - b) * s
    return -r


def run_lbfgs(
    oracle: FiniteSumOracle,
    config: LBFGSConfig,
    x0: Any,
    *,
    ledger: PropagationLedger | None = None,
    evaluator: Evaluator | None = None,
    on_record: RecordSink | None = None,
) -> Trace:
    """Full-batch L-BFGS with Armijo backtracking.

    Each iteration is charged 2n regardless of how many trial points the line
    search evaluates. When no Armijo point is found within `max_backtracks`
    the run records a zero step and stops.
    """

    ledger = ledger if ledger is not None else PropagationLedger()
    n = oracle.n
    x = as_param_vector(x0, oracle.dim, name="x0").copy()
    fx = oracle.loss(x)
    gx = oracle.grad(x)
    pairs: deque[CurvaturePair] = deque(maxlen=config.history)

    trace = Trace()
    trace.initial_loss = fx
    trace.stop_reason = StopReason.MAX_ITERS

    for t in range(config.max_iters):
        gnorm = float(np.linalg.norm(gx))
        if gnorm <= config.eps_g:
            trace.stop_reason = StopReason.CONVERGED
            break

        d = two_loop_direction(gx, pairs)
        slope = float(gx @ d)
        if slope >= 0:
            logger.debug("iter %d: not a descent direction, resetting history", t)
            pairs.clear()
            d = -gx
            slope = -gnorm * gnorm

        step = 1.0 if pairs else min(1.0, 1.0 / gnorm)
        found = False
        for _ in range(config.max_backtracks):
            trial = x + step * d
            f_trial = oracle.loss(trial) if np.all(np.isfinite(trial)) else float("inf")
            if f_trial <= fx + config.c1 * step * slope:
                found = True
                break
            step *= config.backtrack

        charge_iteration(ledger, AlgorithmKind.LBFGS, n, 0, 0)
        record = IterationRecord(iter=t, cumulative_propagations=ledger.total)
        if not found:
            record.train_loss = fx
            record.step_norm = 0.0
            record.accepted = False
        else:
            g_trial = oracle.grad(trial)
            s, y = trial - x, g_trial - gx
            if curvature_pair_ok(s, y):
                pairs.append((s, y))
            x, fx, gx = trial, f_trial, g_trial
            record.train_loss = fx
            record.step_norm = float(np.linalg.norm(s))
            record.accepted = True
        if evaluator is not None:
            record.train_error, record.test_error = evaluator(x)
        trace.append(record)
        if on_record is not None:
            on_record(record)

        if not found:
            trace.stop_reason = StopReason.LINE_SEARCH_FAILED
            logger.info("lbfgs line search failed at iteration %d", t)
            break
        if config.max_props is not None and ledger.total >= config.max_props:
            trace.stop_reason = StopReason.BUDGET
            break

    trace.final_x = x
    logger.info(
        "lbfgs stopped (%s) after %d iterations, %d propagations",
        trace.stop_reason.value, len(trace), ledger.total,
    )
    return trace
