"""
Sub-sampled trust-region, cubic-regularization and Gauss-Newton drivers.

All three share one outer loop:

1. Full-data loss and gradient at x_t (the gradient is reused after a
   rejected step).
2. A Hessian batch per `hessian_source`, resampled every iteration.
3. Second-order criticality test: ||g|| <= eps_g and the smallest Ritz value
   of H_t >= -eps_H (probed only once the gradient test passes).
4. Approximate sub-problem solve; at a point that passes the gradient test but
   fails the curvature test the Ritz direction is also tried and the better
   model value wins.
5. rho = (F(x) - F(x + s)) / -m(s) on the full data, then accept/reject and
   update Delta (or sigma).
"""

from __future__ import annotations

import logging
from typing import Any

import numpy as np

from .._common import SeedLike, normalize_generator, sample_count
from ..errors import ConfigError, SolverFailureError
from ..operators import HessianOperator, ggn_operator, hessian_operator
from ..oracle import (
    AlgorithmKind,
    BatchSpec,
    FiniteSumOracle,
    ParamVector,
    PropagationLedger,
    as_param_vector,
    charge_distribution_refresh,
    charge_iteration,
)
from ..sampling import build_nonuniform_distribution, sample_batch, uniform_distribution
from ..subproblem import (
    SubproblemResult,
    lanczos_min_eigenpair,
    solve_cubic_subproblem,
    solve_tr_subproblem,
)
from .config import ARCConfig, GNConfig, HessianSource, TRConfig
from .records import Evaluator, IterationRecord, RecordSink, StopReason, Trace

logger = logging.getLogger(__name__)

_MIN_PREDICTED_DECREASE = 1e-14


def update_radius(delta: float, rho: float, eta1: float, eta2: float, gamma1: float, gamma2: float) -> float:
    if rho >= eta2:
        return gamma2 * delta
    if rho >= eta1:
        return gamma1 * delta
    return delta / gamma2


def update_sigma(sigma: float, rho: float, eta1: float, eta2: float, gamma1: float, gamma2: float) -> float:
    if rho >= eta2:
        return sigma / gamma2
    if rho >= eta1:
        return sigma / gamma1
    return gamma2 * sigma


def agreement_ratio(f_old: float, f_new: float, model_value: float) -> float:
    """(F(x) - F(x+s)) / -m(s); -inf for a non-finite trial or a vanishing prediction."""
    predicted = -model_value
    if not np.isfinite(f_new) or predicted < _MIN_PREDICTED_DECREASE:
        return float("-inf")
    return (f_old - f_new) / predicted


def _hessian_batch(
    oracle: FiniteSumOracle,
    x: ParamVector,
    cfg: TRConfig | ARCConfig,
    rng: np.random.Generator,
    ledger: PropagationLedger,
) -> BatchSpec:
    n = oracle.n
    if cfg.hessian_source is HessianSource.FULL:
        return BatchSpec.full(n)
    size = sample_count(n, cfg.sample_ratio)
    if cfg.hessian_source is HessianSource.UNIFORM:
        if size == n:
            return BatchSpec.full(n)
        return sample_batch(uniform_distribution(n), size, rng)
    dist = build_nonuniform_distribution(oracle, x)  # type: ignore[arg-type]
    charge_distribution_refresh(ledger, n)
    return sample_batch(dist, size, rng)


def _negative_curvature_step(
    kind: AlgorithmKind, H: HessianOperator, g: ParamVector, v: ParamVector, param: float
) -> tuple[ParamVector, float]:
    """Model minimizer along the descent-oriented unit direction v."""
    if g @ v > 0:
        v = -v
    vHv = float(v @ H.matvec(v))
    gv = float(g @ v)
    if kind is AlgorithmKind.ARC:
        alpha = (-vHv + np.sqrt(vHv * vHv - 4.0 * param * gv)) / (2.0 * param)
        return alpha * v, alpha * gv + 0.5 * alpha * alpha * vHv + param / 3.0 * alpha**3
    return param * v, param * gv + 0.5 * param * param * vHv


def _solve(
    kind: AlgorithmKind, cfg: Any, H: HessianOperator, g: ParamVector, param: float, tol: float
) -> SubproblemResult:
    if kind is AlgorithmKind.ARC:
        return solve_cubic_subproblem(H, g, param, tol, cfg.subproblem_max_iter or 250)
    return solve_tr_subproblem(H, g, param, tol, cfg.subproblem_max_iter, method=cfg.subproblem_method)


def _run_second_order(
    oracle: FiniteSumOracle,
    cfg: TRConfig | ARCConfig,
    x0: Any,
    seed: SeedLike,
    *,
    kind: AlgorithmKind,
    ledger: PropagationLedger | None,
    evaluator: Evaluator | None,
    on_record: RecordSink | None,
) -> Trace:
    rng = normalize_generator(seed)
    ledger = ledger if ledger is not None else PropagationLedger()
    use_ggn = kind is AlgorithmKind.GN
    if use_ggn and not oracle.supports_ggn:
        raise TypeError(f"{type(oracle).__name__} does not expose a Gauss-Newton product")
    if cfg.hessian_source is HessianSource.NONUNIFORM and not hasattr(
        oracle, "scalar_second_derivatives"
    ):
        raise ConfigError(f"non-uniform sampling needs per-sample curvature; {type(oracle).__name__} has none")

    n = oracle.n
    full = BatchSpec.full(n)
    x = as_param_vector(x0, oracle.dim, name="x0").copy()
    fx = oracle.loss(x, full)
    gx = oracle.grad(x, full)
    param = cfg.sigma0 if kind is AlgorithmKind.ARC else cfg.delta0
    update = update_sigma if kind is AlgorithmKind.ARC else update_radius
    make_operator = ggn_operator if use_ggn else hessian_operator

    trace = Trace()
    trace.initial_loss = fx
    trace.stop_reason = StopReason.MAX_ITERS

    def emit(record: IterationRecord) -> None:
        if evaluator is not None:
            record.train_error, record.test_error = evaluator(x)
        trace.append(record)
        if on_record is not None:
            on_record(record)

    for t in range(cfg.max_iters):
        batch = _hessian_batch(oracle, x, cfg, rng, ledger)
        H = make_operator(oracle, x, batch)
        gnorm = float(np.linalg.norm(gx))

        ritz_dir = None
        if gnorm <= cfg.eps_g:
            critical = True
            if not use_ggn:
                theta, ritz_dir = lanczos_min_eigenpair(H, cfg.eig_probe_iters, rng)
                critical = theta >= -cfg.eps_H
            if critical:
                props = charge_iteration(ledger, kind, n, len(batch), H.calls)
                emit(
                    IterationRecord(
                        iter=t,
                        cumulative_propagations=ledger.total,
                        train_loss=fx,
                        radius_or_sigma=param,
                        step_norm=0.0,
                        accepted=False,
                        subproblem_hvps=H.calls,
                        batch_size=len(batch),
                    )
                )
                trace.stop_reason = StopReason.CONVERGED
                logger.debug("iter %d: second-order critical (props=%d)", t, props)
                break

        result = _solve(kind, cfg, H, gx, param, min(0.5, np.sqrt(gnorm)))
        step, model = result.step, result.model_value
        if ritz_dir is not None:
            alt_step, alt_model = _negative_curvature_step(kind, H, gx, ritz_dir, param)
            if alt_model < model:
                step, model = alt_step, alt_model
        if gnorm > 0 and not np.any(step):
            raise SolverFailureError(
                f"sub-problem returned a zero step at iteration {t} with ||g||={gnorm:.3e} "
                f"and {'sigma' if kind is AlgorithmKind.ARC else 'delta'}={param:.3e}"
            )

        trial = x + step
        f_trial = oracle.loss(trial, full) if np.all(np.isfinite(trial)) else float("inf")
        rho = agreement_ratio(fx, f_trial, model)
        accepted = rho >= cfg.eta1
        used = param
        param = update(param, rho, cfg.eta1, cfg.eta2, cfg.gamma1, cfg.gamma2)
        if accepted:
            x = trial
            fx = f_trial
            gx = oracle.grad(x, full)

        charge_iteration(ledger, kind, n, len(batch), H.calls)
        emit(
            IterationRecord(
                iter=t,
                cumulative_propagations=ledger.total,
                train_loss=fx,
                rho=rho,
                radius_or_sigma=used,
                step_norm=float(np.linalg.norm(step)),
                accepted=accepted,
                subproblem_hvps=H.calls,
                batch_size=len(batch),
            )
        )
        logger.debug(
            "iter %d: F=%.6e rho=%.3e param=%.3e accepted=%s hvps=%d",
            t, fx, rho, used, accepted, H.calls,
        )
        if cfg.max_props is not None and ledger.total >= cfg.max_props:
            trace.stop_reason = StopReason.BUDGET
            break

    trace.final_x = x
    logger.info(
        "%s stopped (%s) after %d iterations, %d propagations, F=%.6e",
        kind.value, trace.stop_reason.value, len(trace), ledger.total, fx,
    )
    return trace


def run_tr(
    oracle: FiniteSumOracle,
    config: TRConfig,
    x0: Any,
    seed: SeedLike = 0,
    *,
    ledger: PropagationLedger | None = None,
    evaluator: Evaluator | None = None,
    on_record: RecordSink | None = None,
) -> Trace:
    """Sub-sampled trust region with CG-Steihaug (or Lanczos) steps."""
    return _run_second_order(
        oracle, config, x0, seed,
        kind=AlgorithmKind.TR, ledger=ledger, evaluator=evaluator, on_record=on_record,
    )


def run_arc(
    oracle: FiniteSumOracle,
    config: ARCConfig,
    x0: Any,
    seed: SeedLike = 0,
    *,
    ledger: PropagationLedger | None = None,
    evaluator: Evaluator | None = None,
    on_record: RecordSink | None = None,
) -> Trace:
    """Sub-sampled adaptive cubic regularization with generalized Lanczos steps."""
    return _run_second_order(
        oracle, config, x0, seed,
        kind=AlgorithmKind.ARC, ledger=ledger, evaluator=evaluator, on_record=on_record,
    )


def run_gauss_newton(
    oracle: FiniteSumOracle,
    config: GNConfig | TRConfig,
    x0: Any,
    seed: SeedLike = 0,
    *,
    ledger: PropagationLedger | None = None,
    evaluator: Evaluator | None = None,
    on_record: RecordSink | None = None,
) -> Trace:
    """Trust-region globalized Gauss-Newton on the (sub-sampled) GGN, undamped."""
    return _run_second_order(
        oracle, config, x0, seed,
        kind=AlgorithmKind.GN, ledger=ledger, evaluator=evaluator, on_record=on_record,
    )
