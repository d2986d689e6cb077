"""
Run execution and trace files.

Each run writes `<out>/<run_id>.csv` (one row per outer iteration, x-axis in
cumulative propagations) and `<out>/<run_id>.meta.json` (config echo, seed,
version, stop reason). Evaluation passes are charged to their own ledger.
"""

from __future__ import annotations

import csv
import logging
import os
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
import orjson

from .. import __version__
from ..data_io import (
    LabelRule,
    SparseDataset,
    binarize_labels,
    load_libsvm,
    max_abs_scale,
    select_labels,
    train_test_split,
)
from ..errors import ConfigError
from ..optimizers import (
    IterationRecord,
    Trace,
    run_arc,
    run_gauss_newton,
    run_lbfgs,
    run_sgd_momentum,
    run_tr,
)
from ..oracle import FiniteSumOracle, ParamVector, PropagationLedger
from ..problems import DatasetInMemory, MLPProblem, MLPSpec, NLSProblem, initial_point
from ..problems.mlp import LossKind
from .config import ExperimentConfig, ProblemConfig

logger = logging.getLogger(__name__)

TRACE_HEADER = (
    "iter",
    "props",
    "train_loss",
    "train_err",
    "test_err",
    "rho",
    "radius_or_sigma",
    "step_norm",
    "accepted",
    "subproblem_hvps",
)


def _fmt(value: float | None) -> str:
    return "" if value is None else format(float(value), ".17g")


def trace_row(record: IterationRecord) -> list[str]:
    accepted = "" if record.accepted is None else ("true" if record.accepted else "false")
    hvps = "" if record.subproblem_hvps is None else str(record.subproblem_hvps)
    return [
        str(record.iter),
        str(record.cumulative_propagations),
        _fmt(record.train_loss),
        _fmt(record.train_error),
        _fmt(record.test_error),
        _fmt(record.rho),
        _fmt(record.radius_or_sigma),
        _fmt(record.step_norm),
        accepted,
        hvps,
    ]


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    with open(tmp_path, "wb") as tmp:
        tmp.write(data)
        tmp.flush()
        os.fsync(tmp.fileno())
    os.replace(tmp_path, path)


def version_string() -> str:
    """Package version plus the git revision of the working tree when available."""
    try:
        proc = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
            check=False,
        )
    except (OSError, subprocess.SubprocessError):
        return __version__
    rev = proc.stdout.strip()
    return f"{__version__}+g{rev}" if proc.returncode == 0 and rev else __version__


# ============================================================================
# Problems and evaluation
# ============================================================================


class Evaluator:
    """Train/test error rates at x, charged to a separate evaluation ledger."""

    def __init__(self, train: Any, test: Any | None):
        self.train = train
        self.test = test
        self.ledger = PropagationLedger()

    @property
    def cost(self) -> int:
        """Forward passes per call: the training set, then the test set."""
        return self.train.n + (self.test.n if self.test is not None else 0)

    def __call__(self, x: ParamVector) -> tuple[float | None, float | None]:
        train_err = self.train.error_rate(x)
        self.ledger.charge(forward=self.train.n)
        test_err = None
        if self.test is not None:
            test_err = self.test.error_rate(x)
            self.ledger.charge(forward=self.test.n)
        return train_err, test_err


def _load_datasets(pc: ProblemConfig, seed: int) -> tuple[SparseDataset, SparseDataset | None]:
    train = load_libsvm(pc.train, pc.expected_d)
    test = load_libsvm(pc.test, expected_d=train.d) if pc.test is not None else None
    if pc.keep_labels:
        train = select_labels(train, pc.keep_labels)
        test = select_labels(test, pc.keep_labels) if test is not None else None
    if test is None and pc.test_fraction is not None:
        train, test = train_test_split(train, pc.test_fraction, seed=seed)
    if pc.scale:
        train, test = max_abs_scale(train, test)
    return train, test


def build_problem(pc: ProblemConfig, seed: int = 0) -> tuple[FiniteSumOracle, Any | None]:
    train, test = _load_datasets(pc, seed)
    if pc.kind == "nls":
        rule = pc.label_rule or LabelRule.ZERO_ONE.value

        def make(ds: SparseDataset) -> NLSProblem:
            ds = binarize_labels(ds, rule, pc.positive_label)
            return NLSProblem(ds.features, ds.labels, workers=pc.workers)

        return make(train), (make(test) if test is not None else None)

    spec = MLPSpec(tuple(pc.layer_sizes), tuple(pc.activations), LossKind(pc.loss))

    def make_mlp(ds: SparseDataset) -> MLPProblem:
        if pc.label_rule is not None:
            ds = binarize_labels(ds, pc.label_rule, pc.positive_label)
        inputs = ds.features.toarray()
        if inputs.shape[1] < spec.layer_sizes[0]:
            inputs = np.pad(inputs, ((0, 0), (0, spec.layer_sizes[0] - inputs.shape[1])))
        targets = inputs if spec.loss is LossKind.SQUARED else ds.labels
        return MLPProblem(spec, DatasetInMemory(inputs, targets), workers=pc.workers)

    return make_mlp(train), (make_mlp(test) if test is not None else None)


# ============================================================================
# Runs
# ============================================================================


@dataclass(slots=True)
class RunResult:
    run_id: str
    trace_path: Path
    meta_path: Path
    trace: Trace
    evaluation_propagations: int = 0


def _driver(cfg: ExperimentConfig) -> Callable[..., Trace]:
    return {
        "tr": run_tr,
        "arc": run_arc,
        "gn": run_gauss_newton,
        "sgd": run_sgd_momentum,
    }.get(cfg.algorithm, run_tr)


def execute(cfg: ExperimentConfig) -> RunResult:
    """Run one experiment and write its trace and metadata."""
    started = datetime.now(timezone.utc).isoformat()
    out_dir = Path(cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    train, test = build_problem(cfg.problem, cfg.seed)
    opt_cfg = cfg.optimizer_config()
    rng = np.random.default_rng(cfg.seed)
    x0 = initial_point(cfg.init, train.dim, rng)
    evaluator = Evaluator(train, test)
    ledger = PropagationLedger()

    trace_path = out_dir / f"{cfg.run_id}.csv"
    logger.info("run %s: %s on %d samples, d=%d", cfg.run_id, cfg.algorithm, train.n, train.dim)
    try:
        with open(trace_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_HEADER)

            def sink(record: IterationRecord) -> None:
                writer.writerow(trace_row(record))

            kwargs = dict(ledger=ledger, evaluator=evaluator, on_record=sink)
            if cfg.algorithm == "lbfgs":
                trace = run_lbfgs(train, opt_cfg, x0, **kwargs)
            else:
                trace = _driver(cfg)(train, opt_cfg, x0, rng, **kwargs)
    finally:
        train.close()
        if test is not None and hasattr(test, "close"):
            test.close()

    meta = {
        "run_id": cfg.run_id,
        "seed": cfg.seed,
        "version": version_string(),
        "started_at": started,
        "config": cfg.to_dict(),
        "stop_reason": trace.stop_reason.value if trace.stop_reason else None,
        "diverged": trace.stop_reason is not None and trace.stop_reason.value == "diverged",
        "iterations": len(trace),
        "propagations": ledger.total,
        "evaluation_propagations": evaluator.ledger.total,
        "n_train": train.n,
        "n_test": test.n if test is not None else None,
        "dim": train.dim,
    }
    meta_path = out_dir / f"{cfg.run_id}.meta.json"
    _atomic_write(meta_path, orjson.dumps(meta, option=orjson.OPT_INDENT_2 | orjson.OPT_SORT_KEYS))
    logger.info("run %s finished: %s", cfg.run_id, meta["stop_reason"])
    return RunResult(cfg.run_id, trace_path, meta_path, trace, evaluator.ledger.total)


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Execute one run; returns the trace file path."""
    return execute(cfg).trace_path


# ============================================================================
# Sweeps
# ============================================================================


@dataclass(slots=True)
class SweepResult:
    summary_path: Path
    results: dict[str, RunResult] = field(default_factory=dict)
    failures: dict[str, str] = field(default_factory=dict)


def sweep(
    configs: Sequence[ExperimentConfig],
    *,
    summary_dir: str | Path | None = None,
    workers: int = 1,
) -> SweepResult:
    """Run every config and write a long-format `summary.csv` keyed by (run_id, iter).

    A failing run is logged and recorded in `failures`; the others continue.
    """

    ids = [c.run_id for c in configs]
    duplicates = sorted({i for i in ids if ids.count(i) > 1})
    if duplicates:
        raise ConfigError(f"duplicate run ids: {', '.join(duplicates)}")

    summary_dir = Path(summary_dir) if summary_dir is not None else (
        Path(configs[0].out) if configs else Path(".")
    )
    result = SweepResult(summary_path=summary_dir / "summary.csv")

    with ThreadPoolExecutor(max_workers=max(1, workers), thread_name_prefix="curvopt-sweep") as pool:
        futures = [(cfg, pool.submit(execute, cfg)) for cfg in configs]
        for cfg, future in futures:
            try:
                result.results[cfg.run_id] = future.result()
            except Exception as exc:
                logger.exception("run %r failed", cfg.run_id)
                result.failures[cfg.run_id] = f"{type(exc).__name__}: {exc}"

    summary_dir.mkdir(parents=True, exist_ok=True)
    with open(result.summary_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("run_id",) + TRACE_HEADER)
        for cfg in configs:
            run = result.results.get(cfg.run_id)
            if run is None:
                continue
            for record in run.trace:
                writer.writerow([cfg.run_id, *trace_row(record)])

    status = {
        "runs": [
            {
                "run_id": cfg.run_id,
                "ok": cfg.run_id in result.results,
                "stop_reason": (
                    result.results[cfg.run_id].trace.stop_reason.value
                    if cfg.run_id in result.results
                    else None
                ),
                "error": result.failures.get(cfg.run_id),
            }
            for cfg in configs
        ]
    }
    _atomic_write(summary_dir / "sweep_status.json", orjson.dumps(status, option=orjson.OPT_INDENT_2))
    logger.info("sweep finished: %d ok, %d failed", len(result.results), len(result.failures))
    return result
