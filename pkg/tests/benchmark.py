"""
Wall-clock benchmarks for curvopt's hot kernels.

Propagation counts are the comparison unit for optimizers; these timings only
track regressions in the oracle kernels and sub-problem solvers.
"""

from __future__ import annotations

import os
import sys
import time
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from statistics import mean, median, stdev
from typing import Callable, Dict, List

import numpy as np
import orjson
import scipy.sparse as sp

from curvopt import BatchSpec, HessianOperator, NLSProblem, sample_batch, uniform_distribution
from curvopt.problems import DatasetInMemory, MLPProblem, MLPSpec
from curvopt.subproblem import solve_cubic_subproblem, solve_tr_subproblem


# ---------------------------------------------------------------------------
# Config + helpers
# ---------------------------------------------------------------------------


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    return int(raw)


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    return float(raw)


@dataclass(frozen=True)
class Config:
    seed: int = 12345
    n: int = 20_000
    d: int = 123
    density: float = 0.11
    sample_ratio: float = 0.01
    subproblem_dim: int = 200
    warmup: int = 3
    runs: int = 30


CFG = Config(
    seed=_env_int("BENCH_SEED", 12345),
    n=_env_int("BENCH_N", 20_000),
    d=_env_int("BENCH_D", 123),
    density=_env_float("BENCH_DENSITY", 0.11),
    sample_ratio=_env_float("BENCH_SAMPLE_RATIO", 0.01),
    subproblem_dim=_env_int("BENCH_SUBPROBLEM_DIM", 200),
    warmup=_env_int("BENCH_WARMUP", 3),
    runs=_env_int("BENCH_RUNS", 30),
)


@dataclass(frozen=True)
class Stats:
    label: str
    notes: str
    runs: int
    median_ms: float
    mean_ms: float
    stdev_ms: float


def _timed(fn: Callable[[], object], warmup: int, runs: int) -> List[float]:
    for _ in range(warmup):
        fn()
    out: List[float] = []
    for _ in range(runs):
        t0 = time.perf_counter()
        fn()
        out.append((time.perf_counter() - t0) * 1000.0)
    return out


def stats_from_samples(label: str, notes: str, samples: List[float]) -> Stats:
    return Stats(
        label,
        notes,
        len(samples),
        median(samples),
        mean(samples),
        stdev(samples) if len(samples) > 1 else 0.0,
    )


def print_table(title: str, rows: List[Stats]) -> None:
    print("\n" + title)
    print("-" * len(title))
    print(f"{'Kernel':<26} {'Median (ms)':>12} {'Mean (ms)':>12} {'Stdev (ms)':>12}  Notes")
    for r in rows:
        print(f"{r.label:<26} {r.median_ms:>12.4f} {r.mean_ms:>12.4f} {r.stdev_ms:>12.4f}  {r.notes}")


def append_json_log(status: str, error: str | None, sections: Dict[str, List[Stats]]) -> None:
    payload = {
        "ts": datetime.now().isoformat(timespec="seconds"),
        "status": status,
        "error": error,
        "command": "python " + " ".join(sys.argv),
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "config": CFG.__dict__,
        "sections": {
            name: [
                {
                    "label": s.label,
                    "notes": s.notes,
                    "runs": s.runs,
                    "median_ms": round(s.median_ms, 6),
                    "mean_ms": round(s.mean_ms, 6),
                    "stdev_ms": round(s.stdev_ms, 6),
                }
                for s in rows
            ]
            for name, rows in sections.items()
        },
    }
    log_path = Path(__file__).resolve().parent.parent / "benchmarks.log"
    try:
        with log_path.open("ab") as fh:
            fh.write(orjson.dumps(payload) + b"\n")
    except OSError:
        pass


def make_nls(rng: np.random.Generator) -> NLSProblem:
    A = sp.random(CFG.n, CFG.d, density=CFG.density, format="csr", random_state=rng)
    y = (rng.random(CFG.n) < 0.25).astype(float)
    return NLSProblem(A, y)


def make_autoencoder(rng: np.random.Generator, cache_capacity: int) -> MLPProblem:
    spec = MLPSpec((32, 16, 32), ("tanh", "identity"), "squared")
    inputs = rng.standard_normal((2_000, 32))
    return MLPProblem(spec, DatasetInMemory(inputs, inputs), cache_capacity=cache_capacity)


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def scenario_nls_kernels(rng: np.random.Generator) -> List[Stats]:
    problem = make_nls(rng)
    x = 0.1 * rng.standard_normal(problem.dim)
    v = rng.standard_normal(problem.dim)
    size = max(1, round(CFG.sample_ratio * problem.n))
    batch = sample_batch(uniform_distribution(problem.n), size, rng)
    full = BatchSpec.full(problem.n)

    rows = [
        stats_from_samples("nls loss", f"n={problem.n}", _timed(lambda: problem.loss(x, full), CFG.warmup, CFG.runs)),
        stats_from_samples("nls grad", f"n={problem.n}", _timed(lambda: problem.grad(x, full), CFG.warmup, CFG.runs)),
        stats_from_samples("nls hvp (full)", f"n={problem.n}", _timed(lambda: problem.hvp(x, v, full), CFG.warmup, CFG.runs)),
        stats_from_samples("nls hvp (sampled)", f"|S|={size}", _timed(lambda: problem.hvp(x, v, batch), CFG.warmup, CFG.runs)),
        stats_from_samples(
            "nls curvature scalars", "non-uniform refresh",
            _timed(lambda: problem.scalar_second_derivatives(x), CFG.warmup, CFG.runs),
        ),
    ]
    problem.close()
    return rows


def scenario_mlp_kernels(rng: np.random.Generator) -> List[Stats]:
    rows = []
    for capacity, note in ((32, "forward cache on"), (0, "forward cache off")):
        problem = make_autoencoder(rng, capacity)
        x = 0.1 * rng.standard_normal(problem.dim)
        v = rng.standard_normal(problem.dim)

        def grad_then_hvps() -> None:
            problem.grad(x)
            for _ in range(5):
                problem.hvp(x, v)

        rows.append(stats_from_samples("mlp grad + 5 hvp", note, _timed(grad_then_hvps, CFG.warmup, CFG.runs)))
        rows.append(stats_from_samples("mlp ggn_vp", note, _timed(lambda: problem.ggn_vp(x, v), CFG.warmup, CFG.runs)))
        problem.close()
    return rows


def scenario_subproblems(rng: np.random.Generator) -> List[Stats]:
    d = CFG.subproblem_dim
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    eigs = np.linspace(-1.0, 10.0, d)
    H = HessianOperator.from_dense((Q * eigs) @ Q.T)
    g = rng.standard_normal(d)

    def cg() -> None:
        solve_tr_subproblem(H, g, 1.0)

    def lanczos_tr() -> None:
        solve_tr_subproblem(H, g, 1.0, method="lanczos")

    def cubic() -> None:
        solve_cubic_subproblem(H, g, 1.0)

    return [
        stats_from_samples("tr cg-steihaug", f"d={d}", _timed(cg, CFG.warmup, CFG.runs)),
        stats_from_samples("tr lanczos", f"d={d}", _timed(lanczos_tr, CFG.warmup, CFG.runs)),
        stats_from_samples("cubic lanczos", f"d={d}", _timed(cubic, CFG.warmup, CFG.runs)),
    ]


def run_benchmarks() -> Dict[str, List[Stats]]:
    rng = np.random.default_rng(CFG.seed)
    return {
        "nls_kernels": scenario_nls_kernels(rng),
        "mlp_kernels": scenario_mlp_kernels(rng),
        "subproblems": scenario_subproblems(rng),
    }


def main() -> None:
    status = "ok"
    error = None
    sections: Dict[str, List[Stats]] = {}

    print("curvopt benchmark")
    print(f"n={CFG.n} d={CFG.d} seed={CFG.seed} warmup={CFG.warmup} runs={CFG.runs}")

    try:
        sections = run_benchmarks()
        print_table("NLS oracle kernels", sections["nls_kernels"])
        print_table("MLP oracle kernels", sections["mlp_kernels"])
        print_table("Sub-problem solvers", sections["subproblems"])
    except KeyboardInterrupt:
        status = "interrupted"
        error = "KeyboardInterrupt"
        raise
    except Exception as e:
        status = "error"
        error = f"{type(e).__name__}: {e}"
        raise
    finally:
        append_json_log(status=status, error=error, sections=sections)


if __name__ == "__main__":
    main()
