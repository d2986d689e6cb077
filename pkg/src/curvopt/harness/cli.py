"""Command-line entry point: `curvopt run` and `curvopt sweep`.

Exit codes: 0 on success, 2 on configuration errors (each printed on its
own line to stderr), 1 on any other failure or when a sweep member failed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

from ..errors import ConfigError, CurvoptError
from .config import expand_runs, experiment_from_mapping, load_config
from .runner import run_experiment, sweep

logger = logging.getLogger(__name__)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, type=Path, help="TOML experiment file")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--budget", type=int, help="propagation budget")
    parser.add_argument("--init", help="initialization scheme, e.g. zeros or scaled_normal(0.1)")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="curvopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one experiment")
    _add_common(run)
    run.add_argument("--algorithm", choices=["tr", "arc", "gn", "sgd", "lbfgs"])
    run.add_argument("--hessian", choices=["full", "uniform", "nonuniform"])
    run.add_argument("--sample-ratio", type=float)
    step = run.add_mutually_exclusive_group()
    step.add_argument("--delta0", type=float)
    step.add_argument("--sigma0", type=float)
    step.add_argument("--alpha", type=float)

    sw = sub.add_parser("sweep", help="execute every [[runs]] member of a config")
    _add_common(sw)
    sw.add_argument("--workers", type=int, help="parallel runs (default: [sweep] workers, else 1)")
    return parser


def overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    """Flag values as a config fragment; unset flags are left out."""
    out: dict[str, Any] = {}
    for key in ("seed", "budget", "init"):
        if getattr(args, key, None) is not None:
            out[key] = getattr(args, key)
    if args.out is not None:
        out["out"] = str(args.out)

    algorithm: dict[str, Any] = {}
    if getattr(args, "algorithm", None) is not None:
        algorithm["kind"] = args.algorithm
    if getattr(args, "hessian", None) is not None:
        algorithm["hessian_source"] = args.hessian
    if getattr(args, "sample_ratio", None) is not None:
        algorithm["sample_ratio"] = args.sample_ratio
    for key in ("delta0", "sigma0", "alpha"):
        if getattr(args, key, None) is not None:
            algorithm[key] = getattr(args, key)
    if algorithm:
        out["algorithm"] = algorithm
    return out


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    overrides = overrides_from_args(args)

    try:
        doc = load_config(args.config)
        base_dir = args.config.resolve().parent
        if args.command == "run":
            if "runs" in doc:
                raise ConfigError("`run` takes a single-run config; use `sweep` for [[runs]]")
            cfg = experiment_from_mapping(doc, base_dir=base_dir, overrides=overrides)
            path = run_experiment(cfg)
            print(path)
            return 0

        configs = expand_runs(doc, base_dir=base_dir, overrides=overrides)
        summary_dir = Path(overrides.get("out") or doc.get("out", "runs"))
        workers = args.workers or int((doc.get("sweep") or {}).get("workers", 1))
        result = sweep(configs, summary_dir=summary_dir, workers=workers)
        print(result.summary_path)
        return 1 if result.failures else 0
    except ConfigError as exc:
        for message in exc.errors:
            print(f"config error: {message}", file=sys.stderr)
        return 2
    except CurvoptError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return 1
    except OSError as exc:
        logger.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
