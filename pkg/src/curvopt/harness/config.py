"""
Experiment configuration documents (TOML).

A document describes one run; `[[runs]]` entries turn it into a sweep where
each member is deep-merged over the base document. Data paths are resolved
relative to the config file; `out` is relative to the working directory.
Validation reports every problem at once through `ConfigError`.
"""

from __future__ import annotations

import copy
import dataclasses
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from ..data_io import LabelRule
from ..errors import ConfigError
from ..optimizers.config import ARCConfig, GNConfig, LBFGSConfig, SGDConfig, TRConfig
from ..problems.initialization import InitScheme
from ..problems.mlp import Activation, LossKind

OPTIMIZER_CONFIGS: dict[str, type] = {
    "tr": TRConfig,
    "arc": ARCConfig,
    "gn": GNConfig,
    "sgd": SGDConfig,
    "lbfgs": LBFGSConfig,
}

# Keys owned by the experiment rather than the algorithm table.
_RUN_LEVEL_FIELDS = {"max_iters", "max_props", "eval_every"}
_KEY_ALIASES = {"hessian": "hessian_source"}

_PROBLEM_KEYS = {
    "kind",
    "train",
    "test",
    "test_fraction",
    "label_rule",
    "positive_label",
    "keep_labels",
    "expected_d",
    "scale",
    "workers",
    "mlp",
}
_TOP_KEYS = {
    "run_id",
    "seed",
    "budget",
    "init",
    "out",
    "eval_every",
    "max_iters",
    "problem",
    "algorithm",
    "runs",
    "sweep",
}


@dataclass(slots=True)
class ProblemConfig:
    kind: str = "nls"
    train: Path | None = None
    test: Path | None = None
    test_fraction: float | None = None
    label_rule: str | None = None
    positive_label: float | None = None
    keep_labels: list[float] | None = None
    expected_d: int | None = None
    scale: bool = False
    workers: int | None = None
    layer_sizes: list[int] | None = None
    activations: list[str] | None = None
    loss: str = LossKind.SOFTMAX_CROSS_ENTROPY.value


@dataclass(slots=True)
class ExperimentConfig:
    run_id: str
    algorithm: str
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    budget: int = 10_000_000
    init: str = "zeros"
    out: Path = Path("runs")
    eval_every: int | None = None
    max_iters: int = 1_000_000

    def optimizer_config(self) -> Any:
        cls = OPTIMIZER_CONFIGS[self.algorithm]
        kwargs = dict(self.params)
        kwargs["max_iters"] = self.max_iters
        kwargs["max_props"] = self.budget
        if cls is SGDConfig:
            kwargs["eval_every"] = self.eval_every
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        """Plain-data echo for run metadata."""

        def plain(value: Any) -> Any:
            if isinstance(value, Path):
                return str(value)
            if isinstance(value, dict):
                return {k: plain(v) for k, v in value.items()}
            if isinstance(value, list):
                return [plain(v) for v in value]
            return value

        out = {f.name: plain(getattr(self, f.name)) for f in dataclasses.fields(self)}
        out["problem"] = {
            f.name: plain(getattr(self.problem, f.name)) for f in dataclasses.fields(self.problem)
        }
        return out


def load_config(path: str | Path) -> dict[str, Any]:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def deep_merge(base: Mapping[str, Any], override: Mapping[str, Any] | None) -> dict[str, Any]:
    merged = copy.deepcopy(dict(base))
    for key, value in (override or {}).items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _resolve(base_dir: Path, value: Any) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base_dir / p


def _parse_problem(raw: Mapping[str, Any], base_dir: Path, errors: list[str]) -> ProblemConfig:
    unknown = sorted(set(raw) - _PROBLEM_KEYS)
    if unknown:
        errors.append(f"unknown [problem] keys: {', '.join(unknown)}")
    pc = ProblemConfig()
    pc.kind = str(raw.get("kind", "nls"))
    if pc.kind not in ("nls", "mlp"):
        errors.append(f"problem.kind must be 'nls' or 'mlp', got {pc.kind!r}")

    if raw.get("train") is None:
        errors.append("problem.train is required")
    else:
        pc.train = _resolve(base_dir, raw["train"])
        if not pc.train.exists():
            errors.append(f"problem.train does not exist: {pc.train}")
    if raw.get("test") is not None:
        pc.test = _resolve(base_dir, raw["test"])
        if not pc.test.exists():
            errors.append(f"problem.test does not exist: {pc.test}")
    pc.test_fraction = raw.get("test_fraction")
    if pc.test_fraction is not None:
        if pc.test is not None:
            errors.append("give either problem.test or problem.test_fraction, not both")
        elif not 0 < float(pc.test_fraction) < 1:
            errors.append(f"problem.test_fraction must lie in (0, 1), got {pc.test_fraction!r}")

    pc.label_rule = raw.get("label_rule")
    if pc.label_rule is not None:
        try:
            LabelRule(pc.label_rule)
        except ValueError:
            errors.append(f"unknown problem.label_rule {pc.label_rule!r}")
        if pc.label_rule == LabelRule.ONE_VS_REST.value and raw.get("positive_label") is None:
            errors.append("label_rule 'one_vs_rest' needs problem.positive_label")
    pc.positive_label = raw.get("positive_label")
    pc.keep_labels = raw.get("keep_labels")
    pc.expected_d = raw.get("expected_d")
    pc.scale = bool(raw.get("scale", False))
    pc.workers = raw.get("workers")

    if pc.kind == "mlp":
        mlp = raw.get("mlp") or {}
        pc.layer_sizes = mlp.get("layer_sizes")
        pc.activations = mlp.get("activations")
        pc.loss = mlp.get("loss", pc.loss)
        if not pc.layer_sizes or not pc.activations:
            errors.append("problem.mlp needs layer_sizes and activations")
        elif len(pc.activations) != len(pc.layer_sizes) - 1:
            errors.append("problem.mlp.activations needs one entry per non-input layer")
        for act in pc.activations or []:
            try:
                Activation(act)
            except ValueError:
                errors.append(f"unknown activation {act!r}")
        try:
            LossKind(pc.loss)
        except ValueError:
            errors.append(f"unknown problem.mlp.loss {pc.loss!r}")
    return pc


def experiment_from_mapping(
    doc: Mapping[str, Any],
    *,
    base_dir: str | Path = ".",
    overrides: Mapping[str, Any] | None = None,
) -> ExperimentConfig:
    """Build and validate one run; `overrides` (e.g. CLI flags) win over `doc`."""
    base_dir = Path(base_dir)
    doc = deep_merge(doc, overrides)
    errors: list[str] = []

    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        errors.append(f"unknown top-level keys: {', '.join(unknown)}")

    run_id = str(doc.get("run_id", "")).strip()
    if not run_id:
        errors.append("run_id is required")
    elif any(ch in run_id for ch in "/\\") or run_id.startswith("."):
        errors.append(f"run_id must be a plain file stem, got {run_id!r}")

    budget = doc.get("budget", 10_000_000)
    if not isinstance(budget, int) or budget <= 0:
        errors.append(f"budget must be a positive integer, got {budget!r}")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        errors.append(f"seed must be a non-negative integer, got {seed!r}")
    init = str(doc.get("init", "zeros"))
    try:
        InitScheme.parse(init)
    except ConfigError as exc:
        errors.extend(exc.errors)
    eval_every = doc.get("eval_every")
    if eval_every == 0:
        eval_every = None
    if eval_every is not None and (not isinstance(eval_every, int) or eval_every < 1):
        errors.append(f"eval_every must be a positive integer, got {eval_every!r}")
    max_iters = doc.get("max_iters", 1_000_000)

    problem = _parse_problem(doc.get("problem") or {}, base_dir, errors)

    algo_raw = dict(doc.get("algorithm") or {})
    kind = str(algo_raw.pop("kind", "")).lower()
    params: dict[str, Any] = {}
    if kind not in OPTIMIZER_CONFIGS:
        errors.append(f"algorithm.kind must be one of {', '.join(OPTIMIZER_CONFIGS)}, got {kind!r}")
    else:
        allowed = {f.name for f in dataclasses.fields(OPTIMIZER_CONFIGS[kind])} - _RUN_LEVEL_FIELDS
        for key, value in algo_raw.items():
            name = _KEY_ALIASES.get(key, key)
            if name not in allowed:
                errors.append(f"algorithm key {key!r} does not apply to {kind!r}")
            else:
                params[name] = value

    cfg = ExperimentConfig(
        run_id=run_id,
        algorithm=kind,
        problem=problem,
        params=params,
        seed=seed if isinstance(seed, int) else 0,
        budget=budget if isinstance(budget, int) else 0,
        init=init,
        out=Path(doc.get("out", "runs")),
        eval_every=eval_every,
        max_iters=max_iters,
    )
    if kind in OPTIMIZER_CONFIGS and not errors:
        try:
            cfg.optimizer_config()
        except ConfigError as exc:
            errors.extend(f"algorithm: {msg}" for msg in exc.errors)
        except TypeError as exc:
            errors.append(f"algorithm: {exc}")
    if errors:
        raise ConfigError(errors)
    return cfg


def expand_runs(
    doc: Mapping[str, Any],
    *,
    base_dir: str | Path = ".",
    overrides: Mapping[str, Any] | None = None,
) -> list[ExperimentConfig]:
    """One config per `[[runs]]` member (or the document itself if there are none)."""
    base = {k: v for k, v in doc.items() if k not in ("runs", "sweep")}
    members = doc.get("runs")
    if members is None:
        return [experiment_from_mapping(base, base_dir=base_dir, overrides=overrides)]

    errors: list[str] = []
    configs: list[ExperimentConfig] = []
    for i, member in enumerate(members):
        merged = deep_merge(base, member)
        merged.setdefault("run_id", f"run-{i:03d}")
        if "run_id" not in member and "run_id" in base:
            merged["run_id"] = f"{base['run_id']}-{i:03d}"
        try:
            configs.append(experiment_from_mapping(merged, base_dir=base_dir, overrides=overrides))
        except ConfigError as exc:
            errors.extend(f"runs[{i}]: {msg}" for msg in exc.errors)
    if errors:
        raise ConfigError(errors)
    return configs
