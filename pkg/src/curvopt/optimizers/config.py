"""
Optimizer settings.

Every config is a frozen dataclass that checks all of its constraints in
`__post_init__` and raises a single `ConfigError` listing each violation.
`max_props` is the propagation budget (None means unbounded); runs stop at
whichever of `max_iters` / `max_props` is reached first.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from typing import Any

from ..errors import ConfigError


class HessianSource(str, Enum):
    FULL = "full"
    UNIFORM = "uniform"
    NONUNIFORM = "nonuniform"


def _positive(errors: list[str], name: str, value: float | None, allow_none: bool = False) -> None:
    if value is None:
        if not allow_none:
            errors.append(f"{name} is required")
        return
    if not value > 0:
        errors.append(f"{name} must be > 0, got {value!r}")


def _common_budget(cfg: Any, errors: list[str]) -> None:
    if cfg.max_iters < 1:
        errors.append(f"max_iters must be >= 1, got {cfg.max_iters!r}")
    _positive(errors, "max_props", cfg.max_props, allow_none=True)


def _second_order(cfg: Any, errors: list[str]) -> None:
    if not isinstance(cfg.hessian_source, HessianSource):
        errors.append(
            f"hessian_source must be one of full, uniform, nonuniform; got {cfg.hessian_source!r}"
        )
    if not 0 < cfg.eta1 <= cfg.eta2 <= 1:
        errors.append(f"need 0 < eta1 <= eta2 <= 1, got eta1={cfg.eta1!r}, eta2={cfg.eta2!r}")
    if not cfg.gamma2 >= cfg.gamma1 > 1:
        errors.append(f"need gamma2 >= gamma1 > 1, got gamma1={cfg.gamma1!r}, gamma2={cfg.gamma2!r}")
    _positive(errors, "eps_g", cfg.eps_g)
    _positive(errors, "eps_H", cfg.eps_H)
    if not 0 < cfg.sample_ratio <= 1:
        errors.append(f"sample_ratio must lie in (0, 1], got {cfg.sample_ratio!r}")
    if cfg.subproblem_max_iter is not None and cfg.subproblem_max_iter < 1:
        errors.append("subproblem_max_iter must be >= 1")
    if cfg.eig_probe_iters is not None and cfg.eig_probe_iters < 1:
        errors.append("eig_probe_iters must be >= 1")
    _common_budget(cfg, errors)


def _coerce_source(cfg: Any) -> None:
    try:
        object.__setattr__(cfg, "hessian_source", HessianSource(cfg.hessian_source))
    except ValueError:
        pass  # reported by validate()


class _Validated:
    __slots__ = ()

    def validate(self) -> list[str]:  # pragma: no cover - overridden
        return []

    def __post_init__(self) -> None:
        errors = self.validate()
        if errors:
            raise ConfigError(errors)

    def replace(self, **changes: Any):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, slots=True)
class TRConfig(_Validated):
    """Sub-sampled trust-region settings.

    Examples:
        TRConfig(delta0=10.0, hessian_source="nonuniform", sample_ratio=0.01)
    """

    delta0: float = 1.0
    eta1: float = 1e-4
    eta2: float = 0.8
    gamma1: float = 1.2
    gamma2: float = 2.0
    eps_g: float = 1e-5
    eps_H: float = 1e-4
    max_iters: int = 10_000
    max_props: int | None = None
    hessian_source: HessianSource = HessianSource.FULL
    sample_ratio: float = 1.0
    subproblem_method: str = "cg"
    subproblem_max_iter: int | None = None
    eig_probe_iters: int | None = None

    def __post_init__(self) -> None:
        _coerce_source(self)
        _Validated.__post_init__(self)

    def validate(self) -> list[str]:
        errors: list[str] = []
        _positive(errors, "delta0", self.delta0)
        if self.subproblem_method not in ("cg", "lanczos"):
            errors.append(f"subproblem_method must be 'cg' or 'lanczos', got {self.subproblem_method!r}")
        _second_order(self, errors)
        return errors


@dataclass(frozen=True, slots=True)
class GNConfig(TRConfig):
    """Trust-region settings for Gauss-Newton; `eps_H` is unused (the GGN is PSD)."""


@dataclass(frozen=True, slots=True)
class ARCConfig(_Validated):
    """Sub-sampled cubic-regularization settings; Lanczos capped at 250 steps."""

    sigma0: float = 1e-4
    eta1: float = 1e-4
    eta2: float = 0.8
    gamma1: float = 1.2
    gamma2: float = 2.0
    eps_g: float = 1e-5
    eps_H: float = 1e-4
    max_iters: int = 10_000
    max_props: int | None = None
    hessian_source: HessianSource = HessianSource.FULL
    sample_ratio: float = 1.0
    subproblem_max_iter: int | None = 250
    eig_probe_iters: int | None = None

    def __post_init__(self) -> None:
        _coerce_source(self)
        _Validated.__post_init__(self)

    def validate(self) -> list[str]:
        errors: list[str] = []
        _positive(errors, "sigma0", self.sigma0)
        _second_order(self, errors)
        return errors


@dataclass(frozen=True, slots=True)
class SGDConfig(_Validated):
    """Heavy-ball SGD: v <- beta v + g, x <- x - alpha v.

    `eval_every` None picks the cadence that keeps evaluations (the full-data
    loss plus any error evaluator) under 5% of the propagation budget.
    """

    alpha: float = 0.1
    beta: float = 0.9
    batch_ratio: float = 0.01
    max_iters: int = 10_000
    max_props: int | None = None
    eval_every: int | None = None

    def validate(self) -> list[str]:
        errors: list[str] = []
        _positive(errors, "alpha", self.alpha)
        if not 0 <= self.beta < 1:
            errors.append(f"beta must lie in [0, 1), got {self.beta!r}")
        if not 0 < self.batch_ratio <= 1:
            errors.append(f"batch_ratio must lie in (0, 1], got {self.batch_ratio!r}")
        if self.eval_every is not None and self.eval_every < 1:
            errors.append("eval_every must be >= 1")
        _common_budget(self, errors)
        return errors


@dataclass(frozen=True, slots=True)
class LBFGSConfig(_Validated):
    history: int = 100
    c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 50
    eps_g: float = 1e-5
    max_iters: int = 10_000
    max_props: int | None = None

    def validate(self) -> list[str]:
        errors: list[str] = []
        if self.history < 1:
            errors.append(f"history must be >= 1, got {self.history!r}")
        if not 0 < self.c1 < 1:
            errors.append(f"c1 must lie in (0, 1), got {self.c1!r}")
        if not 0 < self.backtrack < 1:
            errors.append(f"backtrack must lie in (0, 1), got {self.backtrack!r}")
        if self.max_backtracks < 1:
            errors.append("max_backtracks must be >= 1")
        _positive(errors, "eps_g", self.eps_g)
        _common_budget(self, errors)
        return errors
