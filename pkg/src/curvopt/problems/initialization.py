"""Starting points: zeros, ones, standard normal, unit-norm normal, scaled normal."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._common import SeedLike, normalize_generator
from ..errors import ConfigError
from ..oracle import ParamVector

_ALIASES = {
    "zeros": "zeros",
    "ones": "ones",
    "normal": "normal",
    "normalized": "normalized",
    "normalized_normal": "normalized",
    "scaled": "scaled",
    "scaled_normal": "scaled",
}


@dataclass(frozen=True, slots=True)
class InitScheme:
    kind: str
    scale: float = 1.0

    @classmethod
    def parse(cls, text: str) -> "InitScheme":
        """Accepts `zeros`, `ones`, `normal`, `normalized`, `scaled:C`,
        and the long forms `normalized_normal`, `scaled_normal(C)`."""
        raw = text.strip().lower()
        scale = 1.0
        name = raw
        if raw.endswith(")") and "(" in raw:
            name, _, arg = raw[:-1].partition("(")
        elif ":" in raw:
            name, _, arg = raw.partition(":")
        else:
            arg = ""
        kind = _ALIASES.get(name)
        if kind is None:
            raise ConfigError(f"unknown init scheme {text!r}")
        if kind == "scaled":
            try:
                scale = float(arg) if arg else 0.25
            except ValueError:
                raise ConfigError(f"invalid scale in init scheme {text!r}") from None
        elif arg:
            raise ConfigError(f"init scheme {name!r} takes no argument")
        return cls(kind, scale)

    def __str__(self) -> str:
        return f"scaled:{self.scale:g}" if self.kind == "scaled" else self.kind


def initial_point(scheme: InitScheme | str, dim: int, seed: SeedLike = None) -> ParamVector:
    if isinstance(scheme, str):
        scheme = InitScheme.parse(scheme)
    if scheme.kind == "zeros":
        return np.zeros(dim)
    if scheme.kind == "ones":
        return np.ones(dim)
    rng = normalize_generator(seed)
    x = rng.standard_normal(dim)
    if scheme.kind == "normalized":
        return x / np.linalg.norm(x)
    if scheme.kind == "scaled":
        return scheme.scale * x
    return x
