"""Exception hierarchy for curvopt.

Every exception derives from `CurvoptError` and from the builtin it refines,
so callers may catch either.
"""

from __future__ import annotations

from collections.abc import Iterable


class CurvoptError(Exception):
    """Base class for all curvopt errors."""


class DimensionMismatchError(CurvoptError, ValueError):
    def __init__(self, what: str, expected: int | tuple, got: int | tuple):
        super().__init__(f"{what}: expected dimension {expected}, got {got}")
        self.expected = expected
        self.got = got


class InvalidBatchError(CurvoptError, ValueError):
    pass


class SamplingError(CurvoptError, ValueError):
    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class SolverFailureError(CurvoptError, RuntimeError):
    pass


class ConfigError(CurvoptError, ValueError):
    """Raised with every violated constraint at once."""

    def __init__(self, errors: Iterable[str] | str):
        if isinstance(errors, str):
            errors = [errors]
        self.errors: list[str] = list(errors)
        super().__init__("; ".join(self.errors) or "invalid configuration")


class LibSVMFormatError(CurvoptError, ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class LabelMappingError(CurvoptError, ValueError):
    pass


class NonFiniteError(CurvoptError, ValueError):
    pass


class UnknownAlgorithmError(CurvoptError, ValueError):
    pass
