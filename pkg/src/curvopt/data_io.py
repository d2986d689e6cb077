"""
LIBSVM-format datasets.

Grammar, one sample per line:

    <label> <index>:<value> <index>:<value> ...   [# comment]

Indices are 1-based and strictly increasing in the file; they are stored
0-based. Blank and comment-only lines are skipped. Files ending in `.gz` (or
starting with the gzip magic bytes) are decompressed transparently.
"""

from __future__ import annotations

import gzip
import io
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp

from ._common import SeedLike, normalize_generator
from .errors import LabelMappingError, LibSVMFormatError

logger = logging.getLogger(__name__)

_GZIP_MAGIC = b"\x1f\x8b"


@dataclass(frozen=True, slots=True, eq=False)
class SparseDataset:
    features: sp.csr_matrix
    labels: np.ndarray

    def __post_init__(self) -> None:
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError(
                f"{self.features.shape[0]} rows but {self.labels.shape[0]} labels"
            )

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    def subset(self, indices: Iterable[int]) -> "SparseDataset":
        idx = np.asarray(list(indices) if not isinstance(indices, np.ndarray) else indices, dtype=np.intp)
        return SparseDataset(self.features[idx], self.labels[idx].copy())

    def with_labels(self, labels: np.ndarray) -> "SparseDataset":
        return SparseDataset(self.features, np.asarray(labels, dtype=np.float64))


def parse_libsvm(stream: Iterable[str], expected_d: int | None = None) -> SparseDataset:
    labels: list[float] = []
    indptr = [0]
    indices: list[int] = []
    values: list[float] = []
    max_index = 0

    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            labels.append(float(tokens[0]))
        except ValueError:
            raise LibSVMFormatError(f"invalid label {tokens[0]!r}", lineno) from None
        prev = 0
        for tok in tokens[1:]:
            idx_text, sep, val_text = tok.partition(":")
            if not sep:
                raise LibSVMFormatError(f"malformed feature token {tok!r}", lineno)
            try:
                idx = int(idx_text)
                val = float(val_text)
            except ValueError:
                raise LibSVMFormatError(f"malformed feature token {tok!r}", lineno) from None
            if idx < 1:
                raise LibSVMFormatError(f"feature index {idx} is not 1-based", lineno)
            if idx <= prev:
                raise LibSVMFormatError(
                    f"feature indices must be strictly increasing ({prev} then {idx})", lineno
                )
            if expected_d is not None and idx > expected_d:
                raise LibSVMFormatError(f"feature index {idx} exceeds d={expected_d}", lineno)
            prev = idx
            indices.append(idx - 1)
            values.append(val)
        max_index = max(max_index, prev)
        indptr.append(len(indices))

    d = expected_d if expected_d is not None else max_index
    features = sp.csr_matrix(
        (
            np.asarray(values, dtype=np.float64),
            np.asarray(indices, dtype=np.int64),
            np.asarray(indptr, dtype=np.int64),
        ),
        shape=(len(labels), d),
    )
    return SparseDataset(features, np.asarray(labels, dtype=np.float64))


def _open_text(path: Path) -> TextIO:
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if path.suffix == ".gz" or magic == _GZIP_MAGIC:
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8")
    return open(path, encoding="utf-8")


def load_libsvm(path: str | Path, expected_d: int | None = None) -> SparseDataset:
    path = Path(path)
    with _open_text(path) as fh:
        ds = parse_libsvm(fh, expected_d)
    logger.info("loaded %s: n=%d d=%d nnz=%d", path, ds.n, ds.d, ds.features.nnz)
    return ds


def _format_number(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return format(float(value), ".17g")


def serialize_libsvm(ds: SparseDataset, stream: TextIO) -> None:
    """Write `ds` in LIBSVM format (1-based, indices sorted per row)."""
    A = ds.features.tocsr(copy=True)
    A.sort_indices()
    for i in range(ds.n):
        lo, hi = A.indptr[i], A.indptr[i + 1]
        parts = [_format_number(ds.labels[i])]
        parts.extend(
            f"{j + 1}:{_format_number(v)}" for j, v in zip(A.indices[lo:hi], A.data[lo:hi])
        )
        stream.write(" ".join(parts) + "\n")


# ============================================================================
# Labels and splits
# ============================================================================


class LabelRule(str, Enum):
    ZERO_ONE = "zero_one"
    PLUS_MINUS_TO_ZERO_ONE = "plus_minus_to_zero_one"
    EVEN_ODD = "even_odd"
    ONE_TWO = "one_two"
    ONE_VS_REST = "one_vs_rest"


def binarize_labels(
    ds: SparseDataset, rule: LabelRule | str, positive_label: float | None = None
) -> SparseDataset:
    """Map labels to {0, 1}.

    - zero_one: labels already in {0, 1}
    - plus_minus_to_zero_one: -1 -> 0, +1 -> 1
    - even_odd: even digits -> 1, odd digits -> 0
    - one_two: 1 -> 0, 2 -> 1
    - one_vs_rest: `positive_label` -> 1, everything else -> 0
    """

    rule = LabelRule(rule)
    y = ds.labels

    def require(allowed: set[float]) -> None:
        bad = sorted(set(np.unique(y).tolist()) - allowed)
        if bad:
            raise LabelMappingError(f"rule {rule.value!r} cannot map label(s) {bad}")

    if rule is LabelRule.ZERO_ONE:
        require({0.0, 1.0})
        out = y.copy()
    elif rule is LabelRule.PLUS_MINUS_TO_ZERO_ONE:
        require({-1.0, 1.0})
        out = (y + 1.0) / 2.0
    elif rule is LabelRule.ONE_TWO:
        require({1.0, 2.0})
        out = y - 1.0
    elif rule is LabelRule.EVEN_ODD:
        if np.any(y != np.round(y)) or np.any(y < 0):
            raise LabelMappingError("even_odd needs non-negative integer labels")
        out = (np.mod(y, 2) == 0).astype(np.float64)
    else:
        if positive_label is None:
            raise LabelMappingError("one_vs_rest needs positive_label")
        out = (y == positive_label).astype(np.float64)
    return ds.with_labels(out)


def select_labels(ds: SparseDataset, keep: Iterable[float]) -> SparseDataset:
    """Rows whose label is in `keep` (e.g. a digit pair)."""
    keep = np.asarray(list(keep), dtype=np.float64)
    return ds.subset(np.flatnonzero(np.isin(ds.labels, keep)))


def train_test_split(
    ds: SparseDataset,
    test_fraction: float | None = None,
    *,
    test_file: str | Path | None = None,
    seed: SeedLike = 0,
) -> tuple[SparseDataset, SparseDataset]:
    """Hold out round(test_fraction * n) random rows, or load a companion test file."""
    if test_file is not None:
        path = Path(test_file)
        if not path.exists():
            raise FileNotFoundError(f"test file not found: {path}")
        test = load_libsvm(path, expected_d=ds.d)
        logger.info("split: train=%d test=%d (companion file)", ds.n, test.n)
        return ds, test
    if test_fraction is None or not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction!r}")
    n_test = int(round(test_fraction * ds.n))
    if not 0 < n_test < ds.n:
        raise ValueError(f"test_fraction={test_fraction} leaves an empty side for n={ds.n}")
    perm = normalize_generator(seed).permutation(ds.n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    logger.info("split: train=%d test=%d", train_idx.size, test_idx.size)
    return ds.subset(train_idx), ds.subset(test_idx)


def max_abs_scale(
    train: SparseDataset, test: SparseDataset | None = None
) -> tuple[SparseDataset, SparseDataset | None]:
    """Divide each column by its max |value| on the training rows."""
    col_max = np.asarray(abs(train.features).max(axis=0).todense(), dtype=np.float64).ravel()
    col_max[col_max == 0] = 1.0
    scaler = sp.diags(1.0 / col_max)

    def apply(ds: SparseDataset) -> SparseDataset:
        return SparseDataset(sp.csr_matrix(ds.features @ scaler), ds.labels.copy())

    return apply(train), (apply(test) if test is not None else None)
