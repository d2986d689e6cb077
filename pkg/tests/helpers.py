"""Shared builders for test instances."""

import numpy as np

from curvopt.problems import NLSProblem


def make_nls(n: int, d: int, seed: int = 0, *, chunk_size: int = 4096, workers=None) -> NLSProblem:
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d))
    w_true = rng.standard_normal(d)
    y = (A @ w_true + 0.5 * rng.standard_normal(n) > 0).astype(float)
    return NLSProblem(A, y, chunk_size=chunk_size, workers=workers)


def write_libsvm(path, n: int = 60, d: int = 5, seed: int = 0, plus_minus: bool = True):
    """Random LIBSVM file; labels -1/+1 (or 0/1) from a noisy linear rule."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, d))
    A[rng.random((n, d)) < 0.3] = 0.0
    A[:, 0] = 1.0 + rng.random(n)
    y = A @ rng.standard_normal(d) + 0.3 * rng.standard_normal(n) > 0
    lines = []
    for row, label in zip(A, y):
        lab = (1 if label else -1) if plus_minus else int(label)
        feats = " ".join(f"{j + 1}:{v:.6f}" for j, v in enumerate(row) if v != 0.0)
        lines.append(f"{lab} {feats}")
    path.write_text("\n".join(lines) + "\n")
    return path


def central_difference(f, x, u, h=1e-5):
    return (f(x + h * u) - f(x - h * u)) / (2 * h)
