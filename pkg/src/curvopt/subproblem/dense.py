"""
Exact trust-region and cubic sub-problem solvers in an eigenbasis.

Given H = V diag(lam) V^T and c = V^T g, the global minimizers satisfy
y(mu) = -c / (lam + mu) with mu >= max(0, -lam_min) and either ||y|| = delta
(trust region) or ||y|| = mu / sigma (cubic). The scalar equation is solved
for the shift t = mu - max(0, -lam_min) with scipy's Brent root finder so
that tiny shifts near a singular H keep full relative precision. The hard
case (c orthogonal to the leading eigenspace) is completed with a multiple
of a leading eigenvector.

The `dense_reference_*` entry points are test oracles and are limited to
small dimensions.
"""

from __future__ import annotations

from typing import Any, Callable

import numpy as np
from scipy.optimize import brentq

from ..oracle import as_param_vector
from .utils import SubproblemResult, Termination

_DENSE_LIMIT = 50
_HARD_CASE_RTOL = 1e-10


def _model_in_eigenbasis(lam: np.ndarray, c: np.ndarray, y: np.ndarray, sigma: float = 0.0) -> float:
    value = float(c @ y + 0.5 * np.sum(lam * y * y))
    if sigma:
        value += sigma / 3.0 * float(np.linalg.norm(y)) ** 3
    return value


def _shifted_solution(
    lam: np.ndarray,
    c: np.ndarray,
    mu_lo: float,
    t_hi: float,
    radius: Callable[[float], float],
) -> np.ndarray:
    """Solve ||c / (lam + mu_lo + t)|| = radius(t) for t >= 0 and return y."""
    shifted = np.maximum(lam + mu_lo, 0.0)
    scale = max(1.0, float(np.max(np.abs(lam))))
    lead = shifted <= 1e-12 * scale
    cnorm = float(np.linalg.norm(c))

    def y_of(t: float) -> np.ndarray:
        return -c / (shifted + t)

    if lead.any() and float(np.linalg.norm(c[lead])) <= _HARD_CASE_RTOL * cnorm:
        y = np.zeros_like(c)
        rest = ~lead
        y[rest] = -c[rest] / shifted[rest]
        r0 = radius(0.0)
        ynorm = float(np.linalg.norm(y))
        if ynorm <= r0:
            if mu_lo > 0:
                j = int(np.flatnonzero(lead)[0])
                tau = np.sqrt(max(r0 * r0 - ynorm * ynorm, 0.0))
                y[j] += -tau if c[j] > 0 else tau
            return y

    def psi(t: float) -> float:
        return float(np.linalg.norm(y_of(t))) - radius(t)

    t_hi = max(t_hi, np.finfo(float).tiny)
    while psi(t_hi) > 0:
        t_hi *= 2.0
    if psi(t_hi) == 0.0:
        return y_of(t_hi)

    t_lo = t_hi
    while t_lo > 0 and psi(t_lo) <= 0:
        t_lo *= 0.5
    if t_lo == 0.0:
        # Could not bracket from the left: shift is below float resolution.
        return y_of(np.finfo(float).tiny)

    t = brentq(psi, t_lo, t_hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500, disp=False)
    return y_of(t)


def solve_tr_eigen(lam: Any, c: Any, delta: float) -> tuple[np.ndarray, float]:
    """Global minimizer of c.y + 1/2 y^T diag(lam) y subject to ||y|| <= delta."""
    lam = np.asarray(lam, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if delta <= 0:
        raise ValueError("delta must be positive")
    lam_min = float(lam.min())
    if lam_min > 0:
        y = -c / lam
        if float(np.linalg.norm(y)) <= delta:
            return y, _model_in_eigenbasis(lam, c, y)
    mu_lo = max(0.0, -lam_min)
    cnorm = float(np.linalg.norm(c))
    t_hi = cnorm / delta - max(lam_min, 0.0)
    y = _shifted_solution(lam, c, mu_lo, t_hi, lambda t: delta)
    norm = float(np.linalg.norm(y))
    if norm > delta:
        y *= delta / norm
    return y, _model_in_eigenbasis(lam, c, y)


def solve_cubic_eigen(lam: Any, c: Any, sigma: float) -> tuple[np.ndarray, float]:
    """Global minimizer of c.y + 1/2 y^T diag(lam) y + sigma/3 ||y||^3."""
    lam = np.asarray(lam, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    lam_min = float(lam.min())
    cnorm = float(np.linalg.norm(c))
    if cnorm == 0.0 and lam_min >= 0:
        y = np.zeros_like(c)
        return y, 0.0
    mu_lo = max(0.0, -lam_min)
    b = abs(lam_min)
    # Positive root of t^2 + b t - sigma ||c|| = 0, written without cancellation.
    t_hi = 2.0 * sigma * cnorm / (b + np.sqrt(b * b + 4.0 * sigma * cnorm)) if cnorm > 0 else 0.0
    y = _shifted_solution(lam, c, mu_lo, t_hi, lambda t: (mu_lo + t) / sigma)
    return y, _model_in_eigenbasis(lam, c, y, sigma)


def _dense_eigh(H: Any, g: Any) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {H.shape}")
    if H.shape[0] > _DENSE_LIMIT:
        raise ValueError(f"dense references are limited to d <= {_DENSE_LIMIT}")
    g = as_param_vector(g, H.shape[0], name="g")
    lam, V = np.linalg.eigh(0.5 * (H + H.T))
    return lam, V, V.T @ g


def dense_reference_tr(H: Any, g: Any, delta: float) -> SubproblemResult:
    lam, V, c = _dense_eigh(H, g)
    y, m = solve_tr_eigen(lam, c, delta)
    s = V @ y
    on_boundary = float(np.linalg.norm(s)) >= delta * (1 - 1e-8)
    return SubproblemResult(
        step=s,
        model_value=m,
        hvp_count=0,
        termination=Termination.BOUNDARY if on_boundary else Termination.INTERIOR,
    )


def dense_reference_cubic(H: Any, g: Any, sigma: float) -> SubproblemResult:
    lam, V, c = _dense_eigh(H, g)
    y, m = solve_cubic_eigen(lam, c, sigma)
    return SubproblemResult(step=V @ y, model_value=m, hvp_count=0, termination=Termination.INTERIOR)
