from __future__ import annotations

import numpy as np

from ..operators import HessianOperator
from ..oracle import ParamVector, as_param_vector
from .lanczos import solve_tr_lanczos
from .utils import SubproblemResult, Termination, boundary_step_length, quadratic_model


def solve_tr_subproblem(
    H: HessianOperator,
    g: ParamVector,
    delta: float,
    tol: float | None = None,
    max_iter: int | None = None,
    *,
    method: str = "cg",
) -> SubproblemResult:
    """Approximately minimize g.s + 1/2 s^T H s subject to ||s|| <= delta.

    method="cg" runs truncated conjugate gradients (Steihaug): stop on
    residual ||r_k|| <= tol * ||g||, on crossing the boundary, or on a
    direction of non-positive curvature, which is followed to the boundary.
    method="lanczos" solves the problem restricted to the Krylov space
    exactly at every step and is globally optimal once the space is large
    enough.

    Defaults: tol = min(0.5, sqrt(||g||)), max_iter = d.
    """

    if delta <= 0:
        raise ValueError("delta must be positive")
    g = as_param_vector(g, H.dim, name="g")
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return SubproblemResult(np.zeros(H.dim), 0.0, 0, Termination.INTERIOR)
    if tol is None:
        tol = min(0.5, np.sqrt(gnorm))
    if max_iter is None:
        max_iter = H.dim
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")

    if method == "lanczos":
        return solve_tr_lanczos(H, g, delta, tol, max_iter)
    if method != "cg":
        raise ValueError(f"unknown sub-problem method {method!r}")

    z = np.zeros(H.dim)
    r = g.copy()  # r = g + H z
    d = -r
    rr = float(r @ r)
    hvps = 0

    for _ in range(max_iter):
        Hd = H.matvec(d)
        hvps += 1
        dHd = float(d @ Hd)
        if dHd <= 0:
            tau = boundary_step_length(z, d, delta)
            s = z + tau * d
            return SubproblemResult(
                s, quadratic_model(g, s, r - g + tau * Hd), hvps, Termination.NEGATIVE_CURVATURE
            )
        alpha = rr / dHd
        z_next = z + alpha * d
        if float(np.linalg.norm(z_next)) >= delta:
            tau = boundary_step_length(z, d, delta)
            s = z + tau * d
            return SubproblemResult(
                s, quadratic_model(g, s, r - g + tau * Hd), hvps, Termination.BOUNDARY
            )
        z = z_next
        r = r + alpha * Hd
        rr_next = float(r @ r)
        if np.sqrt(rr_next) <= tol * gnorm:
            return SubproblemResult(z, quadratic_model(g, z, r - g), hvps, Termination.INTERIOR)
        d = -r + (rr_next / rr) * d
        rr = rr_next

    return SubproblemResult(z, quadratic_model(g, z, r - g), hvps, Termination.MAX_ITERATIONS)
