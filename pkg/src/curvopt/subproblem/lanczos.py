"""
Lanczos tridiagonalization and the Krylov sub-problem solvers built on it.

The cubic solver projects the model onto K_k(H, g) = span{g, Hg, ..., H^{k-1} g},
where Q_k^T H Q_k = T_k is tridiagonal and Q_k^T g = ||g|| e_1, solves the
small problem exactly in the eigenbasis of T_k and lifts the minimizer back.
The gradient of the full model at the lifted step is beta_{k+1} |y_k| q_{k+1},
which gives a free stopping test.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .._common import SeedLike, normalize_generator
from ..operators import HessianOperator
from ..oracle import ParamVector, as_param_vector
from .dense import solve_cubic_eigen, solve_tr_eigen
from .utils import SubproblemResult, Termination

logger = logging.getLogger(__name__)

DEFAULT_LANCZOS_CAP = 250
_BREAKDOWN_RTOL = 1e-12


class LanczosProcess:
    """Incremental Lanczos recurrence with optional full reorthogonalization.

    Each `step()` issues exactly one Hessian-vector product and returns False
    once the Krylov space stops growing (breakdown, or the full dimension is
    spanned).
    """

    def __init__(
        self,
        H: HessianOperator,
        start: ParamVector,
        *,
        max_steps: int,
        reorthogonalize: bool = True,
    ):
        norm = float(np.linalg.norm(start))
        if norm == 0.0:
            raise ValueError("Lanczos start vector must be nonzero")
        self._H = H
        self.dim = H.dim
        self.reorthogonalize = reorthogonalize
        capacity = min(max_steps, self.dim) + 1
        self._Q = np.zeros((self.dim, capacity))
        self._Q[:, 0] = start / norm
        self.alphas: list[float] = []
        self.betas: list[float] = []
        self.last_beta = 0.0
        self.hvp_count = 0
        self.exhausted = False
        self._scale = 0.0

    @property
    def k(self) -> int:
        return len(self.alphas)

    def step(self) -> bool:
        if self.exhausted:
            return False
        k = self.k
        q = self._Q[:, k]
        w = np.array(self._H.matvec(q), dtype=np.float64)
        self.hvp_count += 1
        alpha = float(q @ w)
        w -= alpha * q
        if k > 0:
            w -= self.betas[k - 1] * self._Q[:, k - 1]
        if self.reorthogonalize:
            basis = self._Q[:, : k + 1]
            # Twice is enough.
            w -= basis @ (basis.T @ w)
            w -= basis @ (basis.T @ w)
        self.alphas.append(alpha)
        beta = float(np.linalg.norm(w))
        self._scale = max(self._scale, abs(alpha), beta)
        self.last_beta = beta

        full = k + 1 >= self.dim or k + 1 >= self._Q.shape[1]
        broke = beta <= _BREAKDOWN_RTOL * max(1.0, self._scale)
        if broke or full:
            if broke and not full:
                logger.debug("Lanczos breakdown after %d steps", k + 1)
            self.exhausted = True
            return False
        self.betas.append(beta)
        self._Q[:, k + 1] = w / beta
        return True

    def tridiagonal_eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending) and eigenvectors of the current T_k."""
        k = self.k
        if k == 1:
            return np.array(self.alphas), np.ones((1, 1))
        return eigh_tridiagonal(np.array(self.alphas), np.array(self.betas[: k - 1]))

    def basis(self) -> np.ndarray:
        return self._Q[:, : self.k]


def _projected_residual(proc: LanczosProcess, y: np.ndarray) -> float:
    if proc.exhausted:
        return 0.0
    return proc.last_beta * abs(float(y[-1]))


def solve_cubic_subproblem(
    H: HessianOperator,
    g: ParamVector,
    sigma: float,
    tol: float | None = None,
    max_iter: int = DEFAULT_LANCZOS_CAP,
    *,
    reorthogonalize: bool = True,
) -> SubproblemResult:
    """Approximately minimize g.s + 1/2 s^T H s + sigma/3 ||s||^3 over a Krylov space.

    Stops when the model-gradient norm falls below tol * ||g|| (default
    tol = min(0.5, sqrt(||g||))), the Krylov space is exhausted, or after
    `max_iter` Lanczos steps. Every product issued is counted in `hvp_count`.
    """

    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    g = as_param_vector(g, H.dim, name="g")
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return SubproblemResult(np.zeros(H.dim), 0.0, 0, Termination.INTERIOR)
    if tol is None:
        tol = min(0.5, np.sqrt(gnorm))

    proc = LanczosProcess(H, g, max_steps=max_iter, reorthogonalize=reorthogonalize)
    while True:
        grew = proc.step()
        theta, U = proc.tridiagonal_eigh()
        y_eig, model = solve_cubic_eigen(theta, gnorm * U[0, :], sigma)
        y = U @ y_eig
        if not grew or _projected_residual(proc, y) <= tol * gnorm:
            termination = Termination.INTERIOR
            break
        if proc.k >= max_iter:
            termination = Termination.MAX_ITERATIONS
            break

    return SubproblemResult(proc.basis() @ y, float(model), proc.hvp_count, termination)


def solve_tr_lanczos(
    H: HessianOperator,
    g: ParamVector,
    delta: float,
    tol: float,
    max_iter: int,
    *,
    reorthogonalize: bool = True,
) -> SubproblemResult:
    """Trust-region analogue of `solve_cubic_subproblem` (exact projected solves)."""
    gnorm = float(np.linalg.norm(g))
    proc = LanczosProcess(H, g, max_steps=max_iter, reorthogonalize=reorthogonalize)
    while True:
        grew = proc.step()
        theta, U = proc.tridiagonal_eigh()
        y_eig, model = solve_tr_eigen(theta, gnorm * U[0, :], delta)
        y = U @ y_eig
        converged = not grew or _projected_residual(proc, y) <= tol * gnorm
        if converged or proc.k >= max_iter:
            break

    if not converged:
        termination = Termination.MAX_ITERATIONS
    elif theta[0] < 0:
        termination = Termination.NEGATIVE_CURVATURE
    elif float(np.linalg.norm(y)) >= delta * (1 - 1e-8):
        termination = Termination.BOUNDARY
    else:
        termination = Termination.INTERIOR
    return SubproblemResult(proc.basis() @ y, float(model), proc.hvp_count, termination)


def lanczos_min_eigenpair(
    H: HessianOperator, k: int | None = None, seed: SeedLike = 0
) -> tuple[float, ParamVector]:
    """Smallest Ritz value and its unit Ritz vector after k Lanczos steps."""
    rng = normalize_generator(seed)
    k = min(H.dim, 20) if k is None else min(int(k), H.dim)
    if k < 1:
        raise ValueError("k must be at least 1")
    start = rng.standard_normal(H.dim)
    while not np.any(start):
        start = rng.standard_normal(H.dim)

    proc = LanczosProcess(H, start, max_steps=k, reorthogonalize=True)
    for _ in range(k):
        if not proc.step():
            break
    theta, U = proc.tridiagonal_eigh()
    vec = proc.basis() @ U[:, 0]
    vec /= np.linalg.norm(vec)
    return float(theta[0]), vec


def estimate_min_eigenvalue(
    H: HessianOperator, probes: int = 1, k: int | None = None, seed: SeedLike = 0
) -> float:
    """Smallest Ritz value over `probes` random starts (an upper bound on lambda_min)."""
    if probes < 1:
        raise ValueError("probes must be at least 1")
    rng = normalize_generator(seed)
    return min(lanczos_min_eigenpair(H, k, rng)[0] for _ in range(probes))
