"""Toeplitz graphical lasso solved by ADMM with closed-form subproblems.

The problem is l1-penalized Gaussian maximum-likelihood inverse covariance
estimation restricted to the symmetric block-Toeplitz set:

    minimize  -log det(Theta) + tr(S Theta) + ||lam o Theta||_1
    subject to  Theta block Toeplitz,

with S the empirical covariance and lam an elementwise penalty matrix
(any per-cluster 1/|P| factor is folded into lam by the caller). ADMM
splits the smooth log-det term (Theta) from the structured l1 term (Z)
through a consensus constraint Theta = Z; both subproblems have analytic
solutions, so one iteration costs a single eigendecomposition plus a
batch of independent scalar soft thresholds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .toeplitz import BlockToeplitzMatrix, OccurrenceIndex


@dataclass(frozen=True)
class GlassoProblem:
    """Inputs of one Toeplitz graphical lasso instance."""

    S: np.ndarray
    lam: np.ndarray
    n: int
    w: int

    def __post_init__(self):
        S = np.asarray(self.S, dtype=float)
        lam = np.asarray(self.lam, dtype=float)
        nw = self.n * self.w
        if S.shape != (nw, nw):
            raise ValueError(f"S must be {nw} x {nw}, got {S.shape}")
        if lam.shape != (nw, nw):
            raise ValueError(f"lam must be {nw} x {nw}, got {lam.shape}")
        if not np.all(np.isfinite(S)):
            raise ValueError("S contains non-finite entries")
        if np.max(np.abs(S - S.T)) > 1e-8 * max(1.0, np.max(np.abs(S))):
            raise ValueError("S must be symmetric")
        if np.any(lam < 0):
            raise ValueError("lam entries must be nonnegative")
        if np.max(np.abs(lam - lam.T)) > 0:
            raise ValueError("lam must be symmetric")
        object.__setattr__(self, "S", (S + S.T) / 2.0)
        object.__setattr__(self, "lam", lam)

    @property
    def nw(self) -> int:
        return self.n * self.w


@dataclass(frozen=True)
class AdmmConfig:
    rho: float = 1.0
    eps_abs: float = 1e-6
    eps_rel: float = 1e-6
    max_iter: int = 1000

    def __post_init__(self):
        if self.rho <= 0 or self.eps_abs <= 0 or self.eps_rel <= 0 or self.max_iter < 1:
            raise ValueError("ADMM configuration values must be positive")


@dataclass
class AdmmState:
    """Iterates of one solve; reusable as a warm start for the next one."""

    theta: np.ndarray
    z: np.ndarray
    u: np.ndarray
    rho: float
    iterations: int = 0
    primal_res: float = math.inf
    dual_res: float = math.inf


@dataclass(frozen=True)
class GlassoSolution:
    theta: BlockToeplitzMatrix
    converged: bool
    iterations: int
    primal_res: float
    dual_res: float
    objective: float
    state: AdmmState
    trace: list = field(default_factory=list)


def theta_update(z: np.ndarray, u: np.ndarray, S: np.ndarray, rho: float) -> np.ndarray:
    """Closed-form minimizer of the smooth ADMM subproblem.

    With Q D Q^T the eigendecomposition of rho*(Z - U) - S, the minimizer of
    -log det(Theta) + tr(S Theta) + rho/2 ||Theta - Z + U||_F^2 is
    Q diag((d + sqrt(d^2 + 4 rho)) / (2 rho)) Q^T, which is symmetric
    positive definite for any rho > 0.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    M = rho * (z - u) - S
    M = (M + M.T) / 2.0
    if not np.all(np.isfinite(M)):
        raise ValueError("non-finite input to eigendecomposition")
    d, Q = np.linalg.eigh(M)
    eigs = (d + np.sqrt(d * d + 4.0 * rho)) / (2.0 * rho)
    theta = (Q * eigs) @ Q.T
    return (theta + theta.T) / 2.0


def z_update(theta: np.ndarray, u: np.ndarray, lam: np.ndarray, rho: float,
             occ: OccurrenceIndex) -> np.ndarray:
    """Exactly block-Toeplitz proximal step, one soft threshold per set.

    For each occurrence set, with sums taken over its R positions of
    A = Theta + U and of lam, the shared value is
    (rho*sum(A) - sum(lam)) / (rho*R) when that is positive,
    (rho*sum(A) + sum(lam)) / (rho*R) when that is negative, else 0.
    With lam = 0 this reduces to the plain averaging projection.
    """
    if rho <= 0:
        raise ValueError("rho must be positive")
    a_sums = occ.set_sums(theta + u)
    q = occ.set_sums(lam)
    denom = rho * occ.counts
    pos = (rho * a_sums - q) / denom
    neg = (rho * a_sums + q) / denom
    values = np.where(pos > 0, pos, np.where(neg < 0, neg, 0.0))
    return occ.scatter(values)


def objective_value(S: np.ndarray, lam: np.ndarray, theta: np.ndarray) -> float:
    """-log det(Theta) + tr(S Theta) + ||lam o Theta||_1; +inf if not PD."""
    try:
        chol = np.linalg.cholesky(theta)
    except np.linalg.LinAlgError:
        return math.inf
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return float(-logdet + np.sum(S * theta) + np.sum(lam * np.abs(theta)))


def stationarity_residual(theta: np.ndarray, z: np.ndarray, u: np.ndarray,
                          S: np.ndarray, rho: float) -> float:
    """Gradient norm of the Theta subproblem at theta; ~0 for the closed form."""
    grad = -np.linalg.inv(theta) + S + rho * (theta - z + u)
    return float(np.linalg.norm(grad, "fro"))


def solve(problem: GlassoProblem, cfg: AdmmConfig = AdmmConfig(),
          occ: OccurrenceIndex | None = None, warm: AdmmState | None = None,
          collect_trace: bool = False) -> GlassoSolution:
    """Run ADMM to convergence on one Toeplitz graphical lasso instance.

    Stopping uses the standard combined absolute/relative thresholds on the
    primal residual ||Theta - Z||_F and dual residual rho*||Z - Z_prev||_F.
    If ``max_iter`` is reached first, the iterate with the smallest residual
    ratio seen so far is returned and ``converged`` is False.

    Parameters
    ----------
    problem : GlassoProblem
    cfg : AdmmConfig
    occ : OccurrenceIndex, optional
        Precomputed occurrence index for (problem.n, problem.w); built on
        the fly when omitted.
    warm : AdmmState, optional
        Iterates of a previous solve of a nearby problem; cuts iterations
        substantially when the solver runs repeatedly inside EM.
    collect_trace : bool
        Record (iteration, primal_res, dual_res, objective, theta-update
        stationarity residual) per iteration.
    """
    nw = problem.nw
    if occ is None:
        occ = OccurrenceIndex.for_shape(problem.n, problem.w)
    elif occ.n != problem.n or occ.w != problem.w:
        raise ValueError("occurrence index shape does not match problem")
    rho = cfg.rho
    if warm is not None:
        z = np.array(warm.z, dtype=float)
        u = np.array(warm.u, dtype=float) * (warm.rho / rho)
    else:
        z = np.zeros((nw, nw))
        u = np.zeros((nw, nw))

    sqrt_nw = math.sqrt(nw)
    trace: list = []
    theta = z
    best_score = math.inf
    best = None
    converged = False
    primal = dual = math.inf
    it = 0
    for it in range(1, cfg.max_iter + 1):
        theta = theta_update(z, u, problem.S, rho)
        if collect_trace:
            stat_res = stationarity_residual(theta, z, u, problem.S, rho)
        z_prev = z
        z = z_update(theta, u, problem.lam, rho, occ)
        u = u + theta - z

        primal = float(np.linalg.norm(theta - z, "fro"))
        dual = float(rho * np.linalg.norm(z - z_prev, "fro"))
        eps_pri = sqrt_nw * cfg.eps_abs + cfg.eps_rel * max(
            np.linalg.norm(theta, "fro"), np.linalg.norm(z, "fro"))
        eps_dual = sqrt_nw * cfg.eps_abs + cfg.eps_rel * rho * np.linalg.norm(u, "fro")

        if collect_trace:
            trace.append((it, primal, dual,
                          objective_value(problem.S, problem.lam, theta), stat_res))

        score = max(primal / eps_pri, dual / eps_dual)
        if score < best_score:
            best_score = score
            best = (theta, z, u, primal, dual)
        if primal <= eps_pri and dual <= eps_dual:
            converged = True
            break

    if not converged and best is not None:
        theta, z, u, primal, dual = best

    state = AdmmState(theta=theta, z=z, u=u, rho=rho, iterations=it,
                      primal_res=primal, dual_res=dual)
    btm = _z_to_blocks(z, occ)
    return GlassoSolution(
        theta=btm,
        converged=converged,
        iterations=it,
        primal_res=primal,
        dual_res=dual,
        objective=objective_value(problem.S, problem.lam, z),
        state=state,
        trace=trace,
    )


def _z_to_blocks(z: np.ndarray, occ: OccurrenceIndex) -> BlockToeplitzMatrix:
    # Z is exactly block Toeplitz after every z_update; read one position per set.
    return occ.to_blocks(z.ravel()[occ.first_flat])


def scalar_lambda(value: float, n: int, w: int) -> np.ndarray:
    """Broadcast a single nonnegative constant to the full penalty matrix."""
    if value < 0:
        raise ValueError("lambda must be nonnegative")
    return np.full((n * w, n * w), float(value))
