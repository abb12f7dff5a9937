"""Cluster log-likelihoods and the temporally consistent assignment step.

Given per-point, per-cluster negative log likelihoods, the assignment that
minimizes total cost plus beta per label switch is a minimum-cost path over
a T x K trellis where node costs are the likelihood terms and edge costs
are beta whenever the label changes. Dynamic programming finds the global
optimum of this combinatorial problem in O(K T) time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .toeplitz import BlockToeplitzMatrix, assemble

LOG_2PI = math.log(2.0 * math.pi)


class InvalidModelError(ValueError):
    """A cluster precision matrix is not positive definite."""


@dataclass(frozen=True)
class CostMatrix:
    """T x K matrix of negative log likelihoods, entry (t, k) = -ll(X_t, Theta_k)."""

    nll: np.ndarray

    def __post_init__(self):
        nll = np.asarray(self.nll, dtype=float)
        if nll.ndim != 2 or nll.size == 0:
            raise ValueError(f"cost matrix must be a nonempty T x K matrix, got {nll.shape}")
        if not np.all(np.isfinite(nll)):
            raise ValueError("cost matrix entries must be finite")
        nll = nll.copy()
        nll.setflags(write=False)
        object.__setattr__(self, "nll", nll)

    @property
    def T(self) -> int:
        return self.nll.shape[0]

    @property
    def K(self) -> int:
        return self.nll.shape[1]


@dataclass(frozen=True)
class AssignmentPath:
    """Length-T label vector with entries in {0..K-1}."""

    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a nonempty 1-d vector")
        if np.any(labels < 0):
            raise ValueError("labels must be nonnegative")
        labels = labels.copy()
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def T(self) -> int:
        return self.labels.size

    @property
    def num_switches(self) -> int:
        return int(np.sum(self.labels[1:] != self.labels[:-1]))

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)


def log_likelihood(x: np.ndarray, theta: BlockToeplitzMatrix, mu: np.ndarray) -> float:
    """Gaussian log density of one stacked window under a cluster model.

    Returns -1/2 (x-mu)^T Theta (x-mu) + 1/2 log det(Theta) - nw/2 log(2 pi).
    The constant uses the window dimension nw, so the value is the true
    density of the nw-dimensional Gaussian.
    """
    dense = assemble(theta)
    logdet = _pd_logdet(dense)
    if logdet is None:
        raise InvalidModelError("precision matrix is not positive definite")
    diff = np.asarray(x, dtype=float) - np.asarray(mu, dtype=float)
    return float(-0.5 * diff @ dense @ diff + 0.5 * logdet - 0.5 * dense.shape[0] * LOG_2PI)


def _pd_logdet(dense: np.ndarray) -> float | None:
    """log det of a symmetric matrix, or None when it is not PD."""
    try:
        chol = np.linalg.cholesky(dense)
    except np.linalg.LinAlgError:
        return None
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def nll_matrix(rows: np.ndarray, models) -> CostMatrix:
    """Negative log likelihood of every row under every cluster model.

    Parameters
    ----------
    rows : (T, nw) array
        Stacked subsequence rows.
    models : sequence of (theta, mu)
        ``theta`` either a BlockToeplitzMatrix or a dense precision matrix.
    """
    rows = np.asarray(rows, dtype=float)
    T = rows.shape[0]
    nw = rows.shape[1]
    out = np.empty((T, len(models)))
    for k, (theta, mu) in enumerate(models):
        dense = assemble(theta) if isinstance(theta, BlockToeplitzMatrix) else np.asarray(theta)
        logdet = _pd_logdet(dense)
        if logdet is None:
            raise InvalidModelError(f"cluster {k}: precision matrix is not positive definite")
        diff = rows - np.asarray(mu, dtype=float)
        quad = np.einsum("ij,jk,ik->i", diff, dense, diff)
        out[:, k] = 0.5 * quad - 0.5 * logdet + 0.5 * nw * LOG_2PI
    return CostMatrix(out)


def assign_dp(costs: CostMatrix, beta: float) -> AssignmentPath:
    """Globally optimal label path for node costs plus beta per switch.

    Forward pass over t with running best costs per label; at each step a
    label either keeps its own path or, when strictly cheaper, takes over
    the globally cheapest previous path and pays the switch penalty (ties
    go to the takeover, from the lowest-index previous label). The first
    point pays no switch penalty. Backtracking reconstructs the path.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    nll = costs.nll
    T, K = nll.shape
    arange_k = np.arange(K)
    back = np.empty((T, K), dtype=np.intp)
    back[0] = arange_k

    prev = nll[0].copy()
    for t in range(1, T):
        min_idx = int(np.argmin(prev))
        switch_cost = prev[min_idx] + beta
        stay = switch_cost > prev
        prev[~stay] = switch_cost
        prev += nll[t]
        back[t] = np.where(stay, arange_k, min_idx)

    labels = np.empty(T, dtype=int)
    labels[-1] = int(np.argmin(prev))
    for t in range(T - 1, 0, -1):
        labels[t - 1] = back[t, labels[t]]
    return AssignmentPath(labels)


def path_cost(costs: CostMatrix, labels: np.ndarray, beta: float) -> float:
    """Total cost of one specific path, accumulated in time order."""
    labels = np.asarray(labels, dtype=int)
    total = float(costs.nll[0, labels[0]])
    for t in range(1, len(labels)):
        if labels[t] != labels[t - 1]:
            total = total + beta
        total = total + costs.nll[t, labels[t]]
    return total
