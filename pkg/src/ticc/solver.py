"""EM-style driver: alternate DP assignment with per-cluster Toeplitz
graphical lasso updates until the assignment is stationary.

Each iteration refits every cluster's block-Toeplitz precision matrix on
its current members (M-step, independent convex solves, warm-started from
the previous iteration) and then reassigns all points with the exact
dynamic program (E-step). Convergence is declared when an E-step
reproduces the previous assignment.
"""

from __future__ import annotations

import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import glasso, toeplitz
from .assign import AssignmentPath, CostMatrix, assign_dp, nll_matrix
from .objective import objective_parts
from .timeseries import SubsequenceMatrix, TimeSeries, empirical_stats, stack_windows
from .toeplitz import BlockToeplitzMatrix, OccurrenceIndex


@dataclass
class TiccConfig:
    """Knobs of one clustering run.

    ``lam`` is the user-facing penalty (scalar broadcast to the full
    matrix); each cluster's solve receives lam / |P_i|. ``beta`` is the
    per-switch penalty of the assignment step. ``min_cluster_size``
    defaults to 2*w, enough members to keep covariance estimates sane.
    """

    K: int
    w: int
    lam: float | np.ndarray = 5.0
    beta: float = 100.0
    max_em_iters: int = 100
    seed: int = 0
    admm: glasso.AdmmConfig = field(default_factory=glasso.AdmmConfig)
    min_cluster_size: int | None = None
    init: str = "gmm"
    threads: int = 1
    debug_trace: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.w < 1:
            raise ValueError("w must be >= 1")
        if np.any(np.asarray(self.lam) < 0):
            raise ValueError("lam must be nonnegative")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.max_em_iters < 1:
            raise ValueError("max_em_iters must be >= 1")
        if self.init not in ("gmm", "contiguous", "uniform"):
            raise ValueError(f"unknown init method {self.init!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def effective_min_cluster_size(self) -> int:
        return 2 * self.w if self.min_cluster_size is None else self.min_cluster_size

    def lam_matrix(self, n: int) -> np.ndarray:
        lam = np.asarray(self.lam, dtype=float)
        if lam.ndim == 0:
            return glasso.scalar_lambda(float(lam), n, self.w)
        nw = n * self.w
        if lam.shape != (nw, nw):
            raise ValueError(f"lam matrix must be {nw} x {nw}, got {lam.shape}")
        return lam


@dataclass(frozen=True)
class ClusterModel:
    theta: BlockToeplitzMatrix
    mu: np.ndarray
    count: int


@dataclass
class TiccModel:
    """Result of one fit: cluster parameters, assignment, diagnostics."""

    clusters: list
    assignment: AssignmentPath
    em_iters_run: int
    converged: bool
    objective_trace: list
    config: TiccConfig
    n: int
    glasso_converged: bool = True
    timings: dict = field(default_factory=dict)
    admm_traces: list = field(default_factory=list)

    @property
    def K(self) -> int:
        return len(self.clusters)

    @property
    def w(self) -> int:
        return self.config.w


def _fill_empty_clusters(labels: np.ndarray, K: int, rng) -> np.ndarray:
    """Hand one point from a multi-member cluster to each empty cluster."""
    counts = np.bincount(labels, minlength=K)
    for k in np.flatnonzero(counts == 0):
        donors = np.flatnonzero(counts[labels] >= 2)
        pos = donors[rng.integers(0, donors.size)]
        counts[labels[pos]] -= 1
        labels[pos] = k
        counts[k] += 1
    return labels


def initialize(subseq: SubsequenceMatrix, K: int, seed: int,
               method: str = "gmm") -> AssignmentPath:
    """Seed assignment for the EM loop.

    The default fits a full-covariance Gaussian mixture to the stacked
    windows and uses its hard labels; since clusters differ mainly in
    correlation structure, this reliably breaks the symmetry that traps
    the alternating minimization when it starts from label partitions
    carrying no structural signal. ``method='contiguous'`` (K equal
    contiguous chunks, labels shuffled) and ``method='uniform'``
    (independent random labels) remain available. Every method leaves all
    clusters nonempty and is deterministic for a fixed seed.
    """
    T = subseq.T
    if T < K:
        raise ValueError(f"need T >= K, got T={T}, K={K}")
    rng = np.random.default_rng(seed)
    if method == "gmm":
        from sklearn.mixture import GaussianMixture

        gm = GaussianMixture(n_components=K, covariance_type="full",
                             n_init=5, random_state=seed)
        labels = np.asarray(gm.fit_predict(subseq.rows), dtype=int)
        labels = _fill_empty_clusters(labels, K, rng)
    elif method == "contiguous":
        perm = rng.permutation(K)
        labels = np.empty(T, dtype=int)
        bounds = [(k * T) // K for k in range(K + 1)]
        for k in range(K):
            labels[bounds[k]:bounds[k + 1]] = perm[k]
    elif method == "uniform":
        labels = _fill_empty_clusters(rng.integers(0, K, size=T), K, rng)
    else:
        raise ValueError(f"unknown init method {method!r}")
    return AssignmentPath(labels)


def handle_empty_cluster(assignment: AssignmentPath, costs: CostMatrix,
                         k_empty: int, min_cluster_size: int) -> AssignmentPath:
    """Reseed an empty cluster with the worst-explained contiguous block.

    The contiguous window of ``min_cluster_size`` points with the highest
    total negative log likelihood under the current assignment is handed to
    ``k_empty``, skipping windows whose removal would empty another
    cluster. A no-op when ``k_empty`` already has members.
    """
    labels = np.array(assignment.labels)
    if np.any(labels == k_empty):
        return assignment
    T = labels.size
    K = costs.K
    if T < K * min_cluster_size:
        raise ValueError(
            f"cannot reseed cluster {k_empty}: T={T} < K*min_cluster_size="
            f"{K * min_cluster_size}")
    m = min_cluster_size
    cur = costs.nll[np.arange(T), labels]
    window = np.convolve(cur, np.ones(m), mode="valid")  # sum over [s, s+m)
    counts = np.bincount(labels, minlength=K)
    for start in np.argsort(-window, kind="stable"):
        block = labels[start:start + m]
        removed = np.bincount(block, minlength=K)
        if np.all((counts - removed > 0) | (counts == 0)):
            labels[start:start + m] = k_empty
            return AssignmentPath(labels)
    raise ValueError(f"no feasible reseed window for cluster {k_empty}")


def _m_step(subseq, labels, cfg, lam_full, occ, warm_states):
    K = cfg.K

    def solve_one(k):
        members = np.flatnonzero(labels == k)
        stats = empirical_stats(subseq, members)
        # the member log likelihoods sum to |P|/2 * (tr(S Theta) - logdet),
        # so the normalized per-cluster problem carries 2*lam/|P|; this keeps
        # every M-step an exact minimizer of the combined objective
        problem = glasso.GlassoProblem(S=stats.cov,
                                       lam=2.0 * lam_full / stats.count,
                                       n=subseq.n, w=cfg.w)
        sol = glasso.solve(problem, cfg.admm, occ=occ, warm=warm_states[k],
                           collect_trace=cfg.debug_trace)
        return ClusterModel(theta=sol.theta, mu=stats.mean, count=stats.count), sol

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(solve_one, range(K)))
    else:
        results = [solve_one(k) for k in range(K)]
    clusters = [r[0] for r in results]
    for k, (_, sol) in enumerate(results):
        warm_states[k] = sol.state
    all_converged = all(r[1].converged for r in results)
    return clusters, all_converged, [r[1] for r in results]


def fit(ts: TimeSeries, cfg: TiccConfig) -> TiccModel:
    """Run the full clustering loop on a raw time series.

    Returns the fitted model with per-iteration objective trace and
    wall-clock timings per phase. Non-convergence of an inner ADMM solve is
    flagged on the model, not fatal.
    """
    mcs = cfg.effective_min_cluster_size
    if ts.T < cfg.K * mcs:
        raise ValueError(
            f"need T >= K*min_cluster_size = {cfg.K * mcs}, got T={ts.T}")
    if np.all(ts.data == ts.data[0]):
        warnings.warn("time series is constant; cluster structure is degenerate")

    subseq = stack_windows(ts, cfg.w)
    occ = OccurrenceIndex.for_shape(ts.n, cfg.w)
    lam_full = cfg.lam_matrix(ts.n)

    labels = initialize(subseq, cfg.K, cfg.seed, cfg.init).labels
    warm_states: list = [None] * cfg.K
    clusters: list = []
    trace: list = []
    admm_traces: list = []
    timings = {"admm": 0.0, "cost_build": 0.0, "dp": 0.0}
    glasso_ok = True
    converged = False
    em_iter = 0

    for em_iter in range(1, cfg.max_em_iters + 1):
        t0 = time.perf_counter()
        clusters, ok, sols = _m_step(subseq, labels, cfg, lam_full, occ, warm_states)
        glasso_ok = glasso_ok and ok
        timings["admm"] += time.perf_counter() - t0
        if cfg.debug_trace:
            for k, sol in enumerate(sols):
                admm_traces.extend((em_iter, k) + row for row in sol.trace)

        models = [(c.theta, c.mu) for c in clusters]
        t0 = time.perf_counter()
        costs = nll_matrix(subseq.rows, models)
        timings["cost_build"] += time.perf_counter() - t0
        t0 = time.perf_counter()
        path = assign_dp(costs, cfg.beta)
        timings["dp"] += time.perf_counter() - t0

        present = np.bincount(path.labels, minlength=cfg.K)
        for k in np.flatnonzero(present == 0):
            path = handle_empty_cluster(path, costs, int(k), mcs)

        trace.append(objective_parts(subseq, models, path.labels,
                                     lam_full, cfg.beta).total)
        if np.array_equal(path.labels, labels):
            converged = True
            break
        labels = path.labels

    return TiccModel(
        clusters=clusters,
        assignment=AssignmentPath(labels),
        em_iters_run=em_iter,
        converged=converged,
        objective_trace=trace,
        config=cfg,
        n=ts.n,
        glasso_converged=glasso_ok,
        timings=timings,
        admm_traces=admm_traces,
    )


def _count_parameters(btm: BlockToeplitzMatrix) -> int:
    """Unique block entries above the support threshold.

    Counts the upper triangle plus diagonal of A(0) once and every entry of
    A(m >= 1); the diagonal is always counted for a PD matrix.
    """
    thr = toeplitz.support_threshold(btm)
    q = int(np.sum(np.abs(btm.blocks[0][np.triu_indices(btm.n)]) > thr))
    for b in btm.blocks[1:]:
        q += int(np.sum(np.abs(b) > thr))
    return q


def bic(model: TiccModel, subseq: SubsequenceMatrix) -> float:
    """Bayesian information criterion: -2*loglik + (support size)*log T."""
    models = [(c.theta, c.mu) for c in model.clusters]
    costs = nll_matrix(subseq.rows, models)
    labels = model.assignment.labels
    loglik = -float(costs.nll[np.arange(subseq.T), labels].sum())
    q = sum(_count_parameters(c.theta) for c in model.clusters)
    return -2.0 * loglik + q * math.log(subseq.T)


def config_to_dict(cfg: TiccConfig) -> dict:
    lam = cfg.lam
    return {
        "K": cfg.K,
        "w": cfg.w,
        "lam": lam.tolist() if isinstance(lam, np.ndarray) else float(lam),
        "beta": float(cfg.beta),
        "max_em_iters": cfg.max_em_iters,
        "seed": cfg.seed,
        "admm": {"rho": cfg.admm.rho, "eps_abs": cfg.admm.eps_abs,
                 "eps_rel": cfg.admm.eps_rel, "max_iter": cfg.admm.max_iter},
        "min_cluster_size": cfg.effective_min_cluster_size,
        "init": cfg.init,
        "threads": cfg.threads,
        "debug_trace": cfg.debug_trace,
    }


def config_from_dict(doc: dict) -> TiccConfig:
    lam = doc["lam"]
    return TiccConfig(
        K=doc["K"],
        w=doc["w"],
        lam=np.asarray(lam) if isinstance(lam, list) else lam,
        beta=doc["beta"],
        max_em_iters=doc["max_em_iters"],
        seed=doc["seed"],
        admm=glasso.AdmmConfig(**doc["admm"]),
        min_cluster_size=doc["min_cluster_size"],
        init=doc["init"],
        threads=doc["threads"],
        debug_trace=doc.get("debug_trace", False),
    )


def model_to_dict(model: TiccModel) -> dict:
    return {
        "config": config_to_dict(model.config),
        "n": model.n,
        "clusters": [
            {"mu": c.mu.tolist(), "theta": toeplitz.to_dict(c.theta),
             "count": c.count}
            for c in model.clusters
        ],
        "assignment": model.assignment.labels.tolist(),
        "objective_trace": model.objective_trace,
        "converged": model.converged,
        "em_iters_run": model.em_iters_run,
        "glasso_converged": model.glasso_converged,
    }


def model_from_dict(doc: dict) -> TiccModel:
    clusters = [
        ClusterModel(theta=toeplitz.from_dict(c["theta"]),
                     mu=np.asarray(c["mu"], dtype=float), count=c["count"])
        for c in doc["clusters"]
    ]
    return TiccModel(
        clusters=clusters,
        assignment=AssignmentPath(np.asarray(doc["assignment"], dtype=int)),
        em_iters_run=doc["em_iters_run"],
        converged=doc["converged"],
        objective_trace=list(doc["objective_trace"]),
        config=config_from_dict(doc["config"]),
        n=doc["n"],
        glasso_converged=doc.get("glasso_converged", True),
    )


def model_to_json(model: TiccModel) -> str:
    return json.dumps(model_to_dict(model))


def model_from_json(text: str) -> TiccModel:
    return model_from_dict(json.loads(text))
