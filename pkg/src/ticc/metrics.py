"""Scoring of clustering output against ground truth.

Estimated cluster labels are arbitrary, so scores are computed after an
optimal one-to-one matching of estimated to true clusters (Hungarian
assignment maximizing the summed per-cluster F1). Structure recovery is
scored on the edge supports of the matched precision matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .assign import AssignmentPath
from .toeplitz import BlockToeplitzMatrix, support_threshold


@dataclass(frozen=True)
class MatchResult:
    """Label matching and the F1 scores computed under it.

    ``permutation[e]`` is the true cluster matched to estimated cluster e.
    ``per_cluster_f1`` is indexed by true cluster id; entries are NaN for
    clusters absent from both labelings (excluded from the macro average).
    """

    permutation: tuple
    per_cluster_f1: tuple
    macro_f1: float
    micro_f1: float


def _as_labels(x) -> np.ndarray:
    if isinstance(x, AssignmentPath):
        return x.labels
    return np.asarray(x, dtype=int)


def macro_f1(pred, truth, K: int) -> MatchResult:
    """Match estimated to true clusters and score per-cluster F1.

    Per-cluster F1 is the harmonic mean of precision and recall of the
    matched pair; the macro score averages over clusters, the micro score
    weights by membership (for a bijective matching over a common point
    set it equals plain accuracy).
    """
    pred = _as_labels(pred)
    truth = _as_labels(truth)
    if pred.size != truth.size:
        raise ValueError(f"length mismatch: pred {pred.size}, truth {truth.size}")
    if pred.min() < 0 or pred.max() >= K or truth.min() < 0 or truth.max() >= K:
        raise ValueError(f"labels must lie in 0..{K - 1}")

    counts = np.zeros((K, K))
    np.add.at(counts, (pred, truth), 1.0)
    pred_sizes = counts.sum(axis=1)
    true_sizes = counts.sum(axis=0)
    denom = pred_sizes[:, None] + true_sizes[None, :]
    with np.errstate(invalid="ignore"):
        f1 = np.where(denom > 0, 2.0 * counts / np.where(denom > 0, denom, 1.0), 0.0)

    rows, cols = linear_sum_assignment(f1, maximize=True)
    perm = np.empty(K, dtype=int)
    perm[rows] = cols

    per_true = np.full(K, np.nan)
    correct = 0.0
    for e in range(K):
        t = perm[e]
        if pred_sizes[e] == 0 and true_sizes[t] == 0:
            continue  # absent from both labelings
        per_true[t] = f1[e, t]
        correct += counts[e, t]
    macro = float(np.nanmean(per_true))
    micro = float(correct / pred.size)
    return MatchResult(
        permutation=tuple(int(v) for v in perm),
        per_cluster_f1=tuple(float(v) for v in per_true),
        macro_f1=macro,
        micro_f1=micro,
    )


def edge_set(btm: BlockToeplitzMatrix) -> set:
    """Support of the unique block entries, excluding the A(0) diagonal.

    Edges are (m, i, j) tuples, with i < j for m = 0; an entry is an edge
    when its magnitude exceeds the relative support threshold of the
    matrix, so the set is invariant to positive rescaling.
    """
    thr = support_threshold(btm)
    edges = set()
    a0 = btm.blocks[0]
    for i in range(btm.n):
        for j in range(i + 1, btm.n):
            if abs(a0[i, j]) > thr:
                edges.add((0, i, j))
    for m in range(1, btm.w):
        b = btm.blocks[m]
        for i in range(btm.n):
            for j in range(btm.n):
                if abs(b[i, j]) > thr:
                    edges.add((m, i, j))
    return edges


def network_f1(estimated, truth, permutation) -> float:
    """Macro-averaged F1 of recovered vs true edge supports.

    ``permutation[e]`` aligns estimated cluster e with its true cluster.
    A matched pair where both supports are empty counts as perfect.
    """
    estimated = list(estimated)
    truth = list(truth)
    if len(estimated) != len(truth):
        raise ValueError(
            f"cluster count mismatch: {len(estimated)} estimated, {len(truth)} true")
    scores = []
    for e, btm in enumerate(estimated):
        true_btm = truth[permutation[e]]
        if (btm.n, btm.w) != (true_btm.n, true_btm.w):
            raise ValueError(
                f"shape mismatch for matched pair {e} -> {permutation[e]}: "
                f"({btm.n}, {btm.w}) vs ({true_btm.n}, {true_btm.w})")
        est_edges = edge_set(btm)
        true_edges = edge_set(true_btm)
        if not est_edges and not true_edges:
            scores.append(1.0)
            continue
        tp = len(est_edges & true_edges)
        denom = len(est_edges) + len(true_edges)
        scores.append(2.0 * tp / denom)
    return float(np.mean(scores))


def scores_to_dict(match: MatchResult, net_f1: float | None = None) -> dict:
    doc = {
        "macro_f1": match.macro_f1,
        "micro_f1": match.micro_f1,
        "per_cluster_f1": [None if np.isnan(v) else v for v in match.per_cluster_f1],
        "matching": list(match.permutation),
    }
    if net_f1 is not None:
        doc["network_f1"] = net_f1
    return doc
