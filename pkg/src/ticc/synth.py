"""Ground-truth synthetic data with known block-Toeplitz precision matrices.

Each cluster's precision matrix starts from independent Erdos-Renyi edge
draws per sub-block (20% by default), gets random weights bounded away
from zero, and is shifted along the diagonal until positive definite. The
series is then drawn one observation at a time from the conditional
Gaussian of the newest observation given the previous w-1, under the
current segment's cluster; the conditioning history deliberately carries
across segment boundaries, so early samples of a new segment still depend
on data generated by the previous cluster. All cluster means are zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .timeseries import TimeSeries
from .toeplitz import BlockToeplitzMatrix, assemble

PRESET_SEQUENCES = {
    "1,2,1": (1, 2, 1),
    "1,2,3,2,1": (1, 2, 3, 2, 1),
    "1,2,3,4,1,2,3,4": (1, 2, 3, 4, 1, 2, 3, 4),
    "1,2,2,1,3,3,3,1": (1, 2, 2, 1, 3, 3, 3, 1),
}

MIN_EIGENVALUE_SHIFT = 0.1


@dataclass(frozen=True)
class GroundTruth:
    """True cluster precisions, labels and the generated series."""

    thetas: tuple
    labels: np.ndarray
    series: TimeSeries
    segment_spec: tuple

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "segment_spec",
                           tuple((int(c), int(m)) for c, m in self.segment_spec))
        if labels.size != self.series.T:
            raise ValueError("labels length must match series length")

    @property
    def K(self) -> int:
        return len(self.thetas)


def random_toeplitz_precision(n: int, w: int, p_edge: float, seed) -> BlockToeplitzMatrix:
    """Draw one ground-truth block-Toeplitz precision matrix.

    Every entry of every sub-block is selected independently with
    probability ``p_edge`` (the leading block is drawn on its upper
    triangle and mirrored). Selected entries get a weight uniform on
    [-1, -0.25] u [0.25, 1], keeping true edges bounded away from zero so
    support recovery is well posed. The assembled matrix is shifted by
    (0.1 + |c|) I, c its smallest eigenvalue, which forces the smallest
    eigenvalue of the result to be at least 0.1.
    """
    if not 0.0 < p_edge < 1.0:
        raise ValueError(f"p_edge must lie in (0, 1), got {p_edge}")
    rng = np.random.default_rng(seed)
    blocks = []
    for m in range(w):
        mask = rng.random((n, n)) < p_edge
        magnitude = rng.uniform(0.25, 1.0, size=(n, n))
        sign = np.where(rng.random((n, n)) < 0.5, -1.0, 1.0)
        weights = np.where(mask, sign * magnitude, 0.0)
        if m == 0:
            upper = np.triu(weights)
            weights = upper + np.triu(upper, 1).T
        blocks.append(weights)
    G = assemble(BlockToeplitzMatrix(tuple(blocks)))
    c = float(np.linalg.eigvalsh(G)[0])
    blocks[0] = blocks[0] + (MIN_EIGENVALUE_SHIFT + abs(c)) * np.eye(n)
    return BlockToeplitzMatrix(tuple(blocks))


class _ConditionalSampler:
    """Per-cluster conditional Gaussian of the newest observation.

    Precomputes, for every history length h in 0..w-1, the regression of
    the last time slice on the previous h slices under the leading
    (h+1)n x (h+1)n principal submatrix of Sigma = Theta^{-1}, plus the
    Cholesky factor of the conditional covariance.
    """

    def __init__(self, theta: BlockToeplitzMatrix):
        sigma = np.linalg.inv(assemble(theta))
        sigma = (sigma + sigma.T) / 2.0
        n, w = theta.n, theta.w
        self.n = n
        self.w = w
        self.regressions = []
        self.chols = []
        for h in range(w):
            sub = sigma[:(h + 1) * n, :(h + 1) * n]
            past = sub[:h * n, :h * n]
            cross = sub[h * n:, :h * n]
            present = sub[h * n:, h * n:]
            if h == 0:
                reg = np.zeros((n, 0))
                cond = present
            else:
                reg = cross @ np.linalg.inv(past)
                cond = present - reg @ cross.T
            cond = (cond + cond.T) / 2.0
            self.regressions.append(reg)
            self.chols.append(np.linalg.cholesky(cond))

    def draw(self, history: np.ndarray, rng) -> np.ndarray:
        """history: (h, n) array of the h most recent observations, oldest first."""
        h = history.shape[0]
        mean = self.regressions[h] @ history.ravel()
        return mean + self.chols[h] @ rng.standard_normal(self.n)


def generate_sequence(segment_spec, thetas, seed) -> GroundTruth:
    """Generate a labeled series from a temporal sequence of cluster segments.

    Parameters
    ----------
    segment_spec : sequence of (cluster_id, length)
        Ordered segments; cluster ids index into ``thetas``.
    thetas : sequence of BlockToeplitzMatrix
        One precision matrix per cluster, all with the same (n, w).
    seed : int or numpy SeedSequence
    """
    thetas = tuple(thetas)
    segment_spec = tuple((int(c), int(m)) for c, m in segment_spec)
    if not segment_spec:
        raise ValueError("segment_spec must be nonempty")
    for cid, length in segment_spec:
        if length < 1:
            raise ValueError(f"segment lengths must be >= 1, got {length}")
        if not 0 <= cid < len(thetas):
            raise ValueError(f"segment cluster id {cid} has no precision matrix")
    n, w = thetas[0].n, thetas[0].w
    for th in thetas:
        if (th.n, th.w) != (n, w):
            raise ValueError("all cluster precisions must share the same (n, w)")

    labels = np.concatenate([np.full(m, cid, dtype=int) for cid, m in segment_spec])
    T = labels.size
    samplers = [_ConditionalSampler(th) for th in thetas]
    rng = np.random.default_rng(seed)

    data = np.empty((T, n))
    for t in range(T):
        h = min(t, w - 1)
        data[t] = samplers[labels[t]].draw(data[t - h:t], rng)
    return GroundTruth(thetas=thetas, labels=labels,
                       series=TimeSeries(data), segment_spec=segment_spec)


def make_preset(name: str, n: int = 5, w: int = 5, p_edge: float = 0.2,
                seed: int = 0, samples_per_segment: int | None = None) -> GroundTruth:
    """Build one of the named benchmark temporal sequences.

    ``samples_per_segment`` defaults to 100*K, K the number of distinct
    clusters in the sequence. All randomness (cluster structure and the
    series itself) derives from ``seed`` through spawned substreams.
    """
    if name not in PRESET_SEQUENCES:
        raise ValueError(
            f"unknown preset {name!r}; valid presets: {', '.join(PRESET_SEQUENCES)}")
    order = PRESET_SEQUENCES[name]
    K = max(order)
    if samples_per_segment is None:
        samples_per_segment = 100 * K
    if samples_per_segment < 1:
        raise ValueError("samples_per_segment must be >= 1")
    children = np.random.SeedSequence(seed).spawn(K + 1)
    thetas = [random_toeplitz_precision(n, w, p_edge, children[k]) for k in range(K)]
    spec = [(cid - 1, samples_per_segment) for cid in order]
    return generate_sequence(spec, thetas, children[K])
