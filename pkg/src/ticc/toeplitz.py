"""Symmetric block-Toeplitz matrices and occurrence-index bookkeeping.

An n*w x n*w symmetric block-Toeplitz matrix is fully described by w
sub-blocks A(0), ..., A(w-1), each n x n, with A(0) symmetric. Block row r,
block column c of the assembled matrix holds A(c-r) when c >= r and
A(r-c)^T when r > c, so every entry of every block is repeated at several
positions of the assembled matrix. The occurrence sets enumerate exactly
those position groups; the ADMM consensus update solves one scalar problem
per group.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

_A0_SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class BlockToeplitzMatrix:
    """Blocks A(0)..A(w-1) of a symmetric block-Toeplitz matrix."""

    blocks: tuple

    def __post_init__(self):
        blocks = [np.array(b, dtype=float) for b in self.blocks]
        if not blocks:
            raise ValueError("need at least one block")
        n = blocks[0].shape[0]
        for m, b in enumerate(blocks):
            if b.shape != (n, n):
                raise ValueError(f"block {m} has shape {b.shape}, expected ({n}, {n})")
        a0 = blocks[0]
        scale = max(1.0, float(np.max(np.abs(a0))))
        if np.max(np.abs(a0 - a0.T)) > _A0_SYMMETRY_TOL * scale:
            raise ValueError("leading block must be symmetric")
        blocks[0] = (a0 + a0.T) / 2.0
        for b in blocks:
            b.setflags(write=False)
        object.__setattr__(self, "blocks", tuple(blocks))

    @property
    def n(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def w(self) -> int:
        return len(self.blocks)

    @property
    def nw(self) -> int:
        return self.n * self.w


@dataclass(frozen=True)
class OccurrenceSet:
    """All assembled-matrix positions holding entry (i, j) of block A(m).

    The count R is 2*(w-m) for every entry except the diagonal entries of
    A(0), which occur w times. For m = 0 and i != j the positions include
    both the (i, j) and the mirrored (j, i) placements.
    """

    m: int
    i: int
    j: int
    positions: tuple

    @property
    def R(self) -> int:
        return len(self.positions)


def assemble(btm: BlockToeplitzMatrix) -> np.ndarray:
    """Expand blocks into the dense n*w x n*w symmetric matrix."""
    n, w = btm.n, btm.w
    out = np.empty((n * w, n * w))
    for r in range(w):
        for c in range(w):
            block = btm.blocks[c - r] if c >= r else btm.blocks[r - c].T
            out[r * n:(r + 1) * n, c * n:(c + 1) * n] = block
    return out


def occurrence_sets(n: int, w: int) -> list[OccurrenceSet]:
    """Enumerate the (w-1)*n^2 + n*(n+1)/2 occurrence sets for shape (n, w).

    Order is deterministic: m ascending, then row-major (i, j); for m = 0
    only i <= j is listed since A(0) is symmetric. The position lists
    partition the full n*w x n*w index grid.
    """
    if n < 1 or w < 1:
        raise ValueError(f"need n >= 1 and w >= 1, got n={n}, w={w}")
    sets = []
    for i in range(n):
        for j in range(i, n):
            positions = []
            for d in range(w):
                positions.append((d * n + i, d * n + j))
                if i != j:
                    positions.append((d * n + j, d * n + i))
            sets.append(OccurrenceSet(m=0, i=i, j=j, positions=tuple(positions)))
    for m in range(1, w):
        for i in range(n):
            for j in range(n):
                positions = []
                for r in range(w - m):
                    # A(m) sits at block (r, r+m); its transpose at (r+m, r)
                    positions.append((r * n + i, (r + m) * n + j))
                    positions.append(((r + m) * n + j, r * n + i))
                sets.append(OccurrenceSet(m=m, i=i, j=j, positions=tuple(positions)))
    return sets


@dataclass(frozen=True)
class OccurrenceIndex:
    """Gather/scatter arrays over the occurrence sets of one (n, w) shape.

    ``flat`` concatenates the flattened assembled-matrix positions of every
    set in order; ``set_id`` labels each position with its set; ``counts``
    holds R per set. Built once per shape and shared read-only.
    """

    n: int
    w: int
    sets: tuple
    flat: np.ndarray
    set_id: np.ndarray
    counts: np.ndarray
    first_flat: np.ndarray

    @classmethod
    def from_sets(cls, n: int, w: int, sets) -> "OccurrenceIndex":
        sets = tuple(sets)
        nw = n * w
        flat = []
        set_id = []
        counts = []
        first_flat = []
        for s_idx, occ in enumerate(sets):
            first_flat.append(occ.positions[0][0] * nw + occ.positions[0][1])
            for (r, c) in occ.positions:
                flat.append(r * nw + c)
                set_id.append(s_idx)
            counts.append(occ.R)
        flat = np.asarray(flat, dtype=np.intp)
        set_id = np.asarray(set_id, dtype=np.intp)
        counts = np.asarray(counts, dtype=float)
        first_flat = np.asarray(first_flat, dtype=np.intp)
        for a in (flat, set_id, counts, first_flat):
            a.setflags(write=False)
        return cls(n=n, w=w, sets=sets, flat=flat, set_id=set_id,
                   counts=counts, first_flat=first_flat)

    @classmethod
    def for_shape(cls, n: int, w: int) -> "OccurrenceIndex":
        return cls.from_sets(n, w, occurrence_sets(n, w))

    @property
    def num_sets(self) -> int:
        return len(self.sets)

    def set_sums(self, matrix: np.ndarray) -> np.ndarray:
        """Sum ``matrix`` over each occurrence set."""
        return np.bincount(self.set_id, weights=matrix.ravel()[self.flat],
                           minlength=self.num_sets)

    def set_means(self, matrix: np.ndarray) -> np.ndarray:
        return self.set_sums(matrix) / self.counts

    def scatter(self, values: np.ndarray) -> np.ndarray:
        """Build the dense matrix whose occurrence sets hold ``values``."""
        out = np.empty(self.n * self.w * self.n * self.w)
        out[self.flat] = values[self.set_id]
        return out.reshape(self.n * self.w, self.n * self.w)

    def to_blocks(self, values: np.ndarray) -> BlockToeplitzMatrix:
        """Build a BlockToeplitzMatrix from one value per occurrence set."""
        blocks = [np.zeros((self.n, self.n)) for _ in range(self.w)]
        for occ, v in zip(self.sets, values):
            blocks[occ.m][occ.i, occ.j] = v
            if occ.m == 0:
                blocks[occ.m][occ.j, occ.i] = v
        return BlockToeplitzMatrix(tuple(blocks))


def nearest_toeplitz(M: np.ndarray, n: int, w: int,
                     occ: OccurrenceIndex | None = None) -> BlockToeplitzMatrix:
    """Frobenius-norm projection of a dense matrix onto the block-Toeplitz set.

    Each block entry is the average of M over its occurrence set, which is
    the closed-form projection. A matrix that is already symmetric block
    Toeplitz is a fixed point.
    """
    M = np.asarray(M, dtype=float)
    if M.shape != (n * w, n * w):
        raise ValueError(f"expected shape {(n * w, n * w)}, got {M.shape}")
    if occ is None:
        occ = OccurrenceIndex.for_shape(n, w)
    return occ.to_blocks(occ.set_means(M))


SUPPORT_REL = 0.2


def support_threshold(btm: BlockToeplitzMatrix, rel: float = SUPPORT_REL) -> float:
    """Magnitude below which an entry counts as structurally zero.

    Relative to the largest off-diagonal magnitude of the assembled matrix,
    so the support set is invariant to positive rescaling. Shared by the
    edge-recovery metric and the BIC parameter count.
    """
    dense = assemble(btm)
    off = dense[~np.eye(dense.shape[0], dtype=bool)]
    return rel * float(np.max(np.abs(off))) if off.size else 0.0


def to_dict(btm: BlockToeplitzMatrix) -> dict:
    return {"n": btm.n, "w": btm.w, "blocks": [b.tolist() for b in btm.blocks]}


def from_dict(doc: dict) -> BlockToeplitzMatrix:
    btm = BlockToeplitzMatrix(tuple(np.asarray(b, dtype=float) for b in doc["blocks"]))
    if btm.n != doc["n"] or btm.w != doc["w"]:
        raise ValueError(
            f"inconsistent document: blocks give (n={btm.n}, w={btm.w}), "
            f"header says (n={doc['n']}, w={doc['w']})"
        )
    return btm


def to_json(btm: BlockToeplitzMatrix) -> str:
    return json.dumps(to_dict(btm))


def from_json(text: str) -> BlockToeplitzMatrix:
    return from_dict(json.loads(text))
