"""Distance-covariance statistics over sample blocks.

A block is an (n, d) array. Distances within a block use the sum of
per-coordinate absolute differences, so every squared distance
covariance expands bilinearly into 1-D coordinate-pair terms, each of
which the kernel evaluates in O(n log n) (compiled backend) or O(n^2)
(numpy fallback). For 1-D blocks this is exactly the standard Euclidean
distance covariance.

All quantities are V-statistics:

    dcov2(x, y) = Sab/n^2 - 2*S3/n^3 + Sa*Sb/n^4
"""

import numpy as np

try:
    from ._fastdcov import pair_sum as _pair_sum

    BACKEND = "compiled"
except ImportError:  # pragma: no cover - depends on the build environment
    from ._dcov_py import pair_sum as _pair_sum

    BACKEND = "python"


class ColumnPre:
    """Per-column sorted values, row sums, and ranks, reusable across
    permutations of the pairing."""

    __slots__ = ("values_by_obs", "xs", "idx", "rxs", "rank_by_obs",
                 "rowsum_by_obs", "total")

    def __init__(self, col: np.ndarray):
        col = np.ascontiguousarray(col, dtype=np.float64)
        n = col.shape[0]
        idx = np.argsort(col, kind="stable").astype(np.int64)
        xs = np.ascontiguousarray(col[idx])
        pref = np.cumsum(xs)
        t = np.arange(n, dtype=np.float64)
        rxs = xs * (2.0 * t + 2.0 - n) + pref[-1] - 2.0 * pref
        rank_by_obs = np.empty(n, dtype=np.int64)
        rank_by_obs[idx] = np.arange(n, dtype=np.int64)
        rowsum_by_obs = np.empty(n, dtype=np.float64)
        rowsum_by_obs[idx] = rxs
        self.values_by_obs = col
        self.xs = xs
        self.idx = idx
        self.rxs = np.ascontiguousarray(rxs)
        self.rank_by_obs = rank_by_obs
        self.rowsum_by_obs = rowsum_by_obs
        self.total = float(rxs.sum())


class BlockPre:
    """Precomputed per-column structures for an (n, d) block."""

    def __init__(self, rows: np.ndarray):
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows[:, None]
        self.n = rows.shape[0]
        self.cols = [ColumnPre(rows[:, j]) for j in range(rows.shape[1])]


def _pair_dcov2(cx: ColumnPre, cy: ColumnPre, order: np.ndarray, tree) -> float:
    n = cx.xs.shape[0]
    sab, s3 = _pair_sum(
        cx.xs,
        cx.rxs,
        order,
        cy.values_by_obs,
        cy.rank_by_obs,
        cy.rowsum_by_obs,
        tree,
    )
    return sab / n**2 - 2.0 * s3 / n**3 + cx.total * cy.total / n**4


def _scratch(n: int) -> np.ndarray:
    return np.empty(4 * (n + 1), dtype=np.float64)


def dcov_sq(a: BlockPre, b: BlockPre) -> float:
    """Squared distance covariance between two blocks (identity pairing)."""
    tree = _scratch(a.n)
    total = 0.0
    for cx in a.cols:
        for cy in b.cols:
            total += _pair_dcov2(cx, cy, cx.idx, tree)
    return total


def dvar(a: BlockPre) -> float:
    """Squared distance variance of a block."""
    tree = _scratch(a.n)
    d = len(a.cols)
    total = 0.0
    for p in range(d):
        for q in range(p, d):
            term = _pair_dcov2(a.cols[p], a.cols[q], a.cols[p].idx, tree)
            total += term if p == q else 2.0 * term
    return total


def perm_stats(a: BlockPre, b: BlockPre, perms: np.ndarray) -> np.ndarray:
    """dcov_sq of (a rows permuted, b) for each permutation.

    perms has shape (m, n); row p pairs a's observation perms[p][i] with
    b's observation i.
    """
    perms = np.asarray(perms, dtype=np.int64)
    m = perms.shape[0]
    n = a.n
    tree = _scratch(n)
    out = np.empty(m, dtype=np.float64)
    inv = np.empty(n, dtype=np.int64)
    arange = np.arange(n, dtype=np.int64)
    for p in range(m):
        inv[perms[p]] = arange
        total = 0.0
        for cx in a.cols:
            order = np.ascontiguousarray(inv[cx.idx])
            for cy in b.cols:
                total += _pair_dcov2(cx, cy, order, tree)
        out[p] = total
    return out
