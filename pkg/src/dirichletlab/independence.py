"""Sample-based independence testing for parameter blocks.

Distance correlation with permutation p-values. Simplex-valued blocks
are embedded by dropping their last coordinate first, removing the
exact linear constraint that would otherwise register as dependence.
"""

from dataclasses import dataclass

import numpy as np

from ._dcov import BACKEND, BlockPre, dcov_sq, dvar, perm_stats
from .dirichlet import sample_many
from .exceptions import DegenerateStatisticError, DomainError
from .reparam import Axis, TableDirichletParams

__all__ = [
    "BACKEND",
    "SampleBlock",
    "simplex_block",
    "distance_correlation",
    "permutation_pvalue",
    "mutual_independence_report",
    "MutualIndependenceReport",
    "PairResult",
    "decomposition_blocks",
]

MIN_SAMPLES = 100
MIN_PERMUTATIONS = 200


@dataclass(frozen=True)
class SampleBlock:
    """An (n_samples, d) block of jointly sampled coordinates."""

    rows: np.ndarray
    label: str

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows[:, None]
        if rows.ndim != 2:
            raise DomainError("a sample block must be a 2-d array")
        if rows.shape[0] < MIN_SAMPLES:
            raise DomainError(f"need at least {MIN_SAMPLES} samples")
        if not np.all(np.isfinite(rows)):
            raise DomainError("sample blocks must be finite")
        rows = rows.copy()
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n_samples(self) -> int:
        return int(self.rows.shape[0])


def simplex_block(samples: np.ndarray, label: str) -> SampleBlock:
    """Embed simplex-valued samples by dropping the last coordinate."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[1] < 2:
        raise DomainError("expected (n, l) simplex samples with l >= 2")
    return SampleBlock(rows=samples[:, :-1], label=label)


def _pre(block: SampleBlock) -> BlockPre:
    return BlockPre(block.rows)


def _dcor_from_parts(cov2: float, var_a: float, var_b: float, labels) -> float:
    if var_a <= 0.0 or var_b <= 0.0:
        which = labels[0] if var_a <= 0.0 else labels[1]
        raise DegenerateStatisticError(f"block {which!r} is constant")
    return float(np.sqrt(max(cov2, 0.0) / np.sqrt(var_a * var_b)))


def distance_correlation(a: SampleBlock, b: SampleBlock) -> float:
    """Distance correlation in [0, 1]; zero iff the empirical distance
    covariance vanishes."""
    if a.n_samples != b.n_samples:
        raise DomainError("blocks must have equal sample counts")
    pa, pb = _pre(a), _pre(b)
    return _dcor_from_parts(
        dcov_sq(pa, pb), dvar(pa), dvar(pb), (a.label, b.label)
    )


def _derive_permutations(
    rng: np.random.Generator, n_perm: int, n: int
) -> np.ndarray:
    # counter-style child seeds: evaluation order cannot change results
    seeds = rng.integers(0, 2**63 - 1, size=n_perm, dtype=np.int64)
    perms = np.empty((n_perm, n), dtype=np.int64)
    for i, s in enumerate(seeds):
        perms[i] = np.random.default_rng(int(s)).permutation(n)
    return perms


def permutation_pvalue(
    a: SampleBlock,
    b: SampleBlock,
    n_perm: int,
    rng: np.random.Generator,
) -> float:
    """Permutation p-value of the distance-correlation test.

    Fraction of permuted statistics at least as large as the observed
    one, with add-one smoothing; a valid p-value under independence.
    """
    p, _ = _permutation_test(a, b, n_perm, rng)
    return p


def _permutation_test(a, b, n_perm, rng):
    if n_perm < MIN_PERMUTATIONS:
        raise DomainError(f"need at least {MIN_PERMUTATIONS} permutations")
    if a.n_samples != b.n_samples:
        raise DomainError("blocks must have equal sample counts")
    pa, pb = _pre(a), _pre(b)
    var_a, var_b = dvar(pa), dvar(pb)
    observed_cov2 = dcov_sq(pa, pb)
    stat = _dcor_from_parts(observed_cov2, var_a, var_b, (a.label, b.label))
    perms = _derive_permutations(rng, n_perm, a.n_samples)
    # dvar is invariant under the pairing permutation, so comparing the
    # squared distance covariances is equivalent to comparing dcor values
    stats = perm_stats(pa, pb, perms)
    exceed = int(np.count_nonzero(stats >= observed_cov2))
    return (1.0 + exceed) / (n_perm + 1.0), stat


@dataclass(frozen=True)
class PairResult:
    label_a: str
    label_b: str
    kind: str  # "pairwise" or "vs-rest"
    statistic: float
    p_value: float


@dataclass(frozen=True)
class MutualIndependenceReport:
    results: tuple
    alpha: float
    per_test_level: float

    @property
    def consistent(self) -> bool:
        """True when no test rejects (p <= level) at the
        Bonferroni-corrected level."""
        return all(r.p_value > self.per_test_level for r in self.results)

    @property
    def min_p_value(self) -> float:
        return min(r.p_value for r in self.results)


def mutual_independence_report(
    blocks,
    n_perm: int,
    rng: np.random.Generator,
    alpha: float = 0.01,
) -> MutualIndependenceReport:
    """All pairwise tests plus each-block-vs-rest tests.

    With exactly two blocks the vs-rest tests duplicate the single
    pairwise test and are omitted.
    """
    blocks = list(blocks)
    if len(blocks) < 2:
        raise DomainError("need at least two blocks")
    results = []
    for i in range(len(blocks)):
        for j in range(i + 1, len(blocks)):
            p, stat = _permutation_test(blocks[i], blocks[j], n_perm, rng)
            results.append(
                PairResult(blocks[i].label, blocks[j].label, "pairwise", stat, p)
            )
    if len(blocks) > 2:
        for i, blk in enumerate(blocks):
            rest_rows = np.hstack([b.rows for j, b in enumerate(blocks) if j != i])
            rest = SampleBlock(rows=rest_rows, label=f"rest-of-{blk.label}")
            p, stat = _permutation_test(blk, rest, n_perm, rng)
            results.append(
                PairResult(blk.label, rest.label, "vs-rest", stat, p)
            )
    per_test = alpha / len(results)
    return MutualIndependenceReport(
        results=tuple(results), alpha=alpha, per_test_level=per_test
    )


def decomposition_blocks(
    params: TableDirichletParams,
    n_samples: int,
    rng: np.random.Generator,
    axis: Axis = Axis.ROWS,
) -> list:
    """Sample joint-Dirichlet tables and split them into the marginal
    block and one conditional block per cell, ready for testing."""
    from .dirichlet import DirichletParams

    a = params.alphas if axis is Axis.ROWS else params.alphas.T
    k = a.shape[0]
    flat = sample_many(DirichletParams(a.ravel()), rng, n_samples)
    tables = flat.reshape(n_samples, *a.shape)
    marg = tables.sum(axis=2)
    blocks = [simplex_block(marg, "marginal")]
    for i in range(k):
        cond = tables[:, i, :] / marg[:, i][:, None]
        blocks.append(simplex_block(cond, f"conditional-{i + 1}"))
    return blocks
