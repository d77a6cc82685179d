import numpy as np
import pytest

from dirichletlab import _dcov, _dcov_py
from dirichletlab.exceptions import DegenerateStatisticError, DomainError
from dirichletlab.independence import (
    BACKEND,
    SampleBlock,
    decomposition_blocks,
    distance_correlation,
    mutual_independence_report,
    permutation_pvalue,
    simplex_block,
)
from dirichletlab.reparam import TableDirichletParams


def blocks_from(rng, n=2000):
    a = SampleBlock(rng.normal(size=n), "a")
    b = SampleBlock(rng.normal(size=n), "b")
    return a, b


class TestSampleBlock:
    def test_requires_min_samples(self):
        with pytest.raises(DomainError):
            SampleBlock(np.zeros(50), "tiny")

    def test_simplex_embedding_drops_last_column(self):
        rows = np.random.default_rng(0).dirichlet(np.ones(3), size=200)
        blk = simplex_block(rows, "s")
        assert blk.rows.shape == (200, 2)


class TestDistanceCorrelation:
    def test_copy_is_fully_dependent(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=1000)
        assert distance_correlation(
            SampleBlock(x, "a"), SampleBlock(x.copy(), "b")
        ) == pytest.approx(1.0, abs=1e-12)

    def test_independent_uniforms_are_small(self):
        rng = np.random.default_rng(2)
        a = SampleBlock(rng.uniform(size=5000), "a")
        b = SampleBlock(rng.uniform(size=5000), "b")
        assert distance_correlation(a, b) < 0.05

    def test_permuted_copy_looks_independent(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=5000)
        shuffled = rng.permutation(x)
        assert distance_correlation(
            SampleBlock(x, "a"), SampleBlock(shuffled, "b")
        ) < 0.05

    def test_constant_block_is_degenerate(self):
        rng = np.random.default_rng(4)
        with pytest.raises(DegenerateStatisticError, match="flat"):
            distance_correlation(
                SampleBlock(np.ones(500), "flat"),
                SampleBlock(rng.normal(size=500), "b"),
            )

    def test_bounded_by_one_multidim(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(800, 3))
        y = x @ rng.normal(size=(3, 2)) + 0.1 * rng.normal(size=(800, 2))
        val = distance_correlation(SampleBlock(x, "a"), SampleBlock(y, "b"))
        assert 0.5 < val <= 1.0


class TestPermutationPvalue:
    def test_minimum_permutations_enforced(self):
        rng = np.random.default_rng(6)
        a, b = blocks_from(rng, 200)
        with pytest.raises(DomainError):
            permutation_pvalue(a, b, 50, rng)

    def test_self_pairing_attains_minimum(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=500)
        p = permutation_pvalue(
            SampleBlock(x, "a"), SampleBlock(x.copy(), "b"), 399,
            np.random.default_rng(0),
        )
        assert p == pytest.approx(1.0 / 400.0)

    def test_weak_dependence_rejected(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=5000)
        y = x + rng.normal(size=5000)
        p = permutation_pvalue(
            SampleBlock(x, "a"), SampleBlock(y, "b"), 299,
            np.random.default_rng(1),
        )
        assert p < 0.01

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(9)
        a, b = blocks_from(rng, 600)
        p1 = permutation_pvalue(a, b, 249, np.random.default_rng(5))
        p2 = permutation_pvalue(a, b, 249, np.random.default_rng(5))
        assert p1 == p2

    def test_calibration_under_independence(self):
        # exact validity: at alpha = 0.05 with 239 permutations the
        # rejection probability is exactly 12/240; over 400 runs the
        # realized rate must sit within [alpha/2, 2 alpha]
        master = np.random.default_rng(10)
        rejections = 0
        runs = 400
        for _ in range(runs):
            x = master.normal(size=120)
            y = master.normal(size=120)
            p = permutation_pvalue(
                SampleBlock(x, "a"), SampleBlock(y, "b"), 239, master
            )
            rejections += p <= 0.05
        assert 0.025 <= rejections / runs <= 0.10


class TestMutualIndependenceReport:
    def test_dirichlet_blocks_consistent(self):
        params = TableDirichletParams(np.array([[1.5, 0.7], [2.0, 1.1]]))
        blocks = decomposition_blocks(params, 4000, np.random.default_rng(11))
        report = mutual_independence_report(blocks, 599, np.random.default_rng(12))
        assert report.consistent
        assert len(report.results) == 6  # 3 pairwise + 3 vs-rest
        kinds = {r.kind for r in report.results}
        assert kinds == {"pairwise", "vs-rest"}

    def test_two_blocks_deduplicate_vs_rest(self):
        rng = np.random.default_rng(13)
        a, b = blocks_from(rng, 500)
        report = mutual_independence_report([a, b], 299, rng)
        assert len(report.results) == 1

    def test_mixture_blocks_rejected(self):
        from dirichletlab.scoring import MixturePrior, sample_mixture_tables

        mix = MixturePrior(
            weights=np.array([0.5, 0.5]),
            components=(
                TableDirichletParams(np.array([[10.0, 1.0], [1.0, 1.0]])),
                TableDirichletParams(np.array([[1.0, 1.0], [1.0, 10.0]])),
            ),
        )
        tables = sample_mixture_tables(mix, np.random.default_rng(14), 4000)
        marg = tables.sum(axis=2)
        blocks = [simplex_block(marg, "marginal")]
        for i in range(2):
            blocks.append(
                simplex_block(tables[:, i, :] / marg[:, i][:, None], f"cond-{i}")
            )
        report = mutual_independence_report(blocks, 599, np.random.default_rng(15))
        assert not report.consistent
        assert report.min_p_value < 0.01

    def test_cross_ratio_law_global_but_not_local(self):
        from dirichletlab.hypermarkov import (
            HyperMarkov2x2,
            log_ratio_squared_modulator,
        )

        law = HyperMarkov2x2(
            np.ones((2, 2)), log_ratio_squared_modulator(1.0), 1.0
        )
        tables, _ = law.sample_tables(np.random.default_rng(16), 4000)
        y = tables[:, 0, 0] + tables[:, 1, 0]
        z = tables[:, 0, 0] / y
        w = tables[:, 0, 1] / (1.0 - y)
        y_block = SampleBlock(y, "column-marginal")
        cond_join = SampleBlock(np.column_stack([z, w]), "conditionals")
        p_global = permutation_pvalue(
            y_block, cond_join, 599, np.random.default_rng(17)
        )
        assert p_global > 0.01
        p_local = permutation_pvalue(
            SampleBlock(z, "z"), SampleBlock(w, "w"), 599,
            np.random.default_rng(18),
        )
        assert p_local < 0.01


@pytest.mark.skipif(BACKEND != "compiled", reason="compiled kernel unavailable")
class TestBackendAgreement:
    def test_pair_sum_matches_fallback(self):
        from dirichletlab import _fastdcov

        rng = np.random.default_rng(19)
        n = 800
        x = rng.normal(size=n)
        y = rng.normal(size=n)
        cx = _dcov.ColumnPre(x)
        cy = _dcov.ColumnPre(y)
        tree = np.empty(4 * (n + 1))
        args = (
            cx.xs,
            cx.rxs,
            cx.idx,
            cy.values_by_obs,
            cy.rank_by_obs,
            cy.rowsum_by_obs,
        )
        fast = _fastdcov.pair_sum(*args, tree)
        slow = _dcov_py.pair_sum(*args, tree)
        assert fast[0] == pytest.approx(slow[0], rel=1e-10)
        assert fast[1] == pytest.approx(slow[1], rel=1e-10)

    def test_statistics_match_fallback(self, monkeypatch):
        rng = np.random.default_rng(20)
        x = rng.normal(size=(400, 2))
        y = 0.4 * x[:, :1] + rng.normal(size=(400, 2))
        a, b = SampleBlock(x, "a"), SampleBlock(y, "b")
        fast_val = distance_correlation(a, b)
        monkeypatch.setattr(_dcov, "_pair_sum", _dcov_py.pair_sum)
        slow_val = distance_correlation(a, b)
        assert fast_val == pytest.approx(slow_val, rel=1e-10)

    def test_pvalues_match_fallback(self, monkeypatch):
        rng = np.random.default_rng(21)
        a, b = blocks_from(rng, 300)
        p_fast = permutation_pvalue(a, b, 219, np.random.default_rng(2))
        monkeypatch.setattr(_dcov, "_pair_sum", _dcov_py.pair_sum)
        p_slow = permutation_pvalue(a, b, 219, np.random.default_rng(2))
        assert p_fast == p_slow
