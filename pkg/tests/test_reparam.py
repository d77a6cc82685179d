import numpy as np
import pytest

from dirichletlab.dirichlet import DirichletParams, SimplexPoint
from dirichletlab.exceptions import ConsistencyError, DomainError
from dirichletlab.reparam import (
    Axis,
    Decomposition,
    ProbTable,
    TableDirichletParams,
    compose_dirichlet,
    compose_table,
    decompose_dirichlet,
    decompose_table,
    factorization_residual,
    joint_log_density,
    log_jacobian,
    verify_change_of_variables,
)


def random_table(rng, k, n):
    return ProbTable(rng.dirichlet(np.ones(k * n)).reshape(k, n))


class TestTableTypes:
    def test_rejects_degenerate_shapes(self):
        with pytest.raises(DomainError):
            ProbTable(np.array([[0.5, 0.5]]))
        with pytest.raises(DomainError):
            TableDirichletParams(np.array([[1.0], [1.0]]))

    def test_rejects_boundary(self):
        with pytest.raises(DomainError):
            ProbTable(np.array([[0.5, 0.5], [0.0, 0.0]]))


class TestDecomposeCompose:
    def test_uniform_table(self):
        table = ProbTable(np.full((2, 2), 0.25))
        dec = decompose_table(table, Axis.ROWS)
        assert np.allclose(dec.marginal.values, [0.5, 0.5])
        for cond in dec.conditionals:
            assert np.allclose(cond.values, [0.5, 0.5])

    def test_rank_one_table_has_equal_conditionals(self):
        p = np.array([0.3, 0.7])
        q = np.array([0.2, 0.35, 0.45])
        table = ProbTable(np.outer(p, q))
        dec = decompose_table(table, Axis.ROWS)
        for cond in dec.conditionals:
            assert np.allclose(cond.values, q, atol=1e-15)

    def test_round_trip_random(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            k = int(rng.integers(2, 7))
            n = int(rng.integers(2, 7))
            table = random_table(rng, k, n)
            for axis in (Axis.ROWS, Axis.COLUMNS):
                rebuilt = compose_table(decompose_table(table, axis), axis)
                assert np.max(np.abs(rebuilt.entries - table.entries)) <= 1e-14

    def test_compose_uniform(self):
        dec = Decomposition(
            marginal=SimplexPoint(np.array([0.5, 0.5])),
            conditionals=(
                SimplexPoint(np.array([0.5, 0.5])),
                SimplexPoint(np.array([0.5, 0.5])),
            ),
        )
        table = compose_table(dec, Axis.ROWS)
        assert np.allclose(table.entries, 0.25)

    def test_boundary_conditional_rejected_at_construction(self):
        with pytest.raises(DomainError):
            SimplexPoint(np.array([1.0, 0.0]))

    def test_composed_table_sums_to_one(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            dec = Decomposition(
                marginal=SimplexPoint(rng.dirichlet(np.ones(3))),
                conditionals=tuple(
                    SimplexPoint(rng.dirichlet(np.ones(4))) for _ in range(3)
                ),
            )
            table = compose_table(dec, Axis.COLUMNS)
            assert abs(table.entries.sum() - 1.0) <= 1e-14


class TestJacobian:
    def test_two_by_two_value(self):
        point = SimplexPoint(np.array([0.5, 0.5]))
        assert log_jacobian(point, 2) == pytest.approx(np.log(0.25), abs=1e-12)

    def test_three_cell_value(self):
        point = SimplexPoint(np.array([0.2, 0.3, 0.5]))
        assert log_jacobian(point, 2) == pytest.approx(np.log(0.03), abs=1e-12)

    def test_trivial_exponent(self):
        point = SimplexPoint(np.array([0.2, 0.3, 0.5]))
        assert log_jacobian(point, 1) == 0.0

    @pytest.mark.parametrize("k,n", [(2, 2), (2, 3), (3, 2), (3, 3)])
    def test_matches_finite_difference_determinant(self, k, n):
        from dirichletlab.cli import _jacobian_fd_error

        rng = np.random.default_rng(42)
        for _ in range(50):
            table = random_table(rng, k, n)
            assert _jacobian_fd_error(table, Axis.ROWS) < 1e-5


class TestDirichletFactorization:
    def test_flat_exponents(self):
        params = TableDirichletParams(np.ones((2, 2)))
        marg, conds = decompose_dirichlet(params, Axis.ROWS)
        assert np.allclose(marg.alphas, [2.0, 2.0])
        for cond in conds:
            assert np.allclose(cond.alphas, [1.0, 1.0])

    def test_regrouping(self):
        params = TableDirichletParams(np.array([[1.0, 2.0], [3.0, 4.0]]))
        marg, conds = decompose_dirichlet(params, Axis.ROWS)
        assert np.allclose(marg.alphas, [3.0, 7.0])
        assert np.allclose(conds[0].alphas, [1.0, 2.0])
        assert np.allclose(conds[1].alphas, [3.0, 4.0])

    def test_three_by_three(self):
        params = TableDirichletParams(np.full((3, 3), 2.0))
        marg, conds = decompose_dirichlet(params, Axis.COLUMNS)
        assert np.allclose(marg.alphas, [6.0, 6.0, 6.0])
        for cond in conds:
            assert np.allclose(cond.alphas, [2.0, 2.0, 2.0])

    def test_compose_inverse_examples(self):
        marg = DirichletParams(np.array([2.0, 2.0]))
        conds = (
            DirichletParams(np.array([1.0, 1.0])),
            DirichletParams(np.array([1.0, 1.0])),
        )
        params = compose_dirichlet(marg, conds, Axis.ROWS)
        assert np.allclose(params.alphas, 1.0)

        marg = DirichletParams(np.array([3.0, 7.0]))
        conds = (
            DirichletParams(np.array([1.0, 2.0])),
            DirichletParams(np.array([3.0, 4.0])),
        )
        params = compose_dirichlet(marg, conds, Axis.ROWS)
        assert np.allclose(params.alphas, [[1.0, 2.0], [3.0, 4.0]])

    def test_compose_consistency_error_names_index(self):
        marg = DirichletParams(np.array([2.0, 2.0]))
        conds = (
            DirichletParams(np.array([1.0, 1.0])),
            DirichletParams(np.array([2.0, 1.0])),
        )
        with pytest.raises(ConsistencyError, match="conditional 2"):
            compose_dirichlet(marg, conds, Axis.ROWS)

    def test_compose_decompose_exact_floats(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            params = TableDirichletParams(rng.uniform(0.5, 5.0, size=(3, 4)))
            for axis in (Axis.ROWS, Axis.COLUMNS):
                marg, conds = decompose_dirichlet(params, axis)
                rebuilt = compose_dirichlet(marg, conds, axis)
                assert np.array_equal(rebuilt.alphas, params.alphas)


class TestChangeOfVariables:
    def test_flat_uniform(self):
        params = TableDirichletParams(np.ones((2, 2)))
        table = ProbTable(np.full((2, 2), 0.25))
        assert verify_change_of_variables(params, table) < 1e-12

    def test_random_sweep_both_axes(self):
        rng = np.random.default_rng(3)
        worst = 0.0
        for _ in range(200):
            k = int(rng.integers(2, 6))
            n = int(rng.integers(2, 6))
            params = TableDirichletParams(rng.uniform(0.5, 5.0, size=(k, n)))
            table = random_table(rng, k, n)
            for axis in (Axis.ROWS, Axis.COLUMNS):
                worst = max(worst, verify_change_of_variables(params, table, axis))
        assert worst < 1e-9

    def test_perturbed_factors_break_identity(self):
        rng = np.random.default_rng(4)
        params = TableDirichletParams(rng.uniform(0.5, 5.0, size=(2, 2)))
        marg, conds = decompose_dirichlet(params, Axis.ROWS)
        bad_marg = DirichletParams(marg.alphas + np.array([0.5, 0.0]))
        worst = 0.0
        for _ in range(20):
            table = random_table(rng, 2, 2)
            worst = max(
                worst,
                factorization_residual(params, table, Axis.ROWS, bad_marg, conds),
            )
        assert worst > 1e-3

    def test_joint_log_density_shape_mismatch(self):
        with pytest.raises(DomainError):
            joint_log_density(
                TableDirichletParams(np.ones((2, 2))),
                ProbTable(np.full((2, 3), 1.0 / 6.0)),
            )
