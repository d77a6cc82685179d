import math

import numpy as np
import pytest
from scipy import stats

from dirichletlab.exceptions import DomainError
from dirichletlab.gaussnet import (
    BivariateGaussian,
    Direction,
    GaussDirectedParams,
    NormalWishart,
    forward_to_reverse,
    from_joint,
    log_jacobian_factor,
    nw_factor_densities,
    reversal_residual,
    reverse_to_forward,
    sample_forward_params,
    sample_precisions,
    standardized_coefficient_independence,
    to_joint,
)


def fwd(m=0.0, v=1.0, m_cond=0.0, b=0.0, v_cond=1.0):
    return GaussDirectedParams(Direction.FORWARD, m, v, m_cond, b, v_cond)


def random_fwd(rng):
    return fwd(
        m=float(rng.uniform(-5, 5)),
        v=float(rng.uniform(0.1, 10)),
        m_cond=float(rng.uniform(-5, 5)),
        b=float(rng.uniform(-3, 3)),
        v_cond=float(rng.uniform(0.1, 10)),
    )


class TestReversal:
    def test_independence_case(self):
        r = forward_to_reverse(fwd())
        assert (r.m, r.v, r.m_cond, r.b, r.v_cond) == (0.0, 1.0, 0.0, 0.0, 1.0)

    def test_worked_values(self):
        r = forward_to_reverse(fwd(v=2.0, b=1.0, v_cond=1.0))
        assert r.v == pytest.approx(3.0)
        assert r.b == pytest.approx(2.0 / 3.0)
        assert r.v_cond == pytest.approx(2.0 / 3.0)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            p = random_fwd(rng)
            back = reverse_to_forward(forward_to_reverse(p))
            assert np.max(np.abs(back.as_array() - p.as_array())) < 1e-12

    def test_direction_guards(self):
        with pytest.raises(DomainError):
            reverse_to_forward(fwd())
        with pytest.raises(DomainError):
            forward_to_reverse(forward_to_reverse(fwd()))


class TestJoint:
    def test_independence_gives_diagonal(self):
        j = to_joint(fwd(v=2.0, v_cond=3.0))
        assert np.allclose(j.cov, np.diag([2.0, 3.0]))

    def test_worked_covariance(self):
        j = to_joint(fwd(v=2.0, b=1.0, v_cond=1.0))
        assert np.allclose(j.cov, [[2.0, 2.0], [2.0, 3.0]])

    def test_direction_invariance(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            p = random_fwd(rng)
            jf = to_joint(p)
            jr = to_joint(forward_to_reverse(p))
            assert np.max(np.abs(jf.mean - jr.mean)) < 1e-12
            assert np.max(np.abs(jf.cov - jr.cov)) < 1e-12

    def test_from_joint_round_trip(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            p = random_fwd(rng)
            q = from_joint(to_joint(p), Direction.FORWARD)
            assert np.max(np.abs(q.as_array() - p.as_array())) < 1e-12

    def test_rejects_asymmetric_cov(self):
        with pytest.raises(DomainError):
            BivariateGaussian(np.zeros(2), np.array([[1.0, 0.2], [0.1, 1.0]]))


class TestJacobianFactor:
    def test_symmetric_case_is_zero(self):
        assert log_jacobian_factor(fwd()) == pytest.approx(0.0, abs=1e-15)

    def test_worked_value(self):
        assert log_jacobian_factor(fwd(v=2.0, b=1.0, v_cond=1.0)) == pytest.approx(
            math.log(1.5), abs=1e-12
        )

    def test_matches_finite_difference_determinant(self):
        from dirichletlab.cli import _gauss_jacobian_fd_error

        rng = np.random.default_rng(3)
        for _ in range(50):
            r = forward_to_reverse(random_fwd(rng))
            assert _gauss_jacobian_fd_error(r) < 1e-5

    def test_forward_map_determinant_is_reciprocal(self):
        # the forward-to-reverse map's determinant is the reciprocal of
        # the closed-form factor
        rng = np.random.default_rng(4)
        p = random_fwd(rng)
        x = p.as_array()
        jac = np.zeros((5, 5))
        for j in range(5):
            h = 1e-6 * max(1.0, abs(x[j]))
            plus, minus = x.copy(), x.copy()
            plus[j] += h
            minus[j] -= h
            jac[:, j] = (
                forward_to_reverse(GaussDirectedParams(Direction.FORWARD, *plus)).as_array()
                - forward_to_reverse(GaussDirectedParams(Direction.FORWARD, *minus)).as_array()
            ) / (2.0 * h)
        fd = abs(float(np.linalg.det(jac)))
        assert fd == pytest.approx(math.exp(-log_jacobian_factor(p)), rel=1e-5)


@pytest.fixture(scope="module")
def nw():
    return NormalWishart(
        mu0=np.array([0.3, -0.7]),
        kappa=1.5,
        nu=6.0,
        scale=np.array([[2.0, 0.6], [0.6, 1.0]]),
    )


class TestNormalWishartFactors:
    def test_coefficient_mean_matches_monte_carlo(self, nw):
        draws = sample_forward_params(nw, np.random.default_rng(5), 100_000)
        b12 = draws[:, 3]
        se = b12.std(ddof=1) / math.sqrt(b12.size)
        assert abs(b12.mean() - 0.6 / 2.0) < 3.0 * se

    def test_precision_of_root_variance_is_gamma(self, nw):
        draws = sample_forward_params(nw, np.random.default_rng(6), 50_000)
        inv_v1 = 1.0 / draws[:, 1]
        # shape (nu-1)/2, rate t11/2
        d, p = stats.kstest(
            inv_v1, stats.gamma(a=(6.0 - 1) / 2, scale=2.0 / 2.0).cdf
        )
        assert p > 0.01

    def test_conditional_variance_is_inverse_gamma(self, nw):
        draws = sample_forward_params(nw, np.random.default_rng(7), 50_000)
        resid = 1.0 - 0.6**2 / 2.0
        d, p = stats.kstest(
            1.0 / draws[:, 4], stats.gamma(a=6.0 / 2, scale=2.0 / resid).cdf
        )
        assert p > 0.01

    def test_wishart_mean(self, nw):
        w = sample_precisions(nw, np.random.default_rng(8), 100_000)
        target = nw.nu * np.linalg.inv(nw.scale)
        assert np.max(np.abs(w.mean(axis=0) - target)) < 0.05 * np.max(np.abs(target))

    def test_symmetric_prior_factors_agree(self):
        nw_sym = NormalWishart(np.zeros(2), 2.0, 5.0, np.eye(2))
        factors = nw_factor_densities(nw_sym)
        for m, v in [(0.0, 1.0), (0.7, 2.3), (-1.1, 0.4)]:
            assert factors.log_root(1, m, v) == pytest.approx(
                factors.log_root(2, m, v), abs=1e-12
            )
            assert factors.log_conditional(2, m, 0.3, v) == pytest.approx(
                factors.log_conditional(1, m, 0.3, v), abs=1e-12
            )


class TestReversalResidual:
    def test_symmetric_point_under_symmetric_prior(self):
        nw_sym = NormalWishart(np.zeros(2), 2.0, 5.0, np.eye(2))
        factors = nw_factor_densities(nw_sym)
        p = fwd(m=0.4, v=1.7, m_cond=0.4, b=0.0, v_cond=1.7)
        assert reversal_residual(factors, p) < 1e-10

    def test_random_sweep(self, nw):
        factors = nw_factor_densities(nw)
        rng = np.random.default_rng(9)
        worst = 0.0
        for _ in range(100):
            p = fwd(
                m=float(rng.uniform(-3, 3)),
                v=float(rng.uniform(0.2, 5)),
                m_cond=float(rng.uniform(-3, 3)),
                b=float(rng.uniform(-2, 2)),
                v_cond=float(rng.uniform(0.2, 5)),
            )
            worst = max(worst, reversal_residual(factors, p))
        assert worst < 1e-8

    def test_perturbed_shape_detected(self, nw):
        import dataclasses

        factors = nw_factor_densities(nw)
        perturbed = dataclasses.replace(factors, nu=nw.nu + 1.0)
        rng = np.random.default_rng(10)
        worst = 0.0
        for _ in range(50):
            p = fwd(
                v=float(rng.uniform(0.2, 5)),
                b=float(rng.uniform(-2, 2)),
                v_cond=float(rng.uniform(0.2, 5)),
            )
            lhs = factors.log_forward(p) + log_jacobian_factor(p)
            rhs = perturbed.log_reverse(forward_to_reverse(p))
            worst = max(worst, abs(lhs - rhs))
        assert worst > 1e-3


class TestStandardizedCoefficient:
    def test_standardized_independent_raw_dependent(self):
        # uncorrelated scale matrix: the standardized coefficient is
        # exactly independent of the conditional variance; the raw one
        # scales with it
        nw0 = NormalWishart(np.zeros(2), 0.5, 6.0, np.eye(2))
        rng = np.random.default_rng(11)
        report = standardized_coefficient_independence(nw0, 4000, rng, n_perm=299)
        assert report.p_standardized > 0.01
        assert report.p_raw < 0.01

    def test_nearly_constant_variance_makes_both_independent(self):
        # huge degrees of freedom pin the conditional variance near a
        # constant, killing the raw pair's dependence as well
        nw_big = NormalWishart(np.zeros(2), 1.0, 5000.0, 5000.0 * np.eye(2))
        rng = np.random.default_rng(12)
        report = standardized_coefficient_independence(nw_big, 3000, rng, n_perm=299)
        assert report.p_standardized > 0.01
        assert report.p_raw > 0.01
