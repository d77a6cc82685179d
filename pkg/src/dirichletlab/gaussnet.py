"""Two-variable Gaussian networks: directed parameterizations, the
reversal map and its Jacobian factor, and the factor densities induced
by a bivariate normal-Wishart prior.

Conventions fixed here:

* conditional means are intercepts in both directions, i.e. the reverse
  intercept is m1 - b21 * m2; only this choice makes the joint
  distribution direction-invariant;
* the Wishart density is proportional to
  |W|^((nu - 3)/2) * exp(-tr(T W)/2) for 2 x 2 matrices, so the scale of
  the corresponding inverse-Wishart on covariances is T itself;
* sampling uses the Bartlett decomposition, seeded through an explicit
  generator.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .gammafn import inverse_gamma_log_pdf, normal_log_pdf


class Direction(enum.Enum):
    FORWARD = "forward"  # x1 -> x2
    REVERSE = "reverse"  # x2 -> x1


@dataclass(frozen=True)
class GaussDirectedParams:
    """Parameters (root mean/variance, conditional intercept, regression
    coefficient, conditional variance) of one edge direction."""

    direction: Direction
    m: float
    v: float
    m_cond: float
    b: float
    v_cond: float

    def __post_init__(self):
        vals = (self.m, self.v, self.m_cond, self.b, self.v_cond)
        if not all(np.isfinite(x) for x in vals):
            raise DomainError("parameters must be finite")
        if self.v <= 0.0 or self.v_cond <= 0.0:
            raise DomainError("variances must be strictly positive")

    def as_array(self) -> np.ndarray:
        return np.array([self.m, self.v, self.m_cond, self.b, self.v_cond])


@dataclass(frozen=True)
class BivariateGaussian:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.shape != (2,) or cov.shape != (2, 2):
            raise DomainError("need a 2-vector mean and 2 x 2 covariance")
        if abs(cov[0, 1] - cov[1, 0]) > 1e-12:
            raise DomainError("covariance must be symmetric")
        if np.any(np.linalg.eigvalsh(cov) <= 0.0):
            raise DomainError("covariance must be positive definite")
        mean = mean.copy(); mean.setflags(write=False)
        cov = cov.copy(); cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class NormalWishart:
    """Conjugate prior on (mean vector, precision matrix) of a bivariate
    normal: W ~ Wishart(nu, scale T), mu | W ~ N(mu0, (kappa W)^-1)."""

    mu0: np.ndarray
    kappa: float
    nu: float
    scale: np.ndarray

    def __post_init__(self):
        mu0 = np.asarray(self.mu0, dtype=float)
        scale = np.asarray(self.scale, dtype=float)
        if mu0.shape != (2,):
            raise DomainError("mu0 must be a 2-vector")
        if self.kappa <= 0.0:
            raise DomainError("kappa must be positive")
        if self.nu <= 1.0:
            raise DomainError("nu must exceed 1")
        if scale.shape != (2, 2) or abs(scale[0, 1] - scale[1, 0]) > 1e-12:
            raise DomainError("scale must be a symmetric 2 x 2 matrix")
        if np.any(np.linalg.eigvalsh(scale) <= 0.0):
            raise DomainError("scale must be positive definite")
        mu0 = mu0.copy(); mu0.setflags(write=False)
        scale = scale.copy(); scale.setflags(write=False)
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "scale", scale)


def _flip(p: GaussDirectedParams, new_direction: Direction) -> GaussDirectedParams:
    v_other = p.v_cond + p.v * p.b**2
    b_other = p.b * p.v / v_other
    v_cond_other = p.v_cond * p.v / v_other
    m_other = p.m_cond + p.b * p.m
    m_cond_other = p.m - b_other * m_other
    return GaussDirectedParams(
        direction=new_direction,
        m=m_other,
        v=v_other,
        m_cond=m_cond_other,
        b=b_other,
        v_cond=v_cond_other,
    )


def forward_to_reverse(p: GaussDirectedParams) -> GaussDirectedParams:
    """Path-analysis relations mapping the x1 -> x2 parameters to the
    x2 -> x1 parameters of the same joint distribution."""
    if p.direction is not Direction.FORWARD:
        raise DomainError("expected forward-direction parameters")
    return _flip(p, Direction.REVERSE)


def reverse_to_forward(p: GaussDirectedParams) -> GaussDirectedParams:
    if p.direction is not Direction.REVERSE:
        raise DomainError("expected reverse-direction parameters")
    return _flip(p, Direction.FORWARD)


def to_joint(p: GaussDirectedParams) -> BivariateGaussian:
    """The bivariate normal with the given root/conditional factorization."""
    root_mean = p.m
    other_mean = p.m_cond + p.b * p.m
    root_var = p.v
    cross = p.b * p.v
    other_var = p.v_cond + p.b**2 * p.v
    if p.direction is Direction.FORWARD:
        mean = np.array([root_mean, other_mean])
        cov = np.array([[root_var, cross], [cross, other_var]])
    else:
        mean = np.array([other_mean, root_mean])
        cov = np.array([[other_var, cross], [cross, root_var]])
    return BivariateGaussian(mean=mean, cov=cov)


def from_joint(j: BivariateGaussian, direction: Direction) -> GaussDirectedParams:
    """Factor a bivariate normal in the requested direction."""
    if direction is Direction.FORWARD:
        root, other = 0, 1
    else:
        root, other = 1, 0
    v = float(j.cov[root, root])
    b = float(j.cov[root, other] / v)
    v_cond = float(j.cov[other, other] - j.cov[root, other] ** 2 / v)
    m = float(j.mean[root])
    m_cond = float(j.mean[other] - b * m)
    return GaussDirectedParams(direction, m, v, m_cond, b, v_cond)


def log_jacobian_factor(p: GaussDirectedParams) -> float:
    """ln of v1^2 v2|1^3 / (v2^2 v1|2^3) at the given forward parameters.

    This equals the log |det| of the reverse-to-forward parameter map at
    the image point (the forward-to-reverse map has the reciprocal
    determinant).
    """
    if p.direction is not Direction.FORWARD:
        raise DomainError("expected forward-direction parameters")
    r = forward_to_reverse(p)
    return (
        2.0 * math.log(p.v)
        + 3.0 * math.log(p.v_cond)
        - 2.0 * math.log(r.v)
        - 3.0 * math.log(r.v_cond)
    )


@dataclass(frozen=True)
class NormalWishartFactors:
    """Closed-form log factor densities induced by a normal-Wishart prior.

    Shapes/scales follow the regression decomposition of the
    inverse-Wishart on covariances: the root variance is inverse gamma
    with shape (nu-1)/2, the conditional variance inverse gamma with
    shape nu/2, the coefficient conditionally normal with variance
    v_cond / T_root_root, and means conditionally normal with variance
    v / kappa.
    """

    mu0: np.ndarray
    kappa: float
    nu: float
    t11: float
    t12: float
    t22: float

    # shape/scale pairs for the four variance laws
    def _root_ig(self, which: int):
        t = self.t11 if which == 1 else self.t22
        return (self.nu - 1.0) / 2.0, t / 2.0

    def _cond_ig(self, which: int):
        if which == 1:
            resid = self.t11 - self.t12**2 / self.t22
        else:
            resid = self.t22 - self.t12**2 / self.t11
        return self.nu / 2.0, resid / 2.0

    def log_root(self, which: int, m: float, v: float) -> float:
        shape, scale = self._root_ig(which)
        mu = self.mu0[which - 1]
        return inverse_gamma_log_pdf(v, shape, scale) + normal_log_pdf(
            m, mu, v / self.kappa
        )

    def log_conditional(self, which: int, m_cond: float, b: float, v_cond: float) -> float:
        """Density of the conditional-node parameters for node `which`."""
        shape, scale = self._cond_ig(which)
        if which == 2:
            b_mean = self.t12 / self.t11
            b_var = v_cond / self.t11
            intercept_mean = self.mu0[1] - b * self.mu0[0]
        else:
            b_mean = self.t12 / self.t22
            b_var = v_cond / self.t22
            intercept_mean = self.mu0[0] - b * self.mu0[1]
        return (
            inverse_gamma_log_pdf(v_cond, shape, scale)
            + normal_log_pdf(b, b_mean, b_var)
            + normal_log_pdf(m_cond, intercept_mean, v_cond / self.kappa)
        )

    def log_forward(self, p: GaussDirectedParams) -> float:
        return self.log_root(1, p.m, p.v) + self.log_conditional(
            2, p.m_cond, p.b, p.v_cond
        )

    def log_reverse(self, p: GaussDirectedParams) -> float:
        return self.log_root(2, p.m, p.v) + self.log_conditional(
            1, p.m_cond, p.b, p.v_cond
        )


def nw_factor_densities(nw: NormalWishart) -> NormalWishartFactors:
    """Factor densities of the forward and reverse parameterizations."""
    return NormalWishartFactors(
        mu0=nw.mu0,
        kappa=nw.kappa,
        nu=nw.nu,
        t11=float(nw.scale[0, 0]),
        t12=float(nw.scale[0, 1]),
        t22=float(nw.scale[1, 1]),
    )


def reversal_residual(
    factors: NormalWishartFactors, p: GaussDirectedParams
) -> float:
    """Residual of the two-direction density identity at forward point p.

    The factorizations describe one distribution, so the forward log
    density plus the log Jacobian factor equals the reverse log density
    at the mapped point; returns the absolute mismatch.
    """
    r = forward_to_reverse(p)
    lhs = factors.log_forward(p) + log_jacobian_factor(p)
    rhs = factors.log_reverse(r)
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_precisions(
    nw: NormalWishart, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Wishart draws via the Bartlett decomposition, shape (size, 2, 2)."""
    v_scale = np.linalg.inv(nw.scale)  # standard Wishart scale matrix
    chol = np.linalg.cholesky(v_scale)
    a = np.zeros((size, 2, 2))
    a[:, 0, 0] = np.sqrt(rng.chisquare(nw.nu, size))
    a[:, 1, 1] = np.sqrt(rng.chisquare(nw.nu - 1.0, size))
    a[:, 1, 0] = rng.normal(0.0, 1.0, size)
    la = chol[None] @ a
    return la @ la.transpose(0, 2, 1)


def sample_forward_params(
    nw: NormalWishart, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Draws of (m1, v1, m2|1, b12, v2|1) under the prior, one per row."""
    w = sample_precisions(nw, rng, size)
    cov = np.linalg.inv(w)
    mean_chol = np.linalg.cholesky(cov / nw.kappa)
    mu = nw.mu0[None, :] + (mean_chol @ rng.normal(size=(size, 2, 1)))[:, :, 0]
    v1 = cov[:, 0, 0]
    b12 = cov[:, 0, 1] / v1
    v2c = cov[:, 1, 1] - cov[:, 0, 1] ** 2 / v1
    m1 = mu[:, 0]
    m2c = mu[:, 1] - b12 * mu[:, 0]
    return np.column_stack([m1, v1, m2c, b12, v2c])


@dataclass(frozen=True)
class IndependenceComparison:
    """Permutation p-values for the coefficient/variance pairing."""

    p_standardized: float
    p_raw: float
    statistic_standardized: float
    statistic_raw: float


def standardized_coefficient_independence(
    nw: NormalWishart,
    n_samples: int,
    rng: np.random.Generator,
    n_perm: int = 499,
) -> IndependenceComparison:
    """Tests b12/sqrt(v2|1) vs v2|1 and raw b12 vs v2|1 for dependence.

    The standardized coefficient is the local-independence candidate;
    the raw coefficient's spread scales with the conditional variance,
    so the raw pair is expected to show dependence.
    """
    from .independence import SampleBlock, _permutation_test

    draws = sample_forward_params(nw, rng, n_samples)
    b12 = draws[:, 3]
    v2c = draws[:, 4]
    std_block = SampleBlock(b12 / np.sqrt(v2c), "standardized-coefficient")
    raw_block = SampleBlock(b12, "coefficient")
    var_block = SampleBlock(v2c, "conditional-variance")
    p_std, s_std = _permutation_test(std_block, var_block, n_perm, rng)
    p_raw, s_raw = _permutation_test(raw_block, var_block, n_perm, rng)
    return IndependenceComparison(
        p_standardized=p_std,
        p_raw=p_raw,
        statistic_standardized=s_std,
        statistic_raw=s_raw,
    )
