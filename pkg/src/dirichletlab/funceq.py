"""Residual checks for the positivity-constrained functional equations.

The equations relate the factor functions of the two decompositions of a
k x n probability table. Members of a bundle are *log* evaluators; all
residuals are computed in log space because the raw products of factor
densities underflow quickly.
"""

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .dirichlet import _readonly, dirichlet_log_pdf
from .exceptions import DomainError
from .reparam import ProbTable, TableDirichletParams

INTERIOR_MARGIN = 0.01


class BundleForm(enum.Enum):
    BINARY = "binary"
    GENERAL = "general"


@dataclass(frozen=True)
class BinaryPoint:
    """Free coordinates (y, z, w) of the binary (2 x 2) equation.

    y is the first column marginal, z and w the first-row conditional
    probabilities given column 1 and column 2. The row marginal
    x = y z + (1 - y) w is derived.
    """

    y: float
    z: float
    w: float

    def __post_init__(self):
        for name in ("y", "z", "w"):
            t = getattr(self, name)
            if not (np.isfinite(t) and 0.0 < t < 1.0):
                raise DomainError(f"{name} must lie in (0, 1), got {t!r}")

    @property
    def x(self) -> float:
        return self.y * self.z + (1.0 - self.y) * self.w


@dataclass(frozen=True)
class GeneralPoint:
    """Free coordinates of the k x n equation.

    y_free holds the first n-1 column marginals; z_free is the
    (k-1) x n block of column-conditional probabilities. Everything
    else (full marginals, row marginals, row conditionals) is derived.
    """

    y_free: np.ndarray = field()
    z_free: np.ndarray = field()

    def __post_init__(self):
        y = _readonly(self.y_free)
        z = _readonly(self.z_free)
        object.__setattr__(self, "y_free", y)
        object.__setattr__(self, "z_free", z)
        if y.ndim != 1 or z.ndim != 2 or z.shape[1] != y.size + 1:
            raise DomainError("need y_free of length n-1 and z_free of shape (k-1, n)")
        for arr in (self.y_full, self.z_full, self.x_full, self.w_full):
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0) or np.any(arr >= 1.0):
                raise DomainError("all free and derived coordinates must lie in (0, 1)")

    @property
    def k(self) -> int:
        return self.z_free.shape[0] + 1

    @property
    def n(self) -> int:
        return self.z_free.shape[1]

    @property
    def y_full(self) -> np.ndarray:
        y = self.y_free
        return np.append(y, 1.0 - y.sum())

    @property
    def z_full(self) -> np.ndarray:
        z = self.z_free
        return np.vstack([z, 1.0 - z.sum(axis=0)])

    @property
    def x_full(self) -> np.ndarray:
        return self.z_full @ self.y_full

    @property
    def w_full(self) -> np.ndarray:
        return (self.z_full * self.y_full[None, :]) / self.x_full[:, None]


@dataclass(frozen=True)
class BinaryBundle:
    """Log evaluators (f0, g1, g2, g0, f1, f2) of the binary equation."""

    log_f0: object
    log_g1: object
    log_g2: object
    log_g0: object
    log_f1: object
    log_f2: object

    def member_names(self):
        return ("f0", "g1", "g2", "g0", "f1", "f2")

    def replace(self, name, fn) -> "BinaryBundle":
        kwargs = {f"log_{m}": getattr(self, f"log_{m}") for m in self.member_names()}
        kwargs[f"log_{name}"] = fn
        return BinaryBundle(**kwargs)


@dataclass(frozen=True)
class GeneralBundle:
    """Log evaluators of the k x n equation.

    log_f0 and the k log_f members take the n-1 free coordinates of a
    length-n simplex point; log_g0 and the n log_g members take k-1.
    """

    k: int
    n: int
    log_f0: object
    log_g: tuple
    log_g0: object
    log_f: tuple

    def __post_init__(self):
        if len(self.log_g) != self.n or len(self.log_f) != self.k:
            raise DomainError("bundle needs n marginal-side and k row-side members")


def _checked(value: float, member: str) -> float:
    if not np.isfinite(value):
        raise DomainError(f"bundle member {member} is not positive at the argument")
    return float(value)


def binary_residual(bundle: BinaryBundle, p: BinaryPoint) -> float:
    """|log LHS - log RHS| of the binary equation at p."""
    y, z, w, x = p.y, p.z, p.w, p.x
    lhs = (
        _checked(bundle.log_f0(y), "f0")
        + _checked(bundle.log_g1(z), "g1")
        + _checked(bundle.log_g2(w), "g2")
    )
    rhs = (
        _checked(bundle.log_g0(x), "g0")
        + _checked(bundle.log_f1(y * z / x), "f1")
        + _checked(bundle.log_f2(y * (1.0 - z) / (1.0 - x)), "f2")
    )
    return abs(lhs - rhs)


def _general_sides(bundle: GeneralBundle, p: GeneralPoint):
    y, z, x, w = p.y_full, p.z_full, p.x_full, p.w_full
    lhs = _checked(bundle.log_f0(y[:-1]), "f0")
    for j in range(p.n):
        lhs += _checked(bundle.log_g[j](z[:-1, j]), f"g{j + 1}")
    rhs = _checked(bundle.log_g0(x[:-1]), "g0")
    for i in range(p.k):
        rhs += _checked(bundle.log_f[i](w[i, :-1]), f"f{i + 1}")
    return lhs, rhs


def general_residual(bundle: GeneralBundle, p: GeneralPoint) -> float:
    """Max residual of the equation over its two symmetric orientations.

    The swapped orientation treats the row marginals and row conditionals
    as free and reconstructs the column coordinates from them; for exact
    arithmetic the two residuals coincide.
    """
    lhs, rhs = _general_sides(bundle, p)
    direct = abs(lhs - rhs)

    # swapped orientation: rebuild (y, z) from (x, w) and re-evaluate
    x, w = p.x_full, p.w_full
    y_rebuilt = w.T @ x  # full length n
    z_rebuilt = (w[:-1, :] * x[:-1, None]) / y_rebuilt[None, :]  # (k-1, n)
    lhs2 = _checked(bundle.log_g0(x[:-1]), "g0")
    for i in range(p.k):
        lhs2 += _checked(bundle.log_f[i](w[i, :-1]), f"f{i + 1}")
    rhs2 = _checked(bundle.log_f0(y_rebuilt[:-1]), "f0")
    for j in range(p.n):
        rhs2 += _checked(bundle.log_g[j](z_rebuilt[:, j]), f"g{j + 1}")
    swapped = abs(lhs2 - rhs2)
    return max(direct, swapped)


def dirichlet_bundle(params: TableDirichletParams, form: BundleForm):
    """Factor bundle induced by a joint table Dirichlet.

    The marginal members absorb the change-of-variables Jacobians: the
    column-marginal member divides its density by prod_j y_j^(k-1), the
    row-marginal member by prod_i x_i^(n-1). Conditional members are the
    plain factor densities. This is the unique absorption for which the
    equations hold exactly.
    """
    a = params.alphas
    k, n = a.shape
    row_totals = a.sum(axis=1)
    col_totals = a.sum(axis=0)

    if form is BundleForm.BINARY:
        if (k, n) != (2, 2):
            raise DomainError("the binary form requires a 2 x 2 exponent table")

        def beta_member(aa, bb, absorb=False):
            def member(t, aa=aa, bb=bb):
                if not 0.0 < t < 1.0:
                    return math.nan
                val = dirichlet_log_pdf(np.array([aa, bb]), np.array([t, 1.0 - t]))
                if absorb:
                    val -= math.log(t * (1.0 - t))
                return val

            return member

        return BinaryBundle(
            log_f0=beta_member(col_totals[0], col_totals[1], absorb=True),
            log_g1=beta_member(a[0, 0], a[1, 0]),
            log_g2=beta_member(a[0, 1], a[1, 1]),
            log_g0=beta_member(row_totals[0], row_totals[1], absorb=True),
            log_f1=beta_member(a[0, 0], a[0, 1]),
            log_f2=beta_member(a[1, 0], a[1, 1]),
        )

    def simplex_member(alphas, jac_power=0):
        alphas = np.asarray(alphas, dtype=float)

        def member(free, alphas=alphas, jac_power=jac_power):
            free = np.asarray(free, dtype=float)
            full = np.append(free, 1.0 - free.sum())
            if np.any(full <= 0.0):
                return math.nan
            val = dirichlet_log_pdf(alphas, full)
            if jac_power:
                val -= jac_power * float(np.log(full).sum())
            return val

        return member

    return GeneralBundle(
        k=k,
        n=n,
        log_f0=simplex_member(col_totals, jac_power=k - 1),
        log_g=tuple(simplex_member(a[:, j]) for j in range(n)),
        log_g0=simplex_member(row_totals, jac_power=n - 1),
        log_f=tuple(simplex_member(a[i, :]) for i in range(k)),
    )


def perturb_binary_member(
    bundle: BinaryBundle, name: str, eps: float = 0.1
) -> BinaryBundle:
    """Multiply one member by (1 + eps * t); breaks the equation for eps != 0."""
    base = getattr(bundle, f"log_{name}")
    return bundle.replace(name, lambda t: base(t) + math.log1p(eps * t))


def perturb_general_member(
    bundle: GeneralBundle, side: str, index: int, coord: int, eps: float = 0.1
) -> GeneralBundle:
    """Multiply one member by (1 + eps * t_coord) on the chosen side.

    side is one of "f0", "g0", "g", "f"; index selects within the g/f
    tuples and coord the argument entering the perturbation factor.
    """

    def wrap(fn):
        return lambda arg: fn(arg) + math.log1p(eps * np.asarray(arg, float).ravel()[coord])

    if side == "f0":
        return GeneralBundle(bundle.k, bundle.n, wrap(bundle.log_f0), bundle.log_g,
                             bundle.log_g0, bundle.log_f)
    if side == "g0":
        return GeneralBundle(bundle.k, bundle.n, bundle.log_f0, bundle.log_g,
                             wrap(bundle.log_g0), bundle.log_f)
    if side == "g":
        gs = list(bundle.log_g)
        gs[index] = wrap(gs[index])
        return GeneralBundle(bundle.k, bundle.n, bundle.log_f0, tuple(gs),
                             bundle.log_g0, bundle.log_f)
    if side == "f":
        fs = list(bundle.log_f)
        fs[index] = wrap(fs[index])
        return GeneralBundle(bundle.k, bundle.n, bundle.log_f0, bundle.log_g,
                             bundle.log_g0, tuple(fs))
    raise DomainError(f"unknown bundle side {side!r}")


# ---------------------------------------------------------------------------
# Closed-form log-derivative identities of the binary solution family
# ---------------------------------------------------------------------------


def _beta_log_derivative(t: float, a: float, b: float) -> float:
    # d/dt ln[t^a (1-t)^b] for the exponents a, b actually carried by the member
    return a / t - b / (1.0 - t)


def binary_derivative_identity_residual(
    params: TableDirichletParams, p: BinaryPoint
) -> float:
    """First-derivative identity linking the four marginal-side members.

    For the binary Dirichlet bundle, collecting the log-derivative terms
    of the equation gives

        h(y,z,w) g0'(x) = z(1-z) g1'(z) + w(1-w) g2'(w)
                          - y(1-y)(w-z) f0'(y)

    with h = y(1-y)(w-z)^2 + y z(1-z) + (1-y)(1-w)w. Returns the absolute
    residual, computed with closed-form Beta log derivatives.
    """
    a = params.alphas
    if a.shape != (2, 2):
        raise DomainError("the derivative identity is for 2 x 2 exponent tables")
    y, z, w, x = p.y, p.z, p.w, p.x
    col = a.sum(axis=0)
    row = a.sum(axis=1)
    f0p = _beta_log_derivative(y, col[0] - 2.0, col[1] - 2.0)
    g0p = _beta_log_derivative(x, row[0] - 2.0, row[1] - 2.0)
    g1p = _beta_log_derivative(z, a[0, 0] - 1.0, a[1, 0] - 1.0)
    g2p = _beta_log_derivative(w, a[0, 1] - 1.0, a[1, 1] - 1.0)
    h = y * (1.0 - y) * (w - z) ** 2 + y * z * (1.0 - z) + (1.0 - y) * (1.0 - w) * w
    lhs = h * g0p
    rhs = z * (1.0 - z) * g1p + w * (1.0 - w) * g2p - y * (1.0 - y) * (w - z) * f0p
    return abs(lhs - rhs)


def log_beta_ode_constant(a: float, b: float, w: float) -> float:
    """Value of (1-2w) g'(w) + w(1-w) g''(w) for g(w) = a ln w + b ln(1-w).

    Constant in w; equals -(a + b) identically.
    """
    if not 0.0 < w < 1.0:
        raise DomainError(f"w must lie in (0, 1), got {w!r}")
    if a <= 0.0 or b <= 0.0:
        raise DomainError("exponents must be positive")
    gp = a / w - b / (1.0 - w)
    gpp = -a / w**2 - b / (1.0 - w) ** 2
    return (1.0 - 2.0 * w) * gp + w * (1.0 - w) * gpp


def log_beta_ode_residual(a: float, b: float, w: float) -> float:
    """|measured constant - (-(a + b))| of the second-order identity."""
    return abs(log_beta_ode_constant(a, b, w) + (a + b))


# ---------------------------------------------------------------------------
# Point construction helpers
# ---------------------------------------------------------------------------


def table_from_binary_point(p: BinaryPoint) -> ProbTable:
    """Reassemble the 2 x 2 table with (y, z, w) as its free coordinates."""
    y, z, w = p.y, p.z, p.w
    return ProbTable(
        np.array([[y * z, (1.0 - y) * w], [y * (1.0 - z), (1.0 - y) * (1.0 - w)]])
    )


def binary_point_from_table(table: ProbTable) -> BinaryPoint:
    """Inverse of table_from_binary_point."""
    t = table.entries
    if t.shape != (2, 2):
        raise DomainError("binary points describe 2 x 2 tables")
    y = float(t[0, 0] + t[1, 0])
    return BinaryPoint(y=y, z=float(t[0, 0] / y), w=float(t[0, 1] / (1.0 - y)))


def random_binary_point(
    rng: np.random.Generator, margin: float = INTERIOR_MARGIN
) -> BinaryPoint:
    y, z, w = rng.uniform(margin, 1.0 - margin, size=3)
    return BinaryPoint(float(y), float(z), float(w))


def random_general_point(
    k: int, n: int, rng: np.random.Generator, margin: float = INTERIOR_MARGIN
) -> GeneralPoint:
    """Uniform interior point with every free coordinate clear of the margin."""

    def margin_simplex(size):
        while True:
            v = rng.dirichlet(np.ones(size))
            if np.all(v > margin):
                return v

    while True:
        y = margin_simplex(n)
        z = np.column_stack([margin_simplex(k) for _ in range(n)])
        p = GeneralPoint(y_free=y[:-1], z_free=z[:-1, :])
        if np.all(p.w_full > 1e-6) and np.all(p.w_full < 1.0 - 1e-6):
            return p


def general_point_from_binary(p: BinaryPoint) -> GeneralPoint:
    return GeneralPoint(y_free=np.array([p.y]), z_free=np.array([[p.z, p.w]]))


def binary_dirichlet_residual_sweep(
    params: TableDirichletParams, points
) -> float:
    """Max binary residual of the induced bundle over the given points."""
    bundle = dirichlet_bundle(params, BundleForm.BINARY)
    return max(binary_residual(bundle, p) for p in points)


def general_dirichlet_residual_sweep(
    params: TableDirichletParams, points
) -> float:
    """Max general residual of the induced bundle over the given points."""
    bundle = dirichlet_bundle(params, BundleForm.GENERAL)
    return max(general_residual(bundle, p) for p in points)
