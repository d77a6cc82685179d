"""Probability-table reparameterization: table <-> (marginal, conditionals).

Covers the change of variables for k x n tables along either axis, its
Jacobian, the exponent regrouping that factorizes a joint Dirichlet into
a marginal Dirichlet and independent conditional Dirichlets, and the
converse composition.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .dirichlet import (
    BOUNDARY_FLOOR,
    SUM_TOLERANCE,
    DirichletParams,
    SimplexPoint,
    _readonly,
    log_density,
)
from .exceptions import ConsistencyError, DomainError
from .gammafn import log_gamma_array

COMPOSE_TOLERANCE = 1e-9


class Axis(enum.Enum):
    """Which index of the table plays the conditioning role."""

    ROWS = "rows"
    COLUMNS = "columns"


@dataclass(frozen=True)
class ProbTable:
    """A strictly positive k x n probability table summing to one."""

    entries: np.ndarray = field()

    def __post_init__(self):
        e = _readonly(self.entries)
        object.__setattr__(self, "entries", e)
        if e.ndim != 2 or e.shape[0] < 2 or e.shape[1] < 2:
            raise DomainError("tables must be at least 2 x 2")
        if not np.all(np.isfinite(e)) or np.any(e < BOUNDARY_FLOOR):
            raise DomainError("table entries must be strictly positive")
        if abs(float(e.sum()) - 1.0) > SUM_TOLERANCE:
            raise DomainError(f"table entries must sum to 1, got {float(e.sum())!r}")

    @property
    def shape(self) -> tuple:
        return self.entries.shape


@dataclass(frozen=True)
class TableDirichletParams:
    """Positive Dirichlet exponents laid out as a k x n table."""

    alphas: np.ndarray = field()

    def __post_init__(self):
        a = _readonly(self.alphas)
        object.__setattr__(self, "alphas", a)
        if a.ndim != 2 or a.shape[0] < 2 or a.shape[1] < 2:
            raise DomainError("exponent tables must be at least 2 x 2")
        if not np.all(np.isfinite(a)) or np.any(a <= 0.0):
            raise DomainError("exponents must be strictly positive")

    @property
    def shape(self) -> tuple:
        return self.alphas.shape


@dataclass(frozen=True)
class Decomposition:
    """A marginal simplex point plus one conditional point per cell."""

    marginal: SimplexPoint
    conditionals: tuple

    def __post_init__(self):
        if len(self.conditionals) != len(self.marginal):
            raise DomainError("need exactly one conditional per marginal cell")
        object.__setattr__(self, "conditionals", tuple(self.conditionals))


def _oriented(entries: np.ndarray, axis: Axis) -> np.ndarray:
    return entries if axis is Axis.ROWS else entries.T


def decompose_table(table: ProbTable, axis: Axis) -> Decomposition:
    """Split a table into its marginal and conditional distributions."""
    e = _oriented(table.entries, axis)
    marg = e.sum(axis=1)
    conds = e / marg[:, None]
    return Decomposition(
        marginal=SimplexPoint(marg / marg.sum()),
        conditionals=tuple(SimplexPoint(row / row.sum()) for row in conds),
    )


def compose_table(dec: Decomposition, axis: Axis) -> ProbTable:
    """Rebuild the table whose decomposition along `axis` is `dec`."""
    rows = np.stack(
        [dec.marginal.values[i] * c.values for i, c in enumerate(dec.conditionals)]
    )
    return ProbTable(_oriented(rows, axis))


def log_jacobian(marginal: SimplexPoint, n: int) -> float:
    """Log Jacobian of the table -> (marginal, conditionals) map.

    Equals (n - 1) * sum_i ln(marginal_i) when each marginal cell carries
    an n-cell conditional distribution.
    """
    if n < 1:
        raise DomainError("conditional size n must be >= 1")
    return float((n - 1) * np.log(marginal.values).sum())


def decompose_dirichlet(params: TableDirichletParams, axis: Axis):
    """Factor a joint table Dirichlet into marginal and conditional laws.

    Returns (marginal_params, conditional_params): the unique exponents
    for which the joint density equals the inverse Jacobian times the
    product of the factor densities.
    """
    a = _oriented(params.alphas, axis)
    marginal = DirichletParams(a.sum(axis=1))
    conditionals = tuple(DirichletParams(row) for row in a)
    return marginal, conditionals


def compose_dirichlet(
    marginal: DirichletParams, conditionals, axis: Axis
) -> TableDirichletParams:
    """Inverse of decompose_dirichlet.

    Requires each conditional's exponent total to match its marginal
    exponent; the joint law exists only under that consistency.
    """
    if len(conditionals) != len(marginal):
        raise ConsistencyError(
            f"need {len(marginal)} conditionals, got {len(conditionals)}"
        )
    rows = []
    for i, cond in enumerate(conditionals):
        total = cond.alphas.sum()
        if abs(total - marginal.alphas[i]) > COMPOSE_TOLERANCE:
            raise ConsistencyError(
                f"conditional {i + 1} exponents sum to {total!r} but the "
                f"marginal exponent is {marginal.alphas[i]!r}"
            )
        rows.append(cond.alphas)
    return TableDirichletParams(_oriented(np.stack(rows), axis))


def joint_log_density(params: TableDirichletParams, table: ProbTable) -> float:
    """Log density of the joint Dirichlet over the flattened table.

    The last cell is recomputed from the free ones, mirroring the
    density's definition on the free coordinates.
    """
    a = params.alphas
    t = table.entries
    if a.shape != t.shape:
        raise DomainError(f"shape mismatch: {a.shape} vs {t.shape}")
    flat_a = a.ravel()
    flat_t = t.ravel().copy()
    last = 1.0 - float(flat_t[:-1].sum())
    if last < BOUNDARY_FLOOR:
        raise DomainError("table lies on the simplex boundary")
    flat_t[-1] = last
    return float(
        log_gamma_array(flat_a.sum())
        - log_gamma_array(flat_a).sum()
        + ((flat_a - 1.0) * np.log(flat_t)).sum()
    )


def factorization_residual(
    params: TableDirichletParams,
    table: ProbTable,
    axis: Axis,
    marginal_params: DirichletParams,
    conditional_params,
) -> float:
    """|log joint - factorized log density| for the supplied factors."""
    dec = decompose_table(table, axis)
    n_cond = len(dec.conditionals[0])
    lhs = joint_log_density(params, table)
    rhs = -log_jacobian(dec.marginal, n_cond) + log_density(
        marginal_params, dec.marginal
    )
    for cond_params, cond_point in zip(conditional_params, dec.conditionals):
        rhs += log_density(cond_params, cond_point)
    return abs(lhs - rhs)


def verify_change_of_variables(
    params: TableDirichletParams, table: ProbTable, axis: Axis = Axis.ROWS
) -> float:
    """Residual of the joint-vs-factorized identity using the derived factors."""
    marginal_params, conditional_params = decompose_dirichlet(params, axis)
    return factorization_residual(
        params, table, axis, marginal_params, conditional_params
    )
