"""Dirichlet densities, moments, and sampling on the open probability simplex."""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError
from .gammafn import log_gamma_array

SUM_TOLERANCE = 1e-12
BOUNDARY_FLOOR = 1e-300


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SimplexPoint:
    """A strictly interior point of a probability simplex.

    All coordinates are stored, including the redundant last one; the sum
    is validated so drift cannot accumulate silently between modules.
    """

    values: np.ndarray = field()

    def __post_init__(self):
        v = _readonly(self.values)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 2:
            raise DomainError("a simplex point needs at least 2 coordinates")
        if not np.all(np.isfinite(v)) or np.any(v < BOUNDARY_FLOOR):
            raise DomainError("simplex coordinates must be strictly positive")
        if abs(float(v.sum()) - 1.0) > SUM_TOLERANCE:
            raise DomainError(
                f"simplex coordinates must sum to 1 within {SUM_TOLERANCE}, "
                f"got {float(v.sum())!r}"
            )

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class DirichletParams:
    """Exponent vector of a Dirichlet distribution; every entry positive."""

    alphas: np.ndarray = field()

    def __post_init__(self):
        a = _readonly(self.alphas)
        object.__setattr__(self, "alphas", a)
        if a.ndim != 1 or a.size < 2:
            raise DomainError("a Dirichlet needs at least 2 exponents")
        if not np.all(np.isfinite(a)) or np.any(a <= 0.0):
            raise DomainError("Dirichlet exponents must be strictly positive")

    def __len__(self) -> int:
        return int(self.alphas.size)

    @property
    def total(self) -> float:
        return float(self.alphas.sum())


def log_normalizer(params: DirichletParams) -> float:
    """ln of the Dirichlet normalization constant."""
    a = params.alphas
    return float(log_gamma_array(a.sum()) - log_gamma_array(a).sum())


def log_density(params: DirichletParams, point: SimplexPoint) -> float:
    """Log Dirichlet density at an interior simplex point.

    The last coordinate is recomputed as one minus the sum of the others,
    matching the density's definition on the free coordinates.
    """
    a = params.alphas
    v = point.values
    if a.size != v.size:
        raise DomainError(
            f"length mismatch: {a.size} exponents vs {v.size} coordinates"
        )
    last = 1.0 - float(v[:-1].sum())
    if last < BOUNDARY_FLOOR:
        raise DomainError("point lies on the simplex boundary")
    phis = np.concatenate([v[:-1], [last]])
    return log_normalizer(params) + float(((a - 1.0) * np.log(phis)).sum())


def dirichlet_log_pdf(alphas: np.ndarray, phis: np.ndarray) -> float:
    """Array-level log density; no validation, for inner loops."""
    alphas = np.asarray(alphas, dtype=float)
    phis = np.asarray(phis, dtype=float)
    return float(
        log_gamma_array(alphas.sum())
        - log_gamma_array(alphas).sum()
        + ((alphas - 1.0) * np.log(phis)).sum()
    )


def mean(params: DirichletParams) -> SimplexPoint:
    """Expectation; coordinate i equals alpha_i over the exponent total."""
    return SimplexPoint(params.alphas / params.total)


def sample(params: DirichletParams, rng: np.random.Generator) -> SimplexPoint:
    """One draw from the Dirichlet via the gamma-ratio construction."""
    return SimplexPoint(sample_many(params, rng, 1)[0])


def sample_many(
    params: DirichletParams, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Draw `size` simplex points as a (size, l) array."""
    a = params.alphas
    out = np.empty((size, a.size))
    todo = np.arange(size)
    while todo.size:
        g = rng.standard_gamma(a, size=(todo.size, a.size))
        out[todo] = g
        # a zero gamma draw would put the point on the boundary; redraw
        todo = todo[np.any(g < BOUNDARY_FLOOR, axis=1)]
    return out / out.sum(axis=1, keepdims=True)
