"""The cross-ratio-modulated Dirichlet family on 2 x 2 tables.

Densities of the form

    K * prod_ij theta_ij^(alpha_ij - 1) * H(theta11 theta22 / (theta12 theta21))

with H positive, bounded, and integrable against the Dirichlet base.
Constant H recovers the plain joint Dirichlet. Non-constant H keeps the
marginal block independent of the conditional block (global parameter
independence) while coupling the conditionals to each other, which is
exactly what the rectangle residuals below demonstrate.
"""

import math
import threading

import numpy as np

from .exceptions import DomainError, EnvelopeError, IntegrationError
from .funceq import BinaryPoint, table_from_binary_point
from .reparam import Axis, ProbTable, TableDirichletParams

_SPOTCHECK_POINTS = 10_000
_SPOTCHECK_SEED = 20_240_817
_MIN_ACCEPT_RATE = 1e-4


def log_ratio_squared_modulator(lam: float):
    """Built-in family H(r) = exp(-lam * (ln r)^2), bounded by 1.

    Symmetric under r <-> 1/r; lam = 0 gives a constant modulator and so
    a plain Dirichlet law.
    """
    if lam < 0.0:
        raise DomainError("lam must be >= 0")

    def modulator(r):
        return np.exp(-lam * np.log(r) ** 2)

    return modulator


class HyperMarkov2x2:
    """A normalizable cross-ratio-modulated law on 2 x 2 tables.

    The modulator must be vectorized (accept ndarray input) and bounded
    by `modulator_sup`; the bound is spot-checked on construction and
    used as the rejection-sampling envelope.
    """

    def __init__(self, alphas, modulator, modulator_sup: float = 1.0):
        alphas = np.asarray(alphas, dtype=float)
        if alphas.shape != (2, 2) or np.any(alphas <= 0.0):
            raise DomainError("alphas must be a positive 2 x 2 array")
        if not (np.isfinite(modulator_sup) and modulator_sup > 0.0):
            raise DomainError("modulator_sup must be finite and positive")
        self.alphas = alphas.copy()
        self.alphas.setflags(write=False)
        self.modulator = modulator
        self.modulator_sup = float(modulator_sup)
        self._log_k = None
        self._lock = threading.Lock()
        self._spot_check_bound()

    def _spot_check_bound(self):
        rng = np.random.default_rng(_SPOTCHECK_SEED)
        tables = rng.dirichlet(self.alphas.ravel(), size=_SPOTCHECK_POINTS)
        r = (tables[:, 0] * tables[:, 3]) / (tables[:, 1] * tables[:, 2])
        h = np.asarray(self.modulator(r), dtype=float)
        # exact zeros are tolerated: a positive modulator may underflow
        # at extreme cross ratios without invalidating the envelope
        if np.any(~np.isfinite(h)) or np.any(h < 0.0):
            raise EnvelopeError("modulator must be positive and finite")
        if np.all(h == 0.0):
            raise EnvelopeError("modulator vanishes at every sampled point")
        if np.any(h > self.modulator_sup * (1.0 + 1e-12)):
            raise EnvelopeError(
                f"modulator exceeds its stated bound {self.modulator_sup!r}"
            )

    # -- densities ---------------------------------------------------------

    def _unnormalized_log_density_grid(self, y, z, w):
        """Vectorized log density (without K) in transformed coordinates,
        including the y(1-y) volume factor."""
        a = self.alphas
        t11, t21 = y * z, y * (1.0 - z)
        t12, t22 = (1.0 - y) * w, (1.0 - y) * (1.0 - w)
        r = (t11 * t22) / (t12 * t21)
        with np.errstate(divide="ignore"):
            # a modulator may underflow to 0; exp(-inf) = 0 is the right limit
            log_h = np.log(self.modulator(r))
        return (
            (a[0, 0] - 1.0) * np.log(t11)
            + (a[1, 0] - 1.0) * np.log(t21)
            + (a[0, 1] - 1.0) * np.log(t12)
            + (a[1, 1] - 1.0) * np.log(t22)
            + log_h
            + np.log(y * (1.0 - y))
        )

    @property
    def log_k(self) -> float:
        """Log normalization constant, computed once on demand."""
        if self._log_k is None:
            with self._lock:
                if self._log_k is None:
                    self._log_k = self._normalize()
        return self._log_k

    def _normalize(self, tol: float = 1e-6) -> float:
        nodes, weights = np.polynomial.legendre.leggauss(20)
        nodes = 0.5 * (nodes + 1.0)
        weights = 0.5 * weights
        previous = None
        for panels in (1, 2, 4, 8, 16):
            u = (np.arange(panels)[:, None] + nodes[None, :]).ravel() / panels
            wts = np.tile(weights / panels, panels)
            # smoothstep substitution flattens endpoint power singularities
            t = u * u * (3.0 - 2.0 * u)
            jac = 6.0 * u * (1.0 - u)
            z = t[None, :, None]
            w = t[None, None, :]
            zw_weight = np.outer(wts * jac, wts * jac)[None, :, :]
            total = 0.0
            # stream over the first axis to bound memory at high refinement
            chunk = max(1, 2048 // t.size)
            for start in range(0, t.size, chunk):
                stop = min(start + chunk, t.size)
                y = t[start:stop, None, None]
                vals = np.exp(self._unnormalized_log_density_grid(y, z, w))
                vals *= zw_weight
                total += float(vals.sum(axis=(1, 2)) @ (wts * jac)[start:stop])
            if previous is not None and abs(total - previous) <= tol:
                return -math.log(total)
            previous = total
        raise IntegrationError(
            "tensor quadrature did not converge; is the modulator integrable?"
        )

    # -- evaluation --------------------------------------------------------

    def log_density(self, table: ProbTable) -> float:
        """Log density of the law at an interior 2 x 2 table."""
        if table.shape != (2, 2):
            raise DomainError("this family lives on 2 x 2 tables")
        t = table.entries
        r = float(t[0, 0] * t[1, 1] / (t[0, 1] * t[1, 0]))
        h = float(self.modulator(np.asarray(r)))
        if not (np.isfinite(h) and h > 0.0):
            raise DomainError("modulator is not positive at the cross ratio")
        return (
            self.log_k
            + float(((self.alphas - 1.0) * np.log(t)).sum())
            + math.log(h)
        )

    def transformed_log_density(
        self, p: BinaryPoint, axis: Axis = Axis.COLUMNS
    ) -> float:
        """Log density of the free coordinates of a decomposition.

        With the column axis these are (y, z, w) = (first column
        marginal, first-row conditional per column); the volume factor of
        the coordinate change contributes ln[y(1-y)].
        """
        table = table_from_binary_point(p)
        if axis is Axis.ROWS:
            table = ProbTable(table.entries.T)
        return self.log_density(table) + math.log(p.y * (1.0 - p.y))

    def transformed_log_evaluator(self, axis: Axis = Axis.COLUMNS):
        """Callable over coordinate triples, for rectangle residuals."""

        def logf(coords) -> float:
            y, z, w = (float(c) for c in coords)
            return self.transformed_log_density(BinaryPoint(y, z, w), axis)

        return logf

    # -- sampling ----------------------------------------------------------

    def sample_tables(self, rng: np.random.Generator, count: int):
        """Exact rejection sampling against the Dirichlet envelope.

        Returns (tables, acceptance_rate) with tables of shape
        (count, 2, 2).
        """
        out = np.empty((count, 2, 2))
        have = 0
        proposed = 0
        accepted = 0
        flat = self.alphas.ravel()
        while have < count:
            batch = max(1024, count - have)
            cand = rng.dirichlet(flat, size=batch)
            r = (cand[:, 0] * cand[:, 3]) / (cand[:, 1] * cand[:, 2])
            h = np.asarray(self.modulator(r), dtype=float)
            accept = rng.uniform(size=batch) * self.modulator_sup < h
            proposed += batch
            accepted += int(np.count_nonzero(accept))
            take = cand[accept][: count - have]
            out[have : have + take.shape[0]] = take.reshape(-1, 2, 2)
            have += take.shape[0]
            if proposed >= 1_000_000 and accepted / proposed < _MIN_ACCEPT_RATE:
                raise EnvelopeError(
                    f"acceptance rate {accepted / proposed:.2e} below "
                    f"{_MIN_ACCEPT_RATE}; the stated bound is too loose"
                )
        return out, accepted / proposed

    def sample(self, rng: np.random.Generator) -> ProbTable:
        tables, _ = self.sample_tables(rng, 1)
        return ProbTable(tables[0])


def dirichlet_reference(alphas) -> TableDirichletParams:
    """The joint Dirichlet with the same exponents, for reduction checks."""
    return TableDirichletParams(np.asarray(alphas, dtype=float))


def rectangle_residual(logf, split, qa, qb) -> float:
    """Interchange residual |f(a,b) + f(a',b') - f(a,b') - f(a',b)|.

    `split` is a pair of index tuples partitioning the coordinates;
    `qa` and `qb` each hold two value tuples for their block. Zero for
    every quadruple iff logf separates additively across the split.
    """
    idx_a, idx_b = split
    dim = len(idx_a) + len(idx_b)
    if sorted(idx_a + idx_b) != list(range(dim)):
        raise DomainError("split must partition the coordinate indices")

    def assemble(a_vals, b_vals):
        coords = [0.0] * dim
        for i, v in zip(idx_a, a_vals):
            coords[i] = float(v)
        for i, v in zip(idx_b, b_vals):
            coords[i] = float(v)
        return coords

    (a1, a2), (b1, b2) = qa, qb
    return abs(
        logf(assemble(a1, b1))
        + logf(assemble(a2, b2))
        - logf(assemble(a1, b2))
        - logf(assemble(a2, b1))
    )


def max_rectangle_residual(
    logf,
    split,
    rng: np.random.Generator,
    n_quadruples: int,
    margin: float = 0.01,
) -> float:
    """Max interchange residual over random interior quadruples."""
    idx_a, idx_b = split
    worst = 0.0
    for _ in range(n_quadruples):
        qa = rng.uniform(margin, 1.0 - margin, size=(2, len(idx_a)))
        qb = rng.uniform(margin, 1.0 - margin, size=(2, len(idx_b)))
        worst = max(worst, rectangle_residual(logf, split, qa, qb))
    return worst
