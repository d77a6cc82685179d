"""Dirichlet-multinomial scoring of discrete network structures.

Node priors are derived by marginalizing a single joint base measure
scaled by an equivalent sample size, which is what makes the score
agree across equivalent structures. An incomplete "equivalent database"
is handled by exact enumeration over completions, producing a mixture
of Dirichlet posteriors.
"""

import graphlib
import itertools
from dataclasses import dataclass

import numpy as np

from .dirichlet import sample_many
from .exceptions import (
    CapacityError,
    CompletenessError,
    ConsistencyError,
    DatasetFormatError,
    DomainError,
)
from .gammafn import log_gamma_array
from .reparam import TableDirichletParams

MISSING = None
MAX_MISSING_CELLS = 12
MAX_COMPLETIONS = 4096


@dataclass(frozen=True)
class DiscreteDataset:
    """Named finite-arity variables plus cases; a cell is a value index
    or None for missing."""

    variables: tuple  # of (name, arity)
    cases: tuple  # of tuples, one entry per variable

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "cases", tuple(tuple(c) for c in self.cases))
        names = [n for n, _ in self.variables]
        if len(set(names)) != len(names):
            raise DomainError("variable names must be unique")
        for name, arity in self.variables:
            if arity < 2:
                raise DomainError(f"variable {name!r} needs arity >= 2")
        for idx, case in enumerate(self.cases):
            if len(case) != len(self.variables):
                raise DomainError(f"case {idx + 1} has the wrong width")
            for (name, arity), val in zip(self.variables, case):
                if val is MISSING:
                    continue
                if not isinstance(val, (int, np.integer)) or not 0 <= val < arity:
                    raise DomainError(
                        f"case {idx + 1}: value {val!r} invalid for {name!r}"
                    )

    @property
    def names(self) -> tuple:
        return tuple(n for n, _ in self.variables)

    @property
    def arities(self) -> tuple:
        return tuple(a for _, a in self.variables)

    def is_complete(self) -> bool:
        return all(MISSING not in case for case in self.cases)

    def missing_cells(self) -> list:
        return [
            (ci, vi)
            for ci, case in enumerate(self.cases)
            for vi, val in enumerate(case)
            if val is MISSING
        ]

    def concat(self, other: "DiscreteDataset") -> "DiscreteDataset":
        if self.variables != other.variables:
            raise DomainError("datasets must share the same variables")
        return DiscreteDataset(self.variables, self.cases + other.cases)

    @classmethod
    def from_text(cls, text: str) -> "DiscreteDataset":
        lines = text.splitlines()
        if not lines or not lines[0].strip():
            raise DatasetFormatError(1, "expected variable declarations")
        variables = []
        for part in lines[0].split(","):
            part = part.strip()
            if ":" not in part:
                raise DatasetFormatError(1, f"expected name:arity, got {part!r}")
            name, _, arity_text = part.partition(":")
            try:
                arity = int(arity_text)
            except ValueError:
                raise DatasetFormatError(1, f"bad arity {arity_text!r}") from None
            variables.append((name.strip(), arity))
        cases = []
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip():
                continue
            cells = [c.strip() for c in line.split(",")]
            if len(cells) != len(variables):
                raise DatasetFormatError(
                    lineno,
                    f"expected {len(variables)} cells, got {len(cells)}",
                )
            case = []
            for cell, (name, arity) in zip(cells, variables):
                if cell == "?":
                    case.append(MISSING)
                    continue
                try:
                    val = int(cell)
                except ValueError:
                    raise DatasetFormatError(
                        lineno, f"bad value {cell!r} for {name!r}"
                    ) from None
                if not 0 <= val < arity:
                    raise DatasetFormatError(
                        lineno, f"value {val} out of range for {name!r}"
                    )
                case.append(val)
            cases.append(tuple(case))
        try:
            return cls(tuple(variables), tuple(cases))
        except DomainError as exc:
            raise DatasetFormatError(1, str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "DiscreteDataset":
        with open(path, "r", encoding="utf-8") as handle:
            return cls.from_text(handle.read())

    def to_text(self) -> str:
        head = ",".join(f"{n}:{a}" for n, a in self.variables)
        rows = [
            ",".join("?" if v is MISSING else str(v) for v in case)
            for case in self.cases
        ]
        return "\n".join([head] + rows) + "\n"


@dataclass(frozen=True)
class NetworkStructure:
    """A DAG over named nodes."""

    nodes: tuple
    edges: tuple  # of (parent, child)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        known = set(self.nodes)
        graph = {n: set() for n in self.nodes}
        for parent, child in self.edges:
            if parent not in known or child not in known:
                raise DomainError(f"edge {parent}->{child} uses unknown node")
            graph[child].add(parent)
        try:
            tuple(graphlib.TopologicalSorter(graph).static_order())
        except graphlib.CycleError as exc:
            raise DomainError(f"structure contains a cycle: {exc.args[1]}") from None

    def parents(self, node: str) -> tuple:
        if node not in self.nodes:
            raise DomainError(f"unknown node {node!r}")
        return tuple(p for p in self.nodes if (p, node) in set(self.edges))


@dataclass(frozen=True)
class BDePrior:
    """Equivalent sample size plus a positive normalized joint base table
    over named variables.

    The Dirichlet exponent of a joint configuration is ess * base[config];
    the base table's axes follow the variable order.
    """

    ess: float
    base: np.ndarray
    variables: tuple  # of (name, arity), one per base axis

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float)
        object.__setattr__(self, "variables", tuple(self.variables))
        if self.ess <= 0.0:
            raise DomainError("equivalent sample size must be positive")
        if np.any(base <= 0.0) or not np.all(np.isfinite(base)):
            raise DomainError("base table must be strictly positive")
        if abs(float(base.sum()) - 1.0) > 1e-12:
            raise DomainError("base table must sum to 1")
        if base.shape != tuple(a for _, a in self.variables):
            raise DomainError("base table shape must match the variable arities")
        base = base.copy()
        base.setflags(write=False)
        object.__setattr__(self, "base", base)

    @property
    def names(self) -> tuple:
        return tuple(n for n, _ in self.variables)

    @classmethod
    def uniform(cls, dataset: DiscreteDataset, ess: float = 1.0) -> "BDePrior":
        shape = dataset.arities
        return cls(
            ess=ess,
            base=np.full(shape, 1.0 / int(np.prod(shape))),
            variables=dataset.variables,
        )


@dataclass(frozen=True)
class MixturePrior:
    """A finite mixture of joint table Dirichlets."""

    weights: np.ndarray
    components: tuple  # of TableDirichletParams

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size != len(self.components) or w.size == 0:
            raise DomainError("need one weight per component")
        if np.any(w <= 0.0) or abs(float(w.sum()) - 1.0) > 1e-12:
            raise DomainError("weights must be positive and sum to 1")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "components", tuple(self.components))


# ---------------------------------------------------------------------------
# Complete-data scores
# ---------------------------------------------------------------------------


def _require_complete(data: DiscreteDataset, what: str):
    for idx, case in enumerate(data.cases):
        if MISSING in case:
            raise CompletenessError(f"{what} requires complete cases; case "
                                    f"{idx + 1} has missing values")


def _check_match(structure: NetworkStructure, data: DiscreteDataset):
    if tuple(structure.nodes) != data.names:
        raise ConsistencyError(
            f"structure nodes {structure.nodes} do not match dataset "
            f"variables {data.names}"
        )


def _check_prior(prior: BDePrior, data: DiscreteDataset):
    if prior.variables != data.variables:
        raise ConsistencyError("prior variables do not match the dataset")


def _dirichlet_multinomial(alphas: np.ndarray, counts: np.ndarray) -> float:
    """Log marginal likelihood of counts under a Dirichlet prior."""
    alphas = alphas.ravel()
    counts = counts.ravel()
    return float(
        log_gamma_array(alphas.sum())
        - log_gamma_array(alphas.sum() + counts.sum())
        + (log_gamma_array(alphas + counts) - log_gamma_array(alphas)).sum()
    )


def joint_counts(data: DiscreteDataset) -> np.ndarray:
    counts = np.zeros(data.arities)
    for case in data.cases:
        counts[tuple(case)] += 1.0
    return counts


def joint_log_score(data: DiscreteDataset, prior: BDePrior) -> float:
    """Log marginal likelihood of the full joint table; the oracle that
    every complete structure's factorized score must equal."""
    _require_complete(data, "joint scoring")
    _check_prior(prior, data)
    return _dirichlet_multinomial(prior.ess * prior.base, joint_counts(data))


def _node_alphas(structure: NetworkStructure, prior: BDePrior, node: str):
    """Exponents shaped (parent arities..., node arity) plus the kept axes."""
    names = prior.names
    node_idx = names.index(node)
    parent_idx = [names.index(p) for p in structure.parents(node)]
    keep = parent_idx + [node_idx]
    drop = tuple(i for i in range(len(names)) if i not in keep)
    marg = prior.base.sum(axis=drop) if drop else prior.base
    # summed axes vanish in index order; permute survivors to parents-then-node
    survivors = sorted(keep)
    perm = [survivors.index(i) for i in keep]
    return prior.ess * np.transpose(marg, perm), keep


def _node_family_tables(
    structure: NetworkStructure, data: DiscreteDataset, prior: BDePrior, node: str
):
    """(alpha, counts) arrays shaped (parent arities..., node arity)."""
    alphas, keep = _node_alphas(structure, prior, node)
    counts = np.zeros_like(alphas)
    for case in data.cases:
        counts[tuple(case[i] for i in keep)] += 1.0
    return alphas, counts


def bde_log_score(
    structure: NetworkStructure, data: DiscreteDataset, prior: BDePrior
) -> float:
    """Log marginal likelihood of complete data under the structure.

    One Dirichlet-multinomial term per node and parent configuration,
    with exponents marginalized from the scaled joint base.
    """
    _require_complete(data, "structure scoring")
    _check_match(structure, data)
    _check_prior(prior, data)
    total = 0.0
    for node in structure.nodes:
        alphas, counts = _node_family_tables(structure, data, prior, node)
        node_arity = alphas.shape[-1]
        flat_a = alphas.reshape(-1, node_arity)
        flat_c = counts.reshape(-1, node_arity)
        for a_row, c_row in zip(flat_a, flat_c):
            total += _dirichlet_multinomial(a_row, c_row)
    return total


def modular_node_prior(structure: NetworkStructure, prior: BDePrior, node: str):
    """Per-parent-configuration Dirichlet exponents for one node.

    A pure function of (node, parent set, prior): structures sharing the
    parent set receive identical parameters.
    """
    from .dirichlet import DirichletParams

    if tuple(structure.nodes) != prior.names:
        raise ConsistencyError("structure nodes must match the prior's variables")
    alphas, _ = _node_alphas(structure, prior, node)
    node_arity = alphas.shape[-1]
    return tuple(
        DirichletParams(row) for row in alphas.reshape(-1, node_arity)
    )


@dataclass(frozen=True)
class EquivalenceReport:
    score_forward: float
    score_reverse: float
    difference: float
    joint_score: float


def equivalence_check(data: DiscreteDataset, prior: BDePrior) -> EquivalenceReport:
    """Scores of the two complete two-variable structures plus the joint
    oracle they both must equal."""
    if len(data.variables) != 2:
        raise DomainError("equivalence checks are for two-variable datasets")
    first, second = data.names
    forward = NetworkStructure(data.names, ((first, second),))
    reverse = NetworkStructure(data.names, ((second, first),))
    s_fwd = bde_log_score(forward, data, prior)
    s_rev = bde_log_score(reverse, data, prior)
    return EquivalenceReport(
        score_forward=s_fwd,
        score_reverse=s_rev,
        difference=s_fwd - s_rev,
        joint_score=joint_log_score(data, prior),
    )


# ---------------------------------------------------------------------------
# Incomplete equivalent databases
# ---------------------------------------------------------------------------


def _completions(d_e: DiscreteDataset):
    """Yield complete datasets, one per assignment of the missing cells."""
    holes = d_e.missing_cells()
    if len(holes) > MAX_MISSING_CELLS:
        raise CapacityError(
            f"{len(holes)} missing cells exceed the exact-enumeration "
            f"bound of {MAX_MISSING_CELLS}"
        )
    arities = d_e.arities
    n_completions = 1
    for _, vi in holes:
        n_completions *= arities[vi]
        if n_completions > MAX_COMPLETIONS:
            raise CapacityError(
                f"more than {MAX_COMPLETIONS} completions required"
            )
    if not holes:
        yield d_e
        return
    base_cases = [list(c) for c in d_e.cases]
    for fill in itertools.product(*[range(arities[vi]) for _, vi in holes]):
        cases = [list(c) for c in base_cases]
        for (ci, vi), val in zip(holes, fill):
            cases[ci][vi] = val
        yield DiscreteDataset(d_e.variables, tuple(tuple(c) for c in cases))


def equivalent_database_score(
    real_data: DiscreteDataset,
    d_e: DiscreteDataset,
    prior: BDePrior,
    structure: NetworkStructure = None,
) -> float:
    """Log score of d_e union real_data, marginalizing d_e's missing cells.

    Uses the joint-table score by default (what every complete structure
    equals); pass a structure to score that factorization instead.
    """
    _require_complete(real_data, "the observed database")
    if real_data.variables != d_e.variables:
        raise ConsistencyError("datasets must share the same variables")
    scores = []
    for completed in _completions(d_e):
        merged = completed.concat(real_data)
        if structure is None:
            scores.append(joint_log_score(merged, prior))
        else:
            scores.append(bde_log_score(structure, merged, prior))
    return float(np.logaddexp.reduce(np.array(scores)))


def posterior_mixture(d_e: DiscreteDataset, prior: BDePrior) -> MixturePrior:
    """Posterior over joint parameters after an incomplete database.

    One Dirichlet component per completion, weighted by the completion's
    marginal likelihood. Restricted to two-variable datasets, where
    components are k x n exponent tables.
    """
    if len(d_e.variables) != 2:
        raise DomainError("mixture posteriors are built for two-variable data")
    alphas = prior.ess * prior.base
    log_weights = []
    components = []
    for completed in _completions(d_e):
        log_weights.append(joint_log_score(completed, prior))
        components.append(
            TableDirichletParams(alphas + joint_counts(completed))
        )
    lw = np.array(log_weights)
    lw -= np.logaddexp.reduce(lw)
    return MixturePrior(weights=np.exp(lw), components=tuple(components))


def mixture_log_score(mix: MixturePrior, data: DiscreteDataset) -> float:
    """Log predictive score of complete data under a Dirichlet mixture."""
    _require_complete(data, "mixture scoring")
    counts = joint_counts(data)
    terms = [
        float(np.log(w)) + _dirichlet_multinomial(comp.alphas, counts)
        for w, comp in zip(mix.weights, mix.components)
    ]
    return float(np.logaddexp.reduce(np.array(terms)))


def sample_mixture_tables(
    mix: MixturePrior, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Tables drawn from the mixture, shape (size, k, n)."""
    from .dirichlet import DirichletParams

    k, n = mix.components[0].shape
    choices = rng.choice(len(mix.components), size=size, p=mix.weights)
    out = np.empty((size, k, n))
    for ci in range(len(mix.components)):
        rows = np.flatnonzero(choices == ci)
        if rows.size:
            flat = sample_many(
                DirichletParams(mix.components[ci].alphas.ravel()), rng, rows.size
            )
            out[rows] = flat.reshape(-1, k, n)
    return out


def mixture_independence_violation(
    mix: MixturePrior,
    n_samples: int,
    rng: np.random.Generator,
    n_perm: int = 999,
):
    """Decompose mixture-sampled tables and test the blocks for mutual
    independence; separated components are expected to be rejected."""
    from .independence import mutual_independence_report, simplex_block

    tables = sample_mixture_tables(mix, rng, n_samples)
    marg = tables.sum(axis=2)
    blocks = [simplex_block(marg, "marginal")]
    for i in range(tables.shape[1]):
        cond = tables[:, i, :] / marg[:, i][:, None]
        blocks.append(simplex_block(cond, f"conditional-{i + 1}"))
    return mutual_independence_report(blocks, n_perm, rng)
