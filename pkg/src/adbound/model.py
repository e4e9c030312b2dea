"""Factor tables, belief networks, constraint problems and query tasks.

A Factor is a dense table over an ordered variable scope, stored row-major
with the last scope variable varying fastest.  Everything downstream
(elimination, bounding, mini-buckets) is written in terms of three factor
operations: evidence restriction, pairwise combination and single-variable
marginalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError

VariableId = int


class MarginalOp(Enum):
    SUM = "sum"
    MAX = "max"
    MIN = "min"


class CombineOp(Enum):
    PRODUCT = "product"
    SUM = "sum"


_REDUCERS = {MarginalOp.SUM: np.sum, MarginalOp.MAX: np.amax, MarginalOp.MIN: np.amin}


@dataclass(frozen=True)
class Factor:
    """Dense real table over an ordered scope of variables.

    ``values`` has one axis per scope variable, in scope order; an empty
    scope is a 0-d array (a constant).  Instances are immutable: the array
    is marked read-only on construction.
    """

    scope: tuple[VariableId, ...]
    values: np.ndarray

    def __post_init__(self):
        scope = tuple(self.scope)
        if len(set(scope)) != len(scope):
            raise InputError(f"duplicate variable in scope {scope}")
        values = np.asarray(self.values, dtype=float)
        if values.ndim != len(scope):
            raise InputError(
                f"table has {values.ndim} axes but scope has {len(scope)} variables")
        if not np.all(np.isfinite(values)):
            raise InputError("factor values must be finite")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_flat(cls, scope: Sequence[VariableId], cards: Sequence[int],
                  flat: Sequence[float]) -> "Factor":
        """Build from a flat row-major value list (last variable fastest)."""
        cards = tuple(int(c) for c in cards)
        flat = np.asarray(flat, dtype=float)
        n_cells = int(np.prod(cards)) if cards else 1
        if flat.size != n_cells:
            raise InputError(f"expected {n_cells} values for cards {cards}, got {flat.size}")
        return cls(tuple(scope), flat.reshape(cards))

    @property
    def cards(self) -> tuple[int, ...]:
        return self.values.shape

    def card(self, v: VariableId) -> int:
        return self.values.shape[self.scope.index(v)]

    def mentions(self, v: VariableId) -> bool:
        return v in self.scope

    @property
    def flat(self) -> np.ndarray:
        """Row-major flat view of the table."""
        return self.values.reshape(-1)

    def __repr__(self):
        return f"Factor(scope={self.scope}, cards={self.cards})"


def constant_factor(value: float) -> Factor:
    """Empty-scope factor holding a single constant."""
    return Factor((), np.asarray(float(value)))


def linear_index(scope_cards: Sequence[int], assignment: Sequence[int]) -> int:
    """Row-major offset of ``assignment`` in a table with the given cardinalities."""
    if len(scope_cards) != len(assignment):
        raise InputError(
            f"assignment length {len(assignment)} != scope length {len(scope_cards)}")
    offset = 0
    for card, value in zip(scope_cards, assignment):
        if not 0 <= value < card:
            raise InputError(f"value index {value} out of range for cardinality {card}")
        offset = offset * card + value
    return offset


def restrict_evidence(f: Factor, evidence: Mapping[VariableId, int]) -> Factor:
    """Slice out evidenced variables, keeping the consistent sub-table."""
    if not any(v in evidence for v in f.scope):
        return f
    index = []
    new_scope = []
    for axis, v in enumerate(f.scope):
        if v in evidence:
            value = evidence[v]
            if not 0 <= value < f.values.shape[axis]:
                raise InputError(
                    f"evidence value {value} out of range for variable {v}")
            index.append(value)
        else:
            index.append(slice(None))
            new_scope.append(v)
    return Factor(tuple(new_scope), f.values[tuple(index)])


def _aligned(f: Factor, target_scope: tuple[VariableId, ...]) -> np.ndarray:
    """View of ``f.values`` broadcastable against the target scope's table."""
    position = {v: i for i, v in enumerate(f.scope)}
    axes = [position[v] for v in target_scope if v in position]
    arr = f.values.transpose(axes)
    shape = tuple(f.card(v) if v in position else 1 for v in target_scope)
    return arr.reshape(shape)


def combine(f: Factor, g: Factor, op: CombineOp) -> Factor:
    """Cell-wise ``op`` of two factors over the union scope.

    The result scope is f's scope followed by g's variables not already
    present.
    """
    for v in f.scope:
        if v in g.scope and f.card(v) != g.card(v):
            raise InputError(
                f"variable {v} has cardinality {f.card(v)} in one factor "
                f"and {g.card(v)} in the other")
    scope = f.scope + tuple(v for v in g.scope if v not in f.scope)
    fa = _aligned(f, scope)
    ga = _aligned(g, scope)
    values = fa * ga if op is CombineOp.PRODUCT else fa + ga
    return Factor(scope, values)


def combine_all(factors: Iterable[Factor], op: CombineOp) -> Factor:
    """Fold ``combine`` over a factor collection (identity constant if empty)."""
    result = None
    for f in factors:
        result = f if result is None else combine(result, f, op)
    if result is None:
        return constant_factor(1.0 if op is CombineOp.PRODUCT else 0.0)
    return result


def marginalize_out(f: Factor, v: VariableId, op: MarginalOp) -> Factor:
    """Reduce variable ``v`` out of ``f`` with the given marginalization operator."""
    if v not in f.scope:
        raise InputError(f"variable {v} not in scope {f.scope}")
    axis = f.scope.index(v)
    values = _REDUCERS[op](f.values, axis=axis)
    scope = tuple(u for u in f.scope if u != v)
    return Factor(scope, values)


@dataclass(frozen=True)
class Task:
    """Query semantics: semiring pair, query variable and evidence.

    Permitted combinations are (SUM, PRODUCT) for belief inference,
    (MAX, PRODUCT) for MPE and (MIN, SUM) for MAX-CSP.
    """

    marginal_op: MarginalOp
    combine_op: CombineOp
    query: VariableId
    evidence: Mapping[VariableId, int] = field(default_factory=dict)

    _PERMITTED = {
        (MarginalOp.SUM, CombineOp.PRODUCT),
        (MarginalOp.MAX, CombineOp.PRODUCT),
        (MarginalOp.MIN, CombineOp.SUM),
    }

    def __post_init__(self):
        if (self.marginal_op, self.combine_op) not in self._PERMITTED:
            raise InputError(
                f"unsupported semiring ({self.marginal_op}, {self.combine_op})")
        if self.query in self.evidence:
            raise InputError(f"query variable {self.query} is evidenced")
        object.__setattr__(self, "evidence", dict(self.evidence))

    @classmethod
    def belief(cls, query: VariableId, evidence: Mapping[VariableId, int] | None = None):
        return cls(MarginalOp.SUM, CombineOp.PRODUCT, query, evidence or {})

    @classmethod
    def mpe(cls, query: VariableId, evidence: Mapping[VariableId, int] | None = None):
        return cls(MarginalOp.MAX, CombineOp.PRODUCT, query, evidence or {})

    @classmethod
    def maxcsp(cls, query: VariableId, evidence: Mapping[VariableId, int] | None = None):
        return cls(MarginalOp.MIN, CombineOp.SUM, query, evidence or {})

    @property
    def combine_identity(self) -> float:
        return 1.0 if self.combine_op is CombineOp.PRODUCT else 0.0


CPT_NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class BeliefNetwork:
    """DAG-factorized joint distribution: per-variable CPTs over (parents, child)."""

    domains: tuple[int, ...]
    parents: tuple[tuple[VariableId, ...], ...]
    cpts: tuple[Factor, ...]

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(int(c) for c in self.domains))
        object.__setattr__(self, "parents", tuple(tuple(p) for p in self.parents))
        object.__setattr__(self, "cpts", tuple(self.cpts))
        n = len(self.domains)
        if not (len(self.parents) == len(self.cpts) == n):
            raise InputError("domains, parents and cpts must align per variable")
        self._check_acyclic()
        for child, (pa, cpt) in enumerate(zip(self.parents, self.cpts)):
            expected = tuple(pa) + (child,)
            if cpt.scope != expected:
                raise InputError(
                    f"CPT scope {cpt.scope} for variable {child}, expected {expected}")
            if cpt.cards != tuple(self.domains[v] for v in expected):
                raise InputError(f"CPT cards mismatch domains for variable {child}")
            sums = cpt.values.sum(axis=-1)
            if not np.allclose(sums, 1.0, rtol=0.0, atol=CPT_NORMALIZATION_TOL):
                raise InputError(f"CPT for variable {child} does not normalize")

    def _check_acyclic(self):
        n = len(self.domains)
        state = [0] * n  # 0 unseen, 1 on stack, 2 done
        for root in range(n):
            if state[root]:
                continue
            stack = [(root, iter(self.parents[root]))]
            state[root] = 1
            while stack:
                node, it = stack[-1]
                advanced = False
                for p in it:
                    if not 0 <= p < n:
                        raise InputError(f"parent {p} out of range")
                    if state[p] == 1:
                        raise InputError("parent relation contains a cycle")
                    if state[p] == 0:
                        state[p] = 1
                        stack.append((p, iter(self.parents[p])))
                        advanced = True
                        break
                if not advanced:
                    state[node] = 2
                    stack.pop()

    @property
    def n_vars(self) -> int:
        return len(self.domains)

    def factors(self) -> list[Factor]:
        return list(self.cpts)


@dataclass(frozen=True)
class CspProblem:
    """Constraint problem: 0/1 tables marking violated assignments with 1."""

    domains: tuple[int, ...]
    constraints: tuple[Factor, ...]

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(int(c) for c in self.domains))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        n = len(self.domains)
        for c in self.constraints:
            if not c.scope:
                raise InputError("constraint scope must be non-empty")
            if any(not 0 <= v < n for v in c.scope):
                raise InputError(f"constraint scope {c.scope} outside variable set")
            if c.cards != tuple(self.domains[v] for v in c.scope):
                raise InputError("constraint cards mismatch domains")
            if not np.all((c.values == 0.0) | (c.values == 1.0)):
                raise InputError("constraint tables must be 0/1 valued")

    @property
    def n_vars(self) -> int:
        return len(self.domains)

    def factors(self) -> list[Factor]:
        return list(self.constraints)
