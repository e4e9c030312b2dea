"""Exact variable elimination over any of the supported semirings.

This is the correctness anchor: the bounding engine and mini-buckets are
validated against it, and it is validated against direct enumeration.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import InputError, ResourceLimitError
from .graph import choose_elim_var, eliminate_node, interaction_graph
from .model import (CombineOp, Factor, MarginalOp, Task, VariableId, combine_all,
                    constant_factor, marginalize_out)

DEFAULT_MAX_ARITY = 24
DEFAULT_MAX_CELLS = 1 << 26


def eliminate_variable(factors: Sequence[Factor], v: VariableId, task: Task,
                       domains: Sequence[int]) -> list[Factor]:
    """Replace all factors mentioning ``v`` with their combined marginal.

    If no factor mentions ``v``, summing it out contributes a constant
    |D_v| (the marginal of the combine identity 1); under MAX and MIN the
    identity marginalizes to itself, so the pool is returned unchanged.
    """
    if v == task.query:
        raise InputError("cannot eliminate the query variable")
    if v in task.evidence:
        raise InputError(f"cannot eliminate evidenced variable {v}")
    mentioning = [f for f in factors if v in f.scope]
    rest = [f for f in factors if v not in f.scope]
    if not mentioning:
        if task.marginal_op is MarginalOp.SUM:
            return rest + [constant_factor(float(domains[v]))]
        return list(factors)
    lam = combine_all(mentioning, task.combine_op)
    return rest + [marginalize_out(lam, v, task.marginal_op)]


def _as_unary(result: Factor, query: VariableId, card: int) -> Factor:
    if result.scope == (query,):
        return result
    if result.scope == ():
        return Factor((query,), np.full(card, float(result.values)))
    raise InputError(f"expected a result on the query, got scope {result.scope}")


def variable_elimination(factors: Sequence[Factor], task: Task,
                         domains: Sequence[int],
                         order: Sequence[VariableId] | None = None,
                         max_arity: int = DEFAULT_MAX_ARITY,
                         max_cells: int = DEFAULT_MAX_CELLS) -> Factor:
    """Eliminate every non-query variable exactly; returns the unary answer.

    Evidence must already have been applied (evidenced variables absent
    from all scopes).  When no order is supplied, variables are picked
    greedily by fewest unconnected neighbor pairs, the same heuristic the
    bounding engine uses.

    Raises ResourceLimitError if an intermediate table would exceed
    ``max_arity`` variables or ``max_cells`` cells.
    """
    n = len(domains)
    to_eliminate = {v for v in range(n) if v != task.query and v not in task.evidence}
    pool = list(factors)
    for f in pool:
        for v in f.scope:
            if v in task.evidence:
                raise InputError(f"factor scope still mentions evidence variable {v}")

    if order is not None:
        if set(order) != to_eliminate or len(order) != len(to_eliminate):
            raise InputError("order must cover exactly the non-query, non-evidence variables")
        schedule = list(order)
    else:
        schedule = None
        g = interaction_graph(pool, n).without_nodes(task.evidence)

    remaining = len(to_eliminate)
    while remaining:
        if schedule is not None:
            v = schedule[len(to_eliminate) - remaining]
        else:
            v = choose_elim_var(g, task.query)
            g, _ = eliminate_node(g, v)
        union: set[int] = set()
        for f in pool:
            if v in f.scope:
                union.update(f.scope)
        union.discard(v)
        if len(union) > max_arity:
            raise ResourceLimitError(
                f"eliminating {v} would create a table over {len(union)} variables")
        cells = int(np.prod([domains[u] for u in union])) if union else 1
        if cells > max_cells:
            raise ResourceLimitError(
                f"eliminating {v} would create a table of {cells} cells")
        pool = eliminate_variable(pool, v, task, domains)
        remaining -= 1

    result = combine_all(pool, task.combine_op)
    return _as_unary(result, task.query, domains[task.query])
