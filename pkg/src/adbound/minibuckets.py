"""Mini-buckets baseline: partition each bucket instead of decomposing.

Factors mentioning the elimination variable are split greedily into
groups whose combined scope stays within the i-bound.  The first group is
projected with the task's true marginalization operator; the others are
projected with min (lower bound), max (upper bound) or the domain mean
(estimate).  Variable order reuses the same fewest-unconnected-pairs
heuristic as the bounding engine so the two are comparable.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .decompose import Direction
from .engine import BoundValue, RunStats
from .errors import ConfigError, InputError
from .graph import choose_elim_var, interaction_graph
from .model import (CombineOp, Factor, MarginalOp, Task, combine_all,
                    constant_factor, marginalize_out)


class MbMode(Enum):
    UPPER = "upper"
    LOWER = "lower"
    ESTIMATE = "estimate"


@dataclass(frozen=True)
class MbConfig:
    i_bound: int
    mode: MbMode

    def __post_init__(self):
        if self.i_bound < 1:
            raise ConfigError("i-bound must be at least 1")


_MODE_DIRECTION = {MbMode.UPPER: Direction.UPPER, MbMode.LOWER: Direction.LOWER,
                   MbMode.ESTIMATE: None}


def mb_partition(bucket: Sequence[Factor], i_bound: int) -> list[list[Factor]]:
    """Greedy first-fit partition keeping each group's scope within i_bound."""
    parts: list[tuple[set[int], list[Factor]]] = []
    for f in bucket:
        scope = set(f.scope)
        if len(scope) > i_bound:
            raise ConfigError(
                f"factor over {len(scope)} variables exceeds the i-bound {i_bound}")
        for part_scope, members in parts:
            if len(part_scope | scope) <= i_bound:
                part_scope |= scope
                members.append(f)
                break
        else:
            parts.append((scope, [f]))
    return [members for _, members in parts]


def _project(combined: Factor, v: int, op: MarginalOp, mode: MbMode,
             card: int) -> Factor:
    if op is not None:
        return marginalize_out(combined, v, op)
    # mean over the bucket variable's values
    summed = marginalize_out(combined, v, MarginalOp.SUM)
    return Factor(summed.scope, summed.values / card)


def mb_run(factors: Sequence[Factor], task: Task, domains: Sequence[int],
           cfg: MbConfig) -> BoundValue:
    """Bucket elimination with mini-bucket approximation.

    Evidence must already be applied.  UPPER output dominates the exact
    answer and LOWER is dominated by it, for all three task types; the
    estimate carries no guarantee.
    """
    n = len(domains)
    for f in factors:
        for v in f.scope:
            if v in task.evidence:
                raise InputError(f"factor scope still mentions evidence variable {v}")

    aux_op = {MbMode.LOWER: MarginalOp.MIN, MbMode.UPPER: MarginalOp.MAX,
              MbMode.ESTIMATE: None}[cfg.mode]
    pool = [f for f in factors if f.scope]
    constants = [f for f in factors if not f.scope]
    removed = set(task.evidence)
    g = interaction_graph(pool, n).without_nodes(removed)
    stats = RunStats()

    while len(g) > 1:
        v = choose_elim_var(g, task.query)
        bucket = [f for f in pool if v in f.scope]
        pool = [f for f in pool if v not in f.scope]
        removed.add(v)
        stats.eliminations += 1

        if not bucket:
            if task.marginal_op is MarginalOp.SUM:
                constants.append(constant_factor(float(domains[v])))
        else:
            parts = mb_partition(bucket, cfg.i_bound)
            for k, part in enumerate(parts):
                combined = combine_all(part, task.combine_op)
                op = task.marginal_op if k == 0 else aux_op
                out = _project(combined, v, op, cfg.mode, domains[v])
                (pool if out.scope else constants).append(out)

        g = interaction_graph(pool, n).without_nodes(removed)

    result = combine_all(pool + constants, task.combine_op)
    if result.scope == ():
        values = np.full(domains[task.query], float(result.values))
    elif result.scope == (task.query,):
        values = result.values
    else:
        raise AssertionError(f"unexpected final scope {result.scope}")
    return BoundValue(values, _MODE_DIRECTION[cfg.mode], stats)
