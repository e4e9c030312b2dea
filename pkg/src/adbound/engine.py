"""Width-bounded elimination with decomposition fallback.

The loop mirrors exact elimination: pick the cheapest variable, combine
and marginalize the factors that mention it, update the graph.  Whenever
the new fill edges push the graph's width past the i-bound, just-added
edges are deleted until the width recovers, and the oversized elimination
result is replaced by an optimized bound over the maximal cliques of its
scope in the pruned graph.  Because both combination operators are
monotone, cell-wise domination propagates to the final query values, so
an UPPER run is a guaranteed upper bound and a LOWER run a guaranteed
lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .decompose import (DecomposeConstants, DecompositionRequest, Direction,
                        product_decompose, sum_decompose)
from .errors import ConfigError, InputError, UndefinedConditionalError
from .graph import (InteractionGraph, choose_elim_var, eliminate_node,
                    interaction_graph, maximal_cliques, prune_new_edges, width)
from .model import (CombineOp, Factor, MarginalOp, Task, combine_all,
                    constant_factor, marginalize_out)


@dataclass(frozen=True)
class AdConfig:
    i_bound: int
    direction: Direction
    decompose_consts: DecomposeConstants = DecomposeConstants()

    def __post_init__(self):
        if self.i_bound < 1:
            raise ConfigError("i-bound must be at least 1")


@dataclass
class RunStats:
    eliminations: int = 0
    decompositions: int = 0
    edges_pruned: int = 0
    max_lambda_arity: int = 0


@dataclass(frozen=True)
class BoundValue:
    """Per-query-value bounds plus which side they bound."""

    values: np.ndarray
    direction: Direction | None
    stats: RunStats = field(default_factory=RunStats)

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


def _stranded(g: InteractionGraph, query: int, cap: int) -> bool:
    """True when every remaining non-query node has more than ``cap`` neighbors."""
    return len(g) > 1 and all(
        g.degree(v) > cap for v in g.nodes if v != query)


def _prune_for_progress(g: InteractionGraph, new_edges: list[tuple[int, int]],
                        i_bound: int, query: int
                        ) -> tuple[InteractionGraph, list[tuple[int, int]]]:
    """Width-driven pruning, extended to keep some variable eliminable.

    After the standard deletions restore width <= i, keep deleting new
    edges (same heaviest-endpoints rule) while no non-query node is within
    the degree cap; without this the query can monopolize the one
    low-degree slot that a width bound guarantees and the next elimination
    would have to exceed the cap.
    """
    g, deleted = prune_new_edges(g, new_edges, i_bound)
    if not _stranded(g, query, i_bound):
        return g, deleted
    remaining = [e for e in new_edges if e not in deleted and g.has_edge(*e)]
    while remaining and _stranded(g, query, i_bound):
        best = max(remaining,
                   key=lambda e: (g.degree(e[0]) + g.degree(e[1]), -e[0], -e[1]))
        remaining.remove(best)
        g = g.without_edge(*best)
        deleted.append(best)
    return g, deleted


def ad_run(factors: Sequence[Factor], task: Task, domains: Sequence[int],
           cfg: AdConfig) -> BoundValue:
    """Bounded elimination of every non-query variable.

    Preconditions: evidence already applied, and the initial interaction
    graph (evidence removed) has width at most the i-bound.
    """
    n = len(domains)
    for f in factors:
        for v in f.scope:
            if v in task.evidence:
                raise InputError(f"factor scope still mentions evidence variable {v}")
        if len(f.scope) > cfg.i_bound + 1:
            raise ConfigError(
                f"initial factor over {len(f.scope)} variables exceeds i-bound "
                f"{cfg.i_bound} + 1")

    g = interaction_graph(factors, n).without_nodes(task.evidence)
    w0 = width(g)
    if w0 > cfg.i_bound:
        raise ConfigError(f"initial width {w0} exceeds i-bound {cfg.i_bound}")

    pool = [f for f in factors if f.scope]
    constants = [f for f in factors if not f.scope]
    stats = RunStats()

    while len(g) > 1:
        # variables with more than i neighbors are avoided; rarely the query
        # holds the only low-degree slot and the cheapest oversized variable
        # must be taken instead (bounds stay valid, one table runs larger)
        xj = choose_elim_var(g, task.query, max_degree=cfg.i_bound)
        neighbors = sorted(g.neighbors(xj))

        mentioning = [f for f in pool if xj in f.scope]
        pool = [f for f in pool if xj not in f.scope]
        g, new_edges = eliminate_node(g, xj)
        stats.eliminations += 1

        if not mentioning:
            if task.marginal_op is MarginalOp.SUM:
                constants.append(constant_factor(float(domains[xj])))
            continue

        lam = marginalize_out(combine_all(mentioning, task.combine_op), xj,
                              task.marginal_op)
        assert set(lam.scope) == set(neighbors), "scope must match the graph neighborhood"
        stats.max_lambda_arity = max(stats.max_lambda_arity, len(lam.scope))

        if width(g) > cfg.i_bound or _stranded(g, task.query, cfg.i_bound):
            g, deleted = _prune_for_progress(g, new_edges, cfg.i_bound, task.query)
            if not deleted:
                # nothing deletable; the table is already within bounds
                if lam.scope:
                    pool.append(lam)
                else:
                    constants.append(lam)
                continue
            stats.edges_pruned += len(deleted)
            cliques = maximal_cliques(g, neighbors)
            req = DecompositionRequest(lam, tuple(cliques), cfg.direction,
                                       task.combine_op)
            if task.combine_op is CombineOp.PRODUCT:
                pieces = product_decompose(req, cfg.decompose_consts)
            else:
                pieces = sum_decompose(req)
            stats.decompositions += 1
            for piece in pieces:
                (pool if piece.scope else constants).append(piece)
        elif lam.scope:
            pool.append(lam)
        else:
            constants.append(lam)

    result = combine_all(pool + constants, task.combine_op)
    if result.scope == ():
        values = np.full(domains[task.query], float(result.values))
    elif result.scope == (task.query,):
        values = result.values
    else:
        raise AssertionError(f"unexpected final scope {result.scope}")
    return BoundValue(values, cfg.direction, stats)


def bound_conditional(uppers: np.ndarray, lowers: np.ndarray
                      ) -> tuple[np.ndarray, np.ndarray]:
    """Conditional-probability bounds from joint bounds.

    high(q) = U(q) / (U(q) + sum of other lowers),
    low(q)  = L(q) / (L(q) + sum of other uppers), both clamped to [0, 1].
    """
    uppers = np.asarray(uppers, dtype=float)
    lowers = np.asarray(lowers, dtype=float)
    if uppers.shape != lowers.shape:
        raise InputError("bound vectors must align")
    if np.any(lowers < 0) or np.any(uppers + 1e-15 < lowers):
        raise InputError("need uppers >= lowers >= 0")
    if not np.any(uppers > 0):
        raise UndefinedConditionalError("all joint upper bounds are zero")
    highs = np.zeros_like(uppers)
    lows = np.zeros_like(uppers)
    total_low = lowers.sum()
    total_high = uppers.sum()
    for q in range(uppers.size):
        denom_high = uppers[q] + (total_low - lowers[q])
        highs[q] = uppers[q] / denom_high if denom_high > 0 else 0.0
        denom_low = lowers[q] + (total_high - uppers[q])
        lows[q] = lowers[q] / denom_low if denom_low > 0 else 0.0
    highs = np.clip(highs, 0.0, 1.0)
    lows = np.clip(lows, 0.0, 1.0)
    return lows, np.maximum(highs, lows)


def estimate(u: float, l: float, task: Task) -> float:
    """Point estimate between the bounds: geometric mean for product tasks,
    arithmetic mean for the min-sum task."""
    if task.combine_op is CombineOp.PRODUCT:
        if u < l or l < 0:
            raise InputError("need u >= l >= 0")
        if u == 0.0 or l == 0.0:
            return 0.0
        return float(np.sqrt(u) * np.sqrt(l))
    if u < l:
        raise InputError("need u >= l")
    return float((u + l) / 2.0)
