"""Interaction graphs and the graph-side machinery of bounded elimination.

The width measure here is the greedy one used throughout the bounding
algorithm: repeatedly delete a minimum-degree node (no fill edges) and
report the largest degree seen at deletion time.  All tie-breaks are by
smallest variable index so runs are reproducible.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError
from .model import BeliefNetwork, Factor, VariableId


class InteractionGraph:
    """Undirected graph over a subset of the problem's variables.

    Treated as a value: mutating operations live in module functions that
    return fresh graphs.
    """

    __slots__ = ("n", "_adj")

    def __init__(self, n: int, nodes: Iterable[VariableId] | None = None,
                 edges: Iterable[tuple[VariableId, VariableId]] = ()):
        self.n = n
        node_set = range(n) if nodes is None else nodes
        self._adj: dict[int, set[int]] = {int(v): set() for v in node_set}
        for u, v in edges:
            self._add_edge(u, v)

    def _add_edge(self, u: int, v: int):
        if u == v:
            return
        if u not in self._adj or v not in self._adj:
            raise InputError(f"edge ({u}, {v}) touches a node outside the graph")
        self._adj[u].add(v)
        self._adj[v].add(u)

    @property
    def nodes(self) -> list[int]:
        return sorted(self._adj)

    def __contains__(self, v: int) -> bool:
        return v in self._adj

    def __len__(self) -> int:
        return len(self._adj)

    def neighbors(self, v: VariableId) -> set[int]:
        return set(self._adj[v])

    def degree(self, v: VariableId) -> int:
        return len(self._adj[v])

    def has_edge(self, u: VariableId, v: VariableId) -> bool:
        return v in self._adj.get(u, ())

    def edges(self) -> list[tuple[int, int]]:
        return sorted((u, v) for u in self._adj for v in self._adj[u] if u < v)

    def copy(self) -> "InteractionGraph":
        g = InteractionGraph(self.n, nodes=())
        g._adj = {v: set(nb) for v, nb in self._adj.items()}
        return g

    def without_nodes(self, drop: Iterable[int]) -> "InteractionGraph":
        drop = set(drop)
        g = InteractionGraph(self.n, nodes=())
        g._adj = {v: set(nb) - drop for v, nb in self._adj.items() if v not in drop}
        return g

    def without_edge(self, u: int, v: int) -> "InteractionGraph":
        g = self.copy()
        g._adj[u].discard(v)
        g._adj[v].discard(u)
        return g

    def __repr__(self):
        return f"InteractionGraph(nodes={len(self)}, edges={len(self.edges())})"


def interaction_graph(factors: Sequence[Factor], n: int) -> InteractionGraph:
    """Edge wherever two variables co-occur in some factor scope."""
    g = InteractionGraph(n)
    for f in factors:
        for v in f.scope:
            if not 0 <= v < n:
                raise InputError(f"scope variable {v} outside [0, {n})")
        for u, v in combinations(f.scope, 2):
            g._add_edge(u, v)
    return g


def moral_graph(net: BeliefNetwork) -> InteractionGraph:
    """Marry co-parents and drop directions; equals the CPT interaction graph."""
    return interaction_graph(net.cpts, net.n_vars)


def width(g: InteractionGraph) -> int:
    """Greedy min-degree deletion width (no fill edges added)."""
    if len(g) == 0:
        return 0
    adj = {v: set(nb) for v, nb in g._adj.items()}
    degree = np.full(g.n, np.iinfo(np.int64).max, dtype=np.int64)
    for v, nb in adj.items():
        degree[v] = len(nb)
    result = 0
    for _ in range(len(adj)):
        v = int(np.argmin(degree))  # argmin takes the smallest index on ties
        d = int(degree[v])
        result = max(result, d)
        for u in adj[v]:
            adj[u].discard(v)
            degree[u] -= 1
        degree[v] = np.iinfo(np.int64).max
        del adj[v]
    return result


def fill_count(g: InteractionGraph, v: VariableId) -> int:
    """Number of unconnected neighbor pairs of ``v``."""
    nb = sorted(g._adj[v])
    missing = 0
    for i, u in enumerate(nb):
        u_adj = g._adj[u]
        for w in nb[i + 1:]:
            if w not in u_adj:
                missing += 1
    return missing


def choose_elim_var(g: InteractionGraph, query: VariableId,
                    max_degree: int | None = None) -> VariableId:
    """Non-query node with the fewest unconnected neighbor pairs.

    Ties break by smaller degree, then smaller index.  With ``max_degree``
    set, nodes with more neighbors are not considered; if that excludes
    every candidate, the lowest-degree node is returned instead so the
    caller can still make progress (its degree then exceeds the cap).
    """
    best = None
    fallback = None
    for v in g.nodes:
        if v == query:
            continue
        degree = g.degree(v)
        fill = fill_count(g, v)
        if max_degree is None or degree <= max_degree:
            key = (fill, degree, v)
            if best is None or key < best:
                best = key
        else:
            key = (degree, fill, v)
            if fallback is None or key < fallback:
                fallback = key
    if best is not None:
        return best[2]
    if fallback is not None:
        return fallback[2]
    raise InputError("no non-query node available to eliminate")


def eliminate_node(g: InteractionGraph, v: VariableId
                   ) -> tuple[InteractionGraph, list[tuple[int, int]]]:
    """Remove ``v``, connect its neighbors pairwise; report edges actually added."""
    if v not in g:
        raise InputError(f"node {v} not present in graph")
    out = g.copy()
    nb = sorted(out._adj[v])
    new_edges = []
    for i, u in enumerate(nb):
        for w in nb[i + 1:]:
            if w not in out._adj[u]:
                out._add_edge(u, w)
                new_edges.append((u, w))
    for u in nb:
        out._adj[u].discard(v)
    del out._adj[v]
    return out, new_edges


def prune_new_edges(g: InteractionGraph, new_edges: Sequence[tuple[int, int]],
                    i: int) -> tuple[InteractionGraph, list[tuple[int, int]]]:
    """Delete just-added edges, heaviest endpoints first, until width(g) <= i.

    Degrees are recomputed after each deletion; ties take the
    lexicographically smallest pair.  Only edges in ``new_edges`` are
    candidates.
    """
    out = g.copy()
    remaining = []
    for u, v in new_edges:
        u, v = (u, v) if u < v else (v, u)
        if not out.has_edge(u, v):
            raise InputError(f"edge ({u}, {v}) not present in graph")
        remaining.append((u, v))
    deleted: list[tuple[int, int]] = []
    while width(out) > i:
        assert remaining, "width exceeds bound with no new edges left to delete"
        best = max(remaining,
                   key=lambda e: (out.degree(e[0]) + out.degree(e[1]), -e[0], -e[1]))
        remaining.remove(best)
        out._adj[best[0]].discard(best[1])
        out._adj[best[1]].discard(best[0])
        deleted.append(best)
    return out, deleted


def maximal_cliques(g: InteractionGraph, nodes: Iterable[VariableId]
                    ) -> list[tuple[int, ...]]:
    """All maximal cliques of the subgraph induced by ``nodes``.

    Exhaustive search; intended for the tiny (at most i+1 node) neighbor
    sets produced during elimination.  Output is sorted and covers every
    input node.
    """
    nodes = sorted(set(nodes))
    for v in nodes:
        if v not in g:
            raise InputError(f"node {v} not present in graph")
    adj = {v: g._adj[v] & set(nodes) for v in nodes}

    cliques: list[tuple[int, ...]] = []

    def grow(clique: list[int], candidates: list[int]):
        extended = False
        for idx, u in enumerate(candidates):
            if all(u in adj[c] for c in clique):
                grow(clique + [u], candidates[idx + 1:])
                extended = True
        if not extended and clique:
            cliques.append(tuple(clique))

    grow([], nodes)
    maximal = []
    for c in cliques:
        members = set(c)
        others = [v for v in nodes if v not in members]
        if not any(all(v in adj[u] for u in c) for v in others):
            maximal.append(c)
    return sorted(set(maximal))
