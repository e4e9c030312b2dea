"""Bound a factor by a combination of smaller factors on given clique scopes.

For product combination the program works in log10 space: one free LP
variable per clique-table entry, one nonnegative relative-error variable
per cell of the bounded table, and per-cell constraints tying their sum to
the cell's log value.  The objective weights each cell's error by its
normalized (and floored) share of the table mass.  Zero cells cannot take
logs and are handled through a large negative constant Z.  For sum
combination the program is the direct L1 fit on raw values.

Small programs are solved literally.  Large ones are solved through an
equivalent reformulation (error variables substituted out, then the dual),
which keeps the simplex basis at the size of the clique tables instead of
the size of the bounded table; the recovered solution is verified against
the original constraints and falls back to the literal program if that
verification ever fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import InputError
from .model import CombineOp, Factor
from .simplex import (Constraint, LinearProgram, LpStatus, Relation, solve)

REDUCED_PATH_MIN_CELLS = 300
_RECOVERY_TOL = 1e-6


class Direction(Enum):
    UPPER = "upper"
    LOWER = "lower"


@dataclass(frozen=True)
class DecomposeConstants:
    """Tuning constants: the zero-cell log stand-in Z, the objective
    coefficient floor, and the log base (10 throughout)."""

    Z: float = -40.0
    coeff_floor: float = 1e-5
    log_base: float = 10.0

    def __post_init__(self):
        if not 0.0 < self.coeff_floor < 1.0:
            raise InputError("coefficient floor must lie in (0, 1)")
        if self.Z >= 0:
            raise InputError("Z must be negative")
        if self.log_base != 10.0:
            raise InputError("only base-10 logs are supported")


@dataclass(frozen=True)
class DecompositionRequest:
    lam: Factor
    cliques: tuple[tuple[int, ...], ...]
    direction: Direction
    combine_op: CombineOp

    def __post_init__(self):
        object.__setattr__(self, "cliques", tuple(tuple(c) for c in self.cliques))
        if not self.cliques:
            raise InputError("need at least one clique scope")
        covered = set()
        for clique in self.cliques:
            if len(set(clique)) != len(clique):
                raise InputError(f"duplicate variable in clique {clique}")
            for v in clique:
                if v not in self.lam.scope:
                    raise InputError(f"clique variable {v} outside the bounded scope")
            covered.update(clique)
        if covered != set(self.lam.scope):
            raise InputError("clique union must cover the bounded scope")


@dataclass
class ProductLpLayout:
    """Where each quantity lives in the built program's variable vector."""

    y_base: list[int]                 # first log-variable index per clique
    clique_cards: list[tuple[int, ...]]
    lr_index: np.ndarray              # per cell: error-variable index, -1 if absent
    projections: list[np.ndarray]     # per clique: cell -> clique-table offset
    weights: np.ndarray               # per cell objective coefficient
    effective_z: float


def _projections(lam: Factor, cliques: Sequence[tuple[int, ...]]) -> list[np.ndarray]:
    n_cells = lam.flat.size
    if lam.scope:
        assign = np.array(np.unravel_index(np.arange(n_cells), lam.cards))
    projs = []
    for clique in cliques:
        if not clique:
            projs.append(np.zeros(n_cells, dtype=np.int64))
            continue
        axes = [lam.scope.index(v) for v in clique]
        cards = tuple(lam.card(v) for v in clique)
        projs.append(np.ravel_multi_index(tuple(assign[a] for a in axes), cards))
    return projs


def _floored_weights(flat: np.ndarray, floor: float) -> np.ndarray:
    total = flat.sum()
    normalized = flat / total if total > 0 else np.zeros_like(flat)
    return np.maximum(floor, normalized)


def build_product_lp(req: DecompositionRequest, consts: DecomposeConstants
                     ) -> tuple[LinearProgram, ProductLpLayout]:
    """Construct the log-space bounding program for product combination."""
    if req.combine_op is not CombineOp.PRODUCT:
        raise InputError("product program requires product combination")
    flat = req.lam.flat
    if np.any(flat < 0):
        raise InputError("cannot log-decompose a table with negative values")
    positive = flat > 0.0
    if not positive.any():
        raise InputError("table is identically zero; no program to build")
    log_values = np.full(flat.size, np.nan)
    log_values[positive] = np.log10(flat[positive])
    # Z must sit strictly below every real log value present
    effective_z = consts.Z
    min_log = log_values[positive].min()
    if (~positive).any() and effective_z >= min_log:
        effective_z = math.floor(min_log) - 1.0

    projs = _projections(req.lam, req.cliques)
    y_base, clique_cards = [], []
    next_var = 0
    for clique in req.cliques:
        cards = tuple(req.lam.card(v) for v in clique)
        y_base.append(next_var)
        clique_cards.append(cards)
        next_var += int(np.prod(cards))
    n_y = next_var

    weights = _floored_weights(flat, consts.coeff_floor)
    lr_index = np.full(flat.size, -1, dtype=np.int64)
    for t in range(flat.size):
        if req.direction is Direction.UPPER or positive[t]:
            lr_index[t] = next_var
            next_var += 1

    constraints = []
    for t in range(flat.size):
        coeffs = {}
        for i in range(len(req.cliques)):
            var = y_base[i] + int(projs[i][t])
            coeffs[var] = coeffs.get(var, 0.0) + 1.0
        if positive[t]:
            sign = -1.0 if req.direction is Direction.UPPER else 1.0
            coeffs[int(lr_index[t])] = sign
            constraints.append(Constraint(coeffs, Relation.EQ, float(log_values[t])))
        elif req.direction is Direction.UPPER:
            coeffs[int(lr_index[t])] = -1.0
            constraints.append(Constraint(coeffs, Relation.LE, effective_z))
        else:
            constraints.append(Constraint(coeffs, Relation.LE, effective_z))

    objective = {int(lr_index[t]): float(weights[t])
                 for t in range(flat.size) if lr_index[t] >= 0}
    bounded = tuple(j >= n_y for j in range(next_var))
    lp = LinearProgram(next_var, bounded, tuple(constraints), objective)
    layout = ProductLpLayout(y_base, clique_cards, lr_index, projs, weights,
                             effective_z)
    return lp, layout


def _build_sum_lp(req: DecompositionRequest) -> tuple[LinearProgram, ProductLpLayout]:
    """Raw-value L1 bounding program for sum combination."""
    flat = req.lam.flat
    projs = _projections(req.lam, req.cliques)
    y_base, clique_cards = [], []
    next_var = 0
    for clique in req.cliques:
        cards = tuple(req.lam.card(v) for v in clique)
        y_base.append(next_var)
        clique_cards.append(cards)
        next_var += int(np.prod(cards))
    n_y = next_var
    eps_index = np.arange(flat.size, dtype=np.int64) + next_var
    next_var += flat.size

    sign = -1.0 if req.direction is Direction.UPPER else 1.0
    constraints = []
    for t in range(flat.size):
        coeffs = {}
        for i in range(len(req.cliques)):
            var = y_base[i] + int(projs[i][t])
            coeffs[var] = coeffs.get(var, 0.0) + 1.0
        coeffs[int(eps_index[t])] = sign
        constraints.append(Constraint(coeffs, Relation.EQ, float(flat[t])))
    objective = {int(j): 1.0 for j in eps_index}
    bounded = tuple(j >= n_y for j in range(next_var))
    lp = LinearProgram(next_var, bounded, tuple(constraints), objective)
    layout = ProductLpLayout(y_base, clique_cards, eps_index, projs,
                             np.ones(flat.size), 0.0)
    return lp, layout


def _verified_y(y_flat: np.ndarray, projs: list[np.ndarray], sizes: list[int],
                marginals: list[np.ndarray], targets: np.ndarray,
                lower_sense: bool, dual_obj: float) -> list[np.ndarray] | None:
    """Split the recovered multipliers per clique and verify them: they must
    satisfy the bounding constraints and close the duality gap."""
    n_cells = targets.size
    combined = np.zeros(n_cells)
    offset = 0
    ys = []
    for i, s in enumerate(sizes):
        y_i = np.asarray(y_flat[offset:offset + s], dtype=float).copy()
        ys.append(y_i)
        combined += y_i[projs[i]]
        offset += s
    scale = max(1.0, float(np.abs(targets).max()))
    residual = targets - combined if not lower_sense else combined - targets
    if residual.max() > _RECOVERY_TOL * scale:
        return None
    primal_obj = sum(float(m @ y) for m, y in zip(marginals, ys))
    if abs(primal_obj - dual_obj) > _RECOVERY_TOL * max(1.0, abs(dual_obj)):
        return None
    return ys


def _greedy_transport(projs: list[np.ndarray], marginals: list[np.ndarray],
                      n_cells: int, offsets: np.ndarray
                      ) -> tuple[np.ndarray, list[tuple[int, int]]] | None:
    """Feasible point of {mu >= 0, class sums = marginals} by a
    northwest-corner style fill; None if the fill leaves a residual.

    Also reports, per support cell, a row whose remaining mass the cell
    exhausted.  Later support cells never touch an exhausted row, so the
    (cell, row) pairs describe a triangular and hence invertible basis.
    """
    remain = [m.copy() for m in marginals]
    mu = np.zeros(n_cells)
    k = len(projs)
    support: list[tuple[int, int]] = []
    for t in range(n_cells):
        classes = [projs[i][t] for i in range(k)]
        take = min(remain[i][classes[i]] for i in range(k))
        if take > 0:
            mu[t] = take
            zeroed_row = -1
            for i in range(k):
                remain[i][classes[i]] -= take
                if zeroed_row < 0 and remain[i][classes[i]] == 0.0:
                    zeroed_row = int(offsets[i] + classes[i])
            support.append((t, zeroed_row))
    total = sum(float(m.sum()) for m in marginals)
    tol = 1e-9 * max(1.0, total)
    if any(abs(r).max() > tol for r in remain):
        return None
    return mu, support


_WARM_ITER_FACTOR = 60


def _warm_dual_simplex(projs: list[np.ndarray], sizes: list[int],
                       marginals: list[np.ndarray], costs: np.ndarray
                       ) -> tuple[np.ndarray, float] | None:
    """Revised primal simplex on min costs . mu, class sums = marginals,
    mu >= 0, warm-started from the greedy transport fill.

    Exploits the structure: every column carries a single 1 per clique, so
    pricing every column is a few gathers and an entering column is the
    sum of a few columns of the basis inverse.  Returns the optimal row
    multipliers (the y of the reduced bounding program) and the objective,
    or None when the warm start or the iteration budget fails.
    """
    m = sum(sizes)
    n = costs.size
    offsets = np.concatenate(([0], np.cumsum(sizes)[:-1]))
    fill = _greedy_transport(projs, marginals, n, offsets)
    if fill is None:
        return None
    mu0, support = fill
    if any(r < 0 for _, r in support):
        return None
    b = np.concatenate(marginals).astype(float)
    col_rows = [offsets[i] + projs[i] for i in range(len(projs))]

    def pivot(binv, d, r):
        pr = binv[r, :] / d[r]
        binv -= np.outer(d, pr)
        binv[r, :] = pr

    # the greedy support forms a triangular basis; invert it in one shot
    basis = np.full(m, -1, dtype=np.int64)
    in_basis = np.zeros(n, dtype=bool)
    for j, r in support:
        basis[r] = j
        in_basis[j] = True
    binv, x_basic = _refactorize(col_rows, basis, b, m)
    if binv is None:
        return None
    scale = max(1.0, float(b.max()))
    if x_basic.min() < -1e-7 * scale:
        return None
    x_basic = np.maximum(x_basic, 0.0)
    cost_basic = np.where(basis >= 0, costs[np.maximum(basis, 0)], 0.0)

    # bulk-evict artificials left over from the crash with zero-step pivots;
    # rows whose tableau row vanishes are redundant and keep their artificial
    for r in np.nonzero(basis < 0)[0]:
        r = int(r)
        row = binv[r, :]
        sigma = np.zeros(n)
        for cr in col_rows:
            sigma += row[cr]
        sigma[in_basis] = 0.0
        j = int(np.argmax(np.abs(sigma)))
        if abs(sigma[j]) < 1e-7:
            continue
        d = binv[:, [int(cr[j]) for cr in col_rows]].sum(axis=1)
        pivot(binv, d, r)
        x_basic[r] = 0.0
        basis[r] = j
        cost_basic[r] = costs[j]
        in_basis[j] = True

    pi = cost_basic @ binv
    devex = np.ones(n)   # reference weights approximating column steepness
    stall = 0
    bland = False
    for it in range(_WARM_ITER_FACTOR * (m + 10)):
        if it and it % 200 == 0:
            binv, x_basic = _refactorize(col_rows, basis, b, m)
            if binv is None:
                return None
            x_basic = np.maximum(x_basic, 0.0)
            pi = cost_basic @ binv
            devex = np.ones(n)
        reduced = costs.copy()
        for cr in col_rows:
            reduced -= pi[cr]
        reduced[in_basis] = 0.0
        if bland:
            eligible = np.nonzero(reduced < -1e-9)[0]
            q = int(eligible[0]) if eligible.size else -1
        else:
            score = np.where(reduced < -1e-9, reduced / np.sqrt(devex), 0.0)
            q = int(np.argmin(score))
            if score[q] >= 0.0:
                q = -1
        if q < 0:
            break
        rows = [int(cr[q]) for cr in col_rows]
        d = binv[:, rows].sum(axis=1)
        # a basic artificial sits at zero and must not grow: a negative
        # entry there blocks the step, so evict that artificial instead
        art_block = (basis < 0) & (d < -1e-9)
        if art_block.any():
            r = int(np.nonzero(art_block)[0][0])
            theta = 0.0
        else:
            positive = d > 1e-9
            if not positive.any():
                return None  # structurally impossible: the polytope is bounded
            ratios = np.where(positive, x_basic / np.where(positive, d, 1.0), np.inf)
            theta = ratios.min()
            ties = np.nonzero(ratios <= theta + 1e-12)[0]
            r = int(min(ties, key=lambda row: basis[row]))
        # devex update needs the pivotal row priced over all columns
        alpha = np.zeros(n)
        for cr in col_rows:
            alpha += binv[r, cr]
        pivot_elem = d[r]
        pivot(binv, d, r)
        x_basic = x_basic - theta * d
        x_basic[r] = theta
        x_basic = np.maximum(x_basic, 0.0)
        leaving = basis[r]
        if leaving >= 0:
            in_basis[leaving] = False
        basis[r] = q
        cost_basic[r] = costs[q]
        in_basis[q] = True
        pi = pi + reduced[q] * binv[r, :]
        gamma = max(devex[q], 1.0)
        devex = np.maximum(devex, (alpha / pivot_elem) ** 2 * gamma)
        if leaving >= 0:
            devex[leaving] = max(gamma / pivot_elem ** 2, 1.0)
        if theta > 1e-12:
            stall = 0
            bland = False
        else:
            stall += 1
            if stall >= 64:
                bland = True
    else:
        return None

    # fresh factorization for accurate multipliers and objective
    dense = np.zeros((m, m))
    for r in range(m):
        if basis[r] >= 0:
            for cr in col_rows:
                dense[int(cr[basis[r]]), r] += 1.0
        else:
            dense[r, r] = 1.0
    try:
        pi = np.linalg.solve(dense.T, cost_basic)
        x_fresh = np.linalg.solve(dense, b)
    except np.linalg.LinAlgError:
        return None
    if x_fresh.min() < -1e-7 * scale:
        return None
    artificial = basis < 0
    if artificial.any() and np.abs(x_fresh[artificial]).max() > 1e-7 * scale:
        return None
    objective = float(cost_basic @ x_fresh)
    return pi, objective


def _refactorize(col_rows, basis, b, m):
    dense = np.zeros((m, m))
    for r in range(m):
        if basis[r] >= 0:
            for cr in col_rows:
                dense[int(cr[basis[r]]), r] += 1.0
        else:
            dense[r, r] = 1.0
    try:
        binv = np.linalg.inv(dense)
    except np.linalg.LinAlgError:
        return None, None
    return binv, binv @ b


def _solve_separable_dual(projs: list[np.ndarray], sizes: list[int],
                          weights: np.ndarray, targets: np.ndarray,
                          lower_sense: bool) -> list[np.ndarray] | None:
    """Optimize sum_i <W_i, y_i> over {sum_i y_i(proj_i(t)) >= / <= targets}.

    Solved through the dual (one nonnegative variable per cell, one
    equality per clique entry), whose basis stays at the size of the
    clique tables.  A structure-aware warm-started solver handles the
    large programs; the generic tableau solver is the fallback.  Returns
    the per-clique y arrays, or None if recovery verification fails.
    """
    n_cells = targets.size
    marginals = [np.bincount(p, weights=weights, minlength=s)
                 for p, s in zip(projs, sizes)]
    obj_sign = 1.0 if lower_sense else -1.0
    costs = obj_sign * targets.astype(float)

    warm = _warm_dual_simplex(projs, sizes, marginals, costs)
    if warm is not None:
        pi, objective = warm
        y_flat = pi if lower_sense else -pi
        ys = _verified_y(y_flat, projs, sizes, marginals, targets, lower_sense,
                         obj_sign * objective)
        if ys is not None:
            return ys

    constraints = []
    for i, p in enumerate(projs):
        members: list[list[int]] = [[] for _ in range(sizes[i])]
        for t in range(n_cells):
            members[p[t]].append(t)
        for a in range(sizes[i]):
            coeffs = {t: 1.0 for t in members[a]}
            constraints.append(Constraint(coeffs, Relation.EQ, float(marginals[i][a])))
    objective = {t: obj_sign * float(targets[t]) for t in range(n_cells)}
    lp = LinearProgram(n_cells, (True,) * n_cells, tuple(constraints), objective)
    sol = solve(lp)
    if sol.status is not LpStatus.OPTIMAL:
        return None
    y_flat = sol.dual_values if lower_sense else -sol.dual_values
    return _verified_y(y_flat, projs, sizes, marginals, targets, lower_sense,
                       obj_sign * sol.objective_value)


def _shift_for_exact_bound(ys: list[np.ndarray], projs: list[np.ndarray],
                           targets: np.ndarray, mask: np.ndarray,
                           direction: Direction):
    """Nudge the first block by a constant so domination holds exactly."""
    if not mask.any():
        return
    combined = np.zeros(targets.size)
    for y, p in zip(ys, projs):
        combined += y[p]
    slack = (combined - targets)[mask]
    if direction is Direction.UPPER:
        worst = slack.min()
        if worst < 0:
            ys[0] += -worst
    else:
        worst = slack.max()
        if worst > 0:
            ys[0] -= worst


def _solve_product_log_values(req: DecompositionRequest, consts: DecomposeConstants
                              ) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per-clique log10 tables solving the product program."""
    flat = req.lam.flat
    positive = flat > 0.0
    projs = _projections(req.lam, req.cliques)
    sizes = [int(np.prod([req.lam.card(v) for v in c])) if c else 1
             for c in req.cliques]

    ys = None
    if flat.size >= REDUCED_PATH_MIN_CELLS and positive.all():
        weights = _floored_weights(flat, consts.coeff_floor)
        targets = np.log10(flat)
        ys = _solve_separable_dual(projs, sizes, weights, targets,
                                   lower_sense=(req.direction is Direction.LOWER))
    if ys is None:
        lp, layout = build_product_lp(req, consts)
        sol = solve(lp)
        assert sol.status is LpStatus.OPTIMAL, "bounding program must be feasible"
        ys = [sol.values[base:base + size]
              for base, size in zip(layout.y_base, sizes)]

    log_targets = np.zeros(flat.size)
    log_targets[positive] = np.log10(flat[positive])
    _shift_for_exact_bound(ys, projs, log_targets, positive, req.direction)
    return ys, projs


def product_decompose(req: DecompositionRequest, consts: DecomposeConstants
                      ) -> list[Factor]:
    """Bounding factors whose product dominates (or is dominated by) the table."""
    if req.combine_op is not CombineOp.PRODUCT:
        raise InputError("product_decompose requires product combination")
    flat = req.lam.flat
    cards = [tuple(req.lam.card(v) for v in c) for c in req.cliques]
    if not (flat > 0.0).any():
        return [Factor(c, np.zeros(cd)) for c, cd in zip(req.cliques, cards)]

    ys, projs = _solve_product_log_values(req, consts)
    tables = [np.power(10.0, y) for y in ys]

    if req.direction is Direction.LOWER:
        # restore exact zeros: kill the smallest contributing entry per zero cell
        for t in np.nonzero(flat == 0.0)[0]:
            entries = [(tables[i][projs[i][t]], i) for i in range(len(tables))]
            _, which = min(entries, key=lambda e: (e[0], e[1]))
            tables[which][projs[which][t]] = 0.0

    return [Factor(c, tab.reshape(cd))
            for c, cd, tab in zip(req.cliques, cards, tables)]


def sum_decompose(req: DecompositionRequest) -> list[Factor]:
    """Bounding factors whose sum dominates (or is dominated by) the table."""
    if req.combine_op is not CombineOp.SUM:
        raise InputError("sum_decompose requires sum combination")
    flat = req.lam.flat
    cards = [tuple(req.lam.card(v) for v in c) for c in req.cliques]
    projs = _projections(req.lam, req.cliques)
    sizes = [int(np.prod(cd)) if cd else 1 for cd in cards]

    ys = None
    if flat.size >= REDUCED_PATH_MIN_CELLS:
        ys = _solve_separable_dual(projs, sizes, np.ones(flat.size),
                                   flat.astype(float),
                                   lower_sense=(req.direction is Direction.LOWER))
    if ys is None:
        lp, layout = _build_sum_lp(req)
        sol = solve(lp)
        assert sol.status is LpStatus.OPTIMAL, "bounding program must be feasible"
        ys = [sol.values[base:base + size]
              for base, size in zip(layout.y_base, sizes)]

    _shift_for_exact_bound(ys, projs, flat.astype(float),
                           np.ones(flat.size, dtype=bool), req.direction)
    return [Factor(c, np.asarray(y).reshape(cd))
            for c, cd, y in zip(req.cliques, cards, ys)]
