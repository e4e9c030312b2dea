"""Dense two-phase primal simplex for small-to-medium minimize-form LPs.

Variables are nonnegative or free (free variables are split into a
difference of nonnegatives).  Constraints are equalities or <=
inequalities.  Pricing is Dantzig by default and falls back to Bland's
rule whenever the objective stalls, which keeps the method cycle-proof
while staying fast on the decomposition programs this package generates.

Solutions carry the constraint multipliers (duals) of the optimal basis;
the decomposition layer uses them to recover primal answers when it
solves a reformulated program.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import InputError, ResourceLimitError

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7
MAX_TABLEAU_CELLS = 60_000_000
_STALL_LIMIT = 64


class Relation(Enum):
    EQ = "="
    LE = "<="


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[int, float]
    relation: Relation
    rhs: float


@dataclass(frozen=True)
class LinearProgram:
    """Minimize ``objective . x`` subject to the listed constraints.

    ``var_lower_bounded[j]`` True means x_j >= 0, False means x_j is free.
    """

    num_vars: int
    var_lower_bounded: tuple[bool, ...]
    constraints: tuple[Constraint, ...]
    objective: Mapping[int, float]

    def __post_init__(self):
        object.__setattr__(self, "var_lower_bounded", tuple(self.var_lower_bounded))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "objective", dict(self.objective))
        if len(self.var_lower_bounded) != self.num_vars:
            raise InputError("need one bound flag per variable")
        for j, c in self.objective.items():
            self._check_term(j, c)
        for row in self.constraints:
            for j, c in row.coeffs.items():
                self._check_term(j, c)
            if not np.isfinite(row.rhs):
                raise InputError("right-hand sides must be finite")

    def _check_term(self, j: int, c: float):
        if not 0 <= j < self.num_vars:
            raise InputError(f"variable index {j} out of range")
        if not np.isfinite(c):
            raise InputError("coefficients must be finite")


@dataclass(frozen=True)
class LpSolution:
    status: LpStatus
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective_value: float = float("nan")
    dual_values: np.ndarray = field(default_factory=lambda: np.zeros(0))


def _pivot(T: np.ndarray, p: int, q: int):
    row = T[p, :] / T[p, q]
    col = T[:, q].copy()
    col[p] = 0.0
    T -= col[:, None] * row[None, :]
    T[p, :] = row
    T[:, q] = 0.0
    T[p, q] = 1.0


def _choose_entering(z: np.ndarray, eligible: np.ndarray, bland: bool) -> int:
    reduced = np.where(eligible, z, np.inf)
    if bland:
        negative = np.nonzero(reduced < -PIVOT_TOL)[0]
        return int(negative[0]) if negative.size else -1
    q = int(np.argmin(reduced))
    return q if reduced[q] < -PIVOT_TOL else -1


def _choose_leaving(T: np.ndarray, q: int, basis: list[int]) -> int:
    m = T.shape[0] - 1
    col = T[:m, q]
    rhs = T[:m, -1]
    positive = col > PIVOT_TOL
    if not positive.any():
        return -1
    ratios = np.where(positive, rhs / np.where(positive, col, 1.0), np.inf)
    best = ratios.min()
    candidates = np.nonzero(ratios <= best + 1e-12)[0]
    # break ties on the smallest basic index (Bland-compatible)
    return int(min(candidates, key=lambda r: basis[r]))


def _run_simplex(T: np.ndarray, basis: list[int], eligible: np.ndarray) -> str:
    stall = 0
    bland = False
    while True:
        q = _choose_entering(T[-1, :-1], eligible, bland)
        if q < 0:
            return "optimal"
        p = _choose_leaving(T, q, basis)
        if p < 0:
            return "unbounded"
        # the tableau keeps the negated objective, which rises as we minimize
        before = T[-1, -1]
        _pivot(T, p, q)
        basis[p] = q
        if T[-1, -1] > before + 1e-12:
            stall = 0
            bland = False
        else:
            stall += 1
            if stall >= _STALL_LIMIT:
                bland = True


def solve(lp: LinearProgram, verbose: bool = False) -> LpSolution:
    """Solve the program; status reports infeasibility/unboundedness.

    Deterministic: identical inputs take identical pivot paths.
    """
    m = len(lp.constraints)
    # column layout: per-variable (one col if bounded, two if free), slacks, artificials
    col_of_var: list[tuple[int, int]] = []
    next_col = 0
    for j in range(lp.num_vars):
        if lp.var_lower_bounded[j]:
            col_of_var.append((next_col, -1))
            next_col += 1
        else:
            col_of_var.append((next_col, next_col + 1))
            next_col += 2
    n_slack = sum(1 for c in lp.constraints if c.relation is Relation.LE)
    n_struct = next_col + n_slack
    n_total = n_struct + m
    if (m + 1) * (n_total + 1) > MAX_TABLEAU_CELLS:
        raise ResourceLimitError(
            f"tableau of {(m + 1) * (n_total + 1)} cells exceeds the size cap")

    A = np.zeros((m, n_total))
    b = np.zeros(m)
    row_sign = np.ones(m)
    slack_idx = next_col
    for i, con in enumerate(lp.constraints):
        for j, c in con.coeffs.items():
            pos, neg = col_of_var[j]
            A[i, pos] += c
            if neg >= 0:
                A[i, neg] -= c
        if con.relation is Relation.LE:
            A[i, slack_idx] = 1.0
            slack_idx += 1
        b[i] = con.rhs
        if b[i] < 0:
            A[i, :] *= -1.0
            b[i] = -b[i]
            row_sign[i] = -1.0
        A[i, n_struct + i] = 1.0

    cost = np.zeros(n_total)
    for j, c in lp.objective.items():
        pos, neg = col_of_var[j]
        cost[pos] += c
        if neg >= 0:
            cost[neg] -= c

    T = np.zeros((m + 1, n_total + 1))
    T[:m, :n_total] = A
    T[:m, -1] = b
    basis = [n_struct + i for i in range(m)]
    # phase 1: minimize the sum of artificials
    T[-1, :] = -T[:m, :].sum(axis=0)
    T[-1, n_struct:n_total] = 0.0
    eligible = np.ones(n_total, dtype=bool)
    if verbose:
        print(f"phase 1: {m} rows, {n_total} columns")
    outcome = _run_simplex(T, basis, eligible)
    if outcome != "optimal":
        raise AssertionError("phase 1 cannot be unbounded")
    if -T[-1, -1] > FEAS_TOL:
        return LpSolution(LpStatus.INFEASIBLE)

    # drive any lingering artificials out of the basis where possible
    eligible[n_struct:] = False
    for r in range(m):
        if basis[r] >= n_struct:
            candidates = np.nonzero(np.abs(T[r, :n_struct]) > PIVOT_TOL)[0]
            if candidates.size:
                _pivot(T, r, int(candidates[0]))
                basis[r] = int(candidates[0])

    # phase 2: install the true objective as reduced costs
    T[-1, :] = 0.0
    T[-1, :n_total] = cost
    for r, col in enumerate(basis):
        if abs(cost[col]) > 0.0:
            T[-1, :] -= cost[col] * T[r, :]
    if verbose:
        print("phase 2 start, objective", T[-1, -1])
    outcome = _run_simplex(T, basis, eligible)
    if outcome == "unbounded":
        return LpSolution(LpStatus.UNBOUNDED)

    x_std = np.zeros(n_total)
    for r, col in enumerate(basis):
        x_std[col] = T[r, -1]
    values = np.empty(lp.num_vars)
    for j, (pos, neg) in enumerate(col_of_var):
        values[j] = x_std[pos] - (x_std[neg] if neg >= 0 else 0.0)
    objective_value = float(sum(c * values[j] for j, c in lp.objective.items()))

    basis_matrix = A[:, basis]
    cost_basis = cost[basis]
    try:
        duals = np.linalg.solve(basis_matrix.T, cost_basis)
    except np.linalg.LinAlgError:
        duals, *_ = np.linalg.lstsq(basis_matrix.T, cost_basis, rcond=None)
    duals = duals * row_sign
    return LpSolution(LpStatus.OPTIMAL, values, objective_value, duals)
