"""Ground-truth answers by direct enumeration, plus Monte Carlo checks of
the expected-query-error cost model that justifies minimizing L1 error.

``brute_force`` materializes the full joint table and reduces it in one
shot, with no elimination machinery involved, so it can arbitrate between
the other algorithms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InputError, ResourceLimitError
from .model import CombineOp, Factor, MarginalOp, Task, VariableId

DEFAULT_ENUMERATION_CAP = 10 ** 7


def _spread(f: Factor, span: Sequence[int], span_cards: Sequence[int]) -> np.ndarray:
    """Broadcast a factor's table over the full joint assignment space."""
    arr = f.values
    src_axes = []
    dst_axes = []
    for axis, v in enumerate(f.scope):
        src_axes.append(axis)
        dst_axes.append(span.index(v))
    arr = np.moveaxis(arr.reshape(arr.shape + (1,) * (len(span) - arr.ndim)),
                      src_axes, dst_axes)
    return np.broadcast_to(arr, tuple(span_cards))


def brute_force(factors: Sequence[Factor], task: Task, domains: Sequence[int],
                cap: int = DEFAULT_ENUMERATION_CAP) -> Factor:
    """Exact query answer by reducing the fully materialized combination.

    Evidence must already be applied.  The joint spans every non-evidence
    variable, so variables absent from all scopes still contribute their
    domain-size multiplier under summation.
    """
    n = len(domains)
    span = [v for v in range(n) if v not in task.evidence]
    span_cards = [domains[v] for v in span]
    cells = int(np.prod(span_cards)) if span else 1
    if cells > cap:
        raise ResourceLimitError(f"joint of {cells} cells exceeds cap {cap}")

    identity = 1.0 if task.combine_op is CombineOp.PRODUCT else 0.0
    joint = np.full(tuple(span_cards), identity)
    for f in factors:
        for v in f.scope:
            if v in task.evidence:
                raise InputError(f"factor scope still mentions evidence variable {v}")
        spread = _spread(f, span, span_cards)
        joint = joint * spread if task.combine_op is CombineOp.PRODUCT else joint + spread

    query_axis = span.index(task.query)
    reduce_axes = tuple(a for a in range(len(span)) if a != query_axis)
    if task.marginal_op is MarginalOp.SUM:
        answer = joint.sum(axis=reduce_axes)
    elif task.marginal_op is MarginalOp.MAX:
        answer = joint.max(axis=reduce_axes) if reduce_axes else joint
    else:
        answer = joint.min(axis=reduce_axes) if reduce_axes else joint
    return Factor((task.query,), np.asarray(answer))


@dataclass(frozen=True)
class CostModelParams:
    """Sampling setup for the uniform-random-environment cost model.

    Each table cell gets an i.i.d. uniform multiplier drawn from N evenly
    spaced levels {M/N, 2M/N, ..., M}, whose mean is k = M(N+1)/(2N).
    """

    N: int = 10
    M: float = 1.0
    samples: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise InputError("need at least two levels")
        if self.M <= 0:
            raise InputError("maximum level must be positive")
        if self.samples < 1:
            raise InputError("need at least one sample")

    @property
    def mean_level(self) -> float:
        return self.M * (self.N + 1) / (2 * self.N)


def empirical_cost(lam: Factor, lam_prime: Factor, op: MarginalOp,
                   params: CostModelParams) -> tuple[float, float]:
    """Monte Carlo estimate of the expected query error of a bound.

    Draws random per-cell multipliers F, computes
    |op_x F(x) lam'(x) - op_x F(x) lam(x)| per draw, and returns the mean
    with its standard error.  ``op`` must be SUM or MAX.
    """
    if lam.scope != lam_prime.scope:
        raise InputError("bound must share the bounded function's scope")
    if op not in (MarginalOp.SUM, MarginalOp.MAX):
        raise InputError("cost model is defined for SUM and MAX reductions")
    a = lam.flat
    b = lam_prime.flat
    rng = np.random.default_rng(params.seed)
    costs = np.empty(params.samples)
    batch = max(1, min(params.samples, 10 ** 6 // max(1, a.size)))
    done = 0
    while done < params.samples:
        take = min(batch, params.samples - done)
        levels = rng.integers(1, params.N + 1, size=(take, a.size))
        f = levels * (params.M / params.N)
        if op is MarginalOp.SUM:
            diff = f @ b - f @ a
        else:
            diff = (f * b).max(axis=1) - (f * a).max(axis=1)
        costs[done:done + take] = np.abs(diff)
        done += take
    mean = float(costs.mean())
    std_err = float(costs.std(ddof=1) / np.sqrt(params.samples)) if params.samples > 1 else 0.0
    return mean, std_err
