"""Random problem generators, experiment runner and report metrics.

Experiment shapes follow the benchmark conventions used throughout this
package: layered random networks (roots plus children with a fixed parent
count, uniform-then-normalized CPTs) and random binary-constraint
problems where each constraint forbids half of the value pairs.
Probabilistic metrics are reported as base-10 logarithms; the min-sum
task reports raw values.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .decompose import DecomposeConstants, Direction
from .elimination import variable_elimination
from .engine import AdConfig, ad_run, bound_conditional, estimate
from .errors import ConfigError, InputError, ResourceLimitError
from .minibuckets import MbConfig, MbMode, mb_run
from .model import (BeliefNetwork, CombineOp, CspProblem, Factor, MarginalOp,
                    Task, restrict_evidence)
from .oracle import DEFAULT_ENUMERATION_CAP, brute_force

TASK_NAMES = {"pr": (MarginalOp.SUM, CombineOp.PRODUCT),
              "mpe": (MarginalOp.MAX, CombineOp.PRODUCT),
              "maxcsp": (MarginalOp.MIN, CombineOp.SUM)}


def gen_random_network(n_roots: int, n_children: int, n_parents: int,
                       cardinality: int, seed: int) -> BeliefNetwork:
    """Layered random network: roots first, then children whose parents are
    drawn uniformly without replacement from strictly earlier variables."""
    if n_roots < 1 or cardinality < 2:
        raise ConfigError("need at least one root and binary-or-larger domains")
    if n_children > 0 and n_parents > n_roots:
        raise ConfigError(
            f"first child cannot draw {n_parents} parents from {n_roots} roots")
    rng = np.random.default_rng(seed)
    n = n_roots + n_children
    domains = [cardinality] * n
    parents: list[tuple[int, ...]] = []
    cpts: list[Factor] = []
    for i in range(n):
        pa = () if i < n_roots else tuple(
            sorted(int(p) for p in rng.choice(i, size=n_parents, replace=False)))
        shape = tuple(domains[p] for p in pa) + (domains[i],)
        table = rng.uniform(0.0, 1.0, size=shape)
        table = table / table.sum(axis=-1, keepdims=True)
        parents.append(pa)
        cpts.append(Factor(pa + (i,), table))
    return BeliefNetwork(tuple(domains), tuple(parents), tuple(cpts))


def gen_random_maxcsp(n_vars: int, cardinality: int, n_constraints: int,
                      seed: int) -> CspProblem:
    """Random binary constraints, each forbidding half of all value pairs.

    With an odd number of cells the halves alternate between floor and
    ceil by a per-constraint coin flip.
    """
    if n_vars < 2:
        raise ConfigError("need at least two variables")
    if n_constraints < 1 or cardinality < 2:
        raise ConfigError("need at least one constraint and cardinality >= 2")
    rng = np.random.default_rng(seed)
    domains = [cardinality] * n_vars
    constraints = []
    n_cells = cardinality * cardinality
    for _ in range(n_constraints):
        u, v = sorted(int(x) for x in rng.choice(n_vars, size=2, replace=False))
        forbidden = n_cells // 2
        if n_cells % 2:
            forbidden += int(rng.integers(0, 2))
        table = np.zeros(n_cells)
        table[rng.choice(n_cells, size=forbidden, replace=False)] = 1.0
        constraints.append(Factor((u, v), table.reshape(cardinality, cardinality)))
    return CspProblem(tuple(domains), tuple(constraints))


@dataclass
class BoundReport:
    """One algorithm's result row: per-query-value bounds plus metrics."""

    label: str
    low: np.ndarray | None
    est: np.ndarray | None
    high: np.ndarray | None
    exact: np.ndarray | None
    est_eps: float | None
    hi_lo: float | None
    elapsed_seconds: float


@dataclass
class AggregateRow:
    """Across-trial means; log-scale for probabilistic tasks, raw for min-sum."""

    label: str
    low: float
    est: float
    high: float
    exact: float | None
    est_eps: float | None
    hi_lo: float
    elapsed_seconds: float


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str                      # "net" | "maxcsp" | "file"
    task: str                      # "pr" | "mpe" | "maxcsp"
    ad_ibound: int
    mb_ibound: int
    n_evidence: int = 0
    trials: int = 1
    seed: int = 0
    model_path: str | None = None
    net_shape: tuple[int, int, int, int] = (5, 110, 3, 2)   # roots, children, parents, card
    csp_shape: tuple[int, int, int] = (30, 3, 125)          # vars, card, constraints
    oracle_cap: int = DEFAULT_ENUMERATION_CAP
    z: float = -40.0
    coeff_floor: float = 1e-5

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("need at least one trial")
        if self.task not in TASK_NAMES:
            raise ConfigError(f"unknown task {self.task!r}")
        if self.kind not in ("net", "maxcsp", "file"):
            raise ConfigError(f"unknown problem kind {self.kind!r}")


def _mean_log10(values: np.ndarray) -> float:
    with np.errstate(divide="ignore"):
        return float(np.mean(np.log10(values)))


def _divergence_factor(est: np.ndarray, exact: np.ndarray) -> float:
    """Mean factor by which the estimate misses the exact value."""
    ratios = []
    for e, x in zip(est, exact):
        hi, lo = max(e, x), min(e, x)
        if lo > 0:
            ratios.append(hi / lo)
        else:
            ratios.append(1.0 if hi == 0 else float("inf"))
    return float(np.mean(ratios))


def make_report(label: str, task: Task, uppers: np.ndarray, lowers: np.ndarray,
                exact: np.ndarray | None, seconds: float,
                est_values: np.ndarray | None = None) -> BoundReport:
    """Turn joint bounds into the reported row for the task.

    Belief queries are reported as conditional probabilities (bounded from
    the joint bounds); MPE and min-sum queries are reported directly.  The
    estimate defaults to the between-bounds mean appropriate to the task.
    """
    if task.combine_op is CombineOp.PRODUCT and task.marginal_op is MarginalOp.SUM:
        low, high = bound_conditional(uppers, lowers)
        if exact is not None:
            total = exact.sum()
            exact = exact / total if total > 0 else None
        if est_values is not None:
            total = est_values.sum()
            est = est_values / total if total > 0 else est_values
        else:
            est = np.array([estimate(h, l, task) for h, l in zip(high, low)])
    else:
        low, high = np.asarray(lowers, dtype=float), np.asarray(uppers, dtype=float)
        if est_values is not None:
            est = np.asarray(est_values, dtype=float)
        else:
            est = np.array([estimate(h, l, task) for h, l in zip(high, low)])

    with np.errstate(divide="ignore", invalid="ignore"):
        if task.combine_op is CombineOp.PRODUCT:
            hi_lo = float(np.mean(np.log10(high) - np.log10(low)))
            est_eps = None
            if exact is not None:
                est_eps = float(np.mean(np.abs(np.log10(est) - np.log10(exact))))
        else:
            hi_lo = float(np.mean(high - low))
            est_eps = None if exact is None else _divergence_factor(est, exact)
    return BoundReport(label, low, est, high, exact, est_eps, hi_lo, seconds)


def _positive_evidence(factors: Sequence[Factor], task: Task,
                       domains: Sequence[int], cap: int) -> bool:
    cells = 1
    for v in range(len(domains)):
        if v not in task.evidence:
            cells *= domains[v]
            if cells > cap:
                break
    if cells <= cap:
        return bool(brute_force(factors, Task.belief(task.query, task.evidence),
                                domains, cap=cap).values.sum() > 0)
    return all(np.any(f.values > 0) for f in factors)


def sample_trial(domains: Sequence[int], base_factors: Sequence[Factor],
                 task_name: str, n_evidence: int, rng: np.random.Generator,
                 oracle_cap: int = DEFAULT_ENUMERATION_CAP
                 ) -> tuple[Task, list[Factor]]:
    """Sample a query and evidence (rejecting zero-probability evidence),
    returning the task and the evidence-restricted factors."""
    n = len(domains)
    if n_evidence >= n:
        raise ConfigError("evidence count must leave at least the query free")
    marg, comb = TASK_NAMES[task_name]
    for _ in range(100):
        chosen = rng.choice(n, size=n_evidence + 1, replace=False)
        query = int(chosen[0])
        evidence = {int(v): int(rng.integers(domains[int(v)])) for v in chosen[1:]}
        task = Task(marg, comb, query, evidence)
        restricted = [restrict_evidence(f, evidence) for f in base_factors]
        if comb is not CombineOp.PRODUCT or _positive_evidence(
                restricted, task, domains, oracle_cap):
            return task, restricted
    raise InputError("could not sample evidence with positive probability")


def _problem_for_trial(cfg: ExperimentConfig, trial: int):
    seed = int(np.random.SeedSequence([cfg.seed, trial]).generate_state(1)[0])
    if cfg.kind == "net":
        r, c, p, card = cfg.net_shape
        return gen_random_network(r, c, p, card, seed)
    if cfg.kind == "maxcsp":
        v, card, m = cfg.csp_shape
        return gen_random_maxcsp(v, card, m, seed)
    from .uai import parse_model
    return parse_model(cfg.model_path)


def run_experiment(cfg: ExperimentConfig
                   ) -> tuple[list[BoundReport], list[AggregateRow]]:
    """Run all trials; returns per-trial reports plus aggregate rows.

    Each trial samples a fresh problem (unless reading from file), random
    evidence and a random query, then runs both bounding directions, the
    three mini-bucket modes, and the exact answer when affordable.
    """
    consts = DecomposeConstants(Z=cfg.z, coeff_floor=cfg.coeff_floor)
    reports: list[BoundReport] = []
    for trial in range(cfg.trials):
        problem = _problem_for_trial(cfg, trial)
        domains = list(problem.domains)
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, trial, 1]))
        task, factors = sample_trial(domains, problem.factors(), cfg.task,
                                     cfg.n_evidence, rng, cfg.oracle_cap)

        exact = None
        try:
            exact = brute_force(factors, task, domains, cap=cfg.oracle_cap).values
        except ResourceLimitError:
            try:
                exact = variable_elimination(factors, task, domains).values
            except ResourceLimitError:
                exact = None

        t0 = time.perf_counter()
        ad_up = ad_run(factors, task, domains,
                       AdConfig(cfg.ad_ibound, Direction.UPPER, consts))
        ad_lo = ad_run(factors, task, domains,
                       AdConfig(cfg.ad_ibound, Direction.LOWER, consts))
        ad_seconds = time.perf_counter() - t0
        reports.append(make_report(f"ad[{trial}]", task, ad_up.values,
                                   ad_lo.values, exact, ad_seconds))

        t0 = time.perf_counter()
        mb_up = mb_run(factors, task, domains, MbConfig(cfg.mb_ibound, MbMode.UPPER))
        mb_lo = mb_run(factors, task, domains, MbConfig(cfg.mb_ibound, MbMode.LOWER))
        mb_est = mb_run(factors, task, domains,
                        MbConfig(cfg.mb_ibound, MbMode.ESTIMATE))
        mb_seconds = time.perf_counter() - t0
        reports.append(make_report(f"mb[{trial}]", task, mb_up.values,
                                   mb_lo.values, exact, mb_seconds,
                                   est_values=mb_est.values))

    aggregates = [aggregate_reports("ad", cfg, [r for r in reports if r.label.startswith("ad")]),
                  aggregate_reports("mb", cfg, [r for r in reports if r.label.startswith("mb")])]
    return reports, aggregates


def aggregate_reports(label: str, cfg: ExperimentConfig,
                      rows: Sequence[BoundReport]) -> AggregateRow:
    """Mean of base-10 logs (probabilistic) or raw values (min-sum),
    averaged over query values then trials."""
    log_scale = cfg.task in ("pr", "mpe")
    summarize = _mean_log10 if log_scale else lambda a: float(np.mean(a))
    lows = [summarize(r.low) for r in rows]
    ests = [summarize(r.est) for r in rows]
    highs = [summarize(r.high) for r in rows]
    exacts = [summarize(r.exact) for r in rows if r.exact is not None]
    eps = [r.est_eps for r in rows if r.est_eps is not None]
    return AggregateRow(
        label,
        float(np.mean(lows)), float(np.mean(ests)), float(np.mean(highs)),
        float(np.mean(exacts)) if exacts else None,
        float(np.mean(eps)) if eps else None,
        float(np.mean([r.hi_lo for r in rows])),
        float(np.sum([r.elapsed_seconds for r in rows])))


def format_report_table(aggregates: Sequence[AggregateRow]) -> str:
    """Plain-text table with one column per algorithm, one row per metric."""
    rows = ["Low", "Est.", "High", "Exact", "Est.eps", "Hi-Lo", "Time"]
    out = [" " * 9 + "".join(f"{a.label:>14}" for a in aggregates)]

    def fmt(x):
        if x is None:
            return "n/a"
        return f"{x:.4g}"

    values = {
        "Low": [a.low for a in aggregates],
        "Est.": [a.est for a in aggregates],
        "High": [a.high for a in aggregates],
        "Exact": [a.exact for a in aggregates],
        "Est.eps": [a.est_eps for a in aggregates],
        "Hi-Lo": [a.hi_lo for a in aggregates],
        "Time": [f"{a.elapsed_seconds:.2f}s" for a in aggregates],
    }
    for name in rows:
        cells = values[name]
        out.append(f"{name:<9}" + "".join(
            f"{(c if isinstance(c, str) else fmt(c)):>14}" for c in cells))
    return "\n".join(out)
