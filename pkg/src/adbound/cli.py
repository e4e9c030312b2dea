"""Command-line front end: solve single queries, generate random models,
and run benchmark experiments from a config file.

Exit codes: 0 success, 2 input or parse error, 3 configuration error,
4 resource cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .decompose import DecomposeConstants, Direction
from .elimination import variable_elimination
from .engine import AdConfig, ad_run, bound_conditional, estimate
from .errors import (AdboundError, ConfigError, InputError, ParseError,
                     ResourceLimitError)
from .harness import (ExperimentConfig, format_report_table, gen_random_maxcsp,
                      gen_random_network, run_experiment)
from .minibuckets import MbConfig, MbMode, mb_run
from .model import BeliefNetwork, CspProblem, Task, restrict_evidence
from .oracle import brute_force
from .errors import ResourceLimitError as _ResourceLimitError
from .uai import parse_evidence, parse_model, write_model


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adbound")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="bound or solve a single query")
    solve.add_argument("--model", required=True)
    solve.add_argument("--evidence")
    solve.add_argument("--task", required=True, choices=("pr", "mpe", "maxcsp"))
    solve.add_argument("--method", required=True, choices=("ad", "mb", "exact"))
    solve.add_argument("--direction", default="both",
                       choices=("upper", "lower", "both"))
    solve.add_argument("--ibound", type=int, default=2)
    solve.add_argument("--query", type=int, required=True)
    solve.add_argument("--z", type=float, default=-40.0)
    solve.add_argument("--coeff-floor", type=float, default=1e-5)

    gen = sub.add_parser("gen", help="generate a random model file")
    gen.add_argument("--kind", required=True, choices=("net", "maxcsp"))
    gen.add_argument("--roots", type=int, default=5)
    gen.add_argument("--children", type=int, default=110)
    gen.add_argument("--parents", type=int, default=3)
    gen.add_argument("--card", type=int, default=2)
    gen.add_argument("--vars", type=int, default=30)
    gen.add_argument("--constraints", type=int, default=125)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", required=True)

    bench = sub.add_parser("bench", help="run a benchmark experiment")
    bench.add_argument("--config", required=True)
    return parser


def _task_for(name: str, query: int, evidence: dict[int, int]) -> Task:
    maker = {"pr": Task.belief, "mpe": Task.mpe, "maxcsp": Task.maxcsp}[name]
    return maker(query, evidence)


def _print_values(label: str, values: np.ndarray):
    cells = " ".join(f"{v:.10g}" for v in values)
    print(f"{label:<12} {cells}")


def _cmd_solve(args) -> int:
    model = parse_model(args.model)
    evidence = parse_evidence(args.evidence) if args.evidence else {}
    if isinstance(model, CspProblem) and args.task != "maxcsp":
        raise InputError("constraint models support only the maxcsp task")
    if isinstance(model, BeliefNetwork) and args.task == "maxcsp":
        raise InputError("belief networks do not support the maxcsp task")
    domains = list(model.domains)
    if not 0 <= args.query < len(domains):
        raise InputError(f"query variable {args.query} out of range")
    task = _task_for(args.task, args.query, evidence)
    factors = [restrict_evidence(f, evidence) for f in model.factors()]
    print(f"query variable {args.query}, {domains[args.query]} values")

    if args.method == "exact":
        try:
            result = brute_force(factors, task, domains)
        except _ResourceLimitError:
            result = variable_elimination(factors, task, domains)
        _print_values("Exact", result.values)
        return 0

    directions = {"upper": [Direction.UPPER], "lower": [Direction.LOWER],
                  "both": [Direction.LOWER, Direction.UPPER]}[args.direction]
    if args.method == "ad":
        consts = DecomposeConstants(Z=args.z, coeff_floor=args.coeff_floor)
        results = {d: ad_run(factors, task, domains,
                             AdConfig(args.ibound, d, consts)) for d in directions}
    else:
        mode_of = {Direction.LOWER: MbMode.LOWER, Direction.UPPER: MbMode.UPPER}
        results = {d: mb_run(factors, task, domains,
                             MbConfig(args.ibound, mode_of[d])) for d in directions}

    for d in directions:
        _print_values({Direction.LOWER: "Low", Direction.UPPER: "High"}[d],
                      results[d].values)
    if len(directions) == 2:
        lo, hi = results[Direction.LOWER].values, results[Direction.UPPER].values
        est = np.array([estimate(h, l, task) for h, l in zip(hi, lo)])
        _print_values("Est.", est)
        if args.task == "pr":
            clo, chi = bound_conditional(hi, lo)
            _print_values("Cond.Low", clo)
            _print_values("Cond.High", chi)
    return 0


def _cmd_gen(args) -> int:
    if args.kind == "net":
        model = gen_random_network(args.roots, args.children, args.parents,
                                   args.card, args.seed)
    else:
        model = gen_random_maxcsp(args.vars, args.card, args.constraints,
                                  args.seed)
    write_model(model, args.out)
    print(f"wrote {args.kind} model with {len(model.domains)} variables to {args.out}")
    return 0


_CONFIG_KEYS = {"kind", "task", "ad_ibound", "mb_ibound", "evidence", "trials",
                "seed", "roots", "children", "parents", "card", "vars",
                "constraints", "model", "out", "oracle_cap", "z", "coeff_floor"}


def _load_bench_config(path: str) -> tuple[ExperimentConfig, str]:
    raw: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError("expected key=value", lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"unknown config key {key!r} (line {lineno})")
            raw[key] = value

    def geti(key, default):
        return int(raw[key]) if key in raw else default

    def getf(key, default):
        return float(raw[key]) if key in raw else default

    kind = raw.get("kind", "net")
    cfg = ExperimentConfig(
        kind=kind,
        task=raw.get("task", "pr"),
        ad_ibound=geti("ad_ibound", 2),
        mb_ibound=geti("mb_ibound", 3),
        n_evidence=geti("evidence", 0),
        trials=geti("trials", 1),
        seed=geti("seed", 0),
        model_path=raw.get("model"),
        net_shape=(geti("roots", 5), geti("children", 110),
                   geti("parents", 3), geti("card", 2)),
        csp_shape=(geti("vars", 30), geti("card", 3), geti("constraints", 125)),
        oracle_cap=geti("oracle_cap", 10 ** 7),
        z=getf("z", -40.0),
        coeff_floor=getf("coeff_floor", 1e-5),
    )
    if kind == "file" and not cfg.model_path:
        raise ConfigError("kind=file requires a model= path")
    records_path = raw.get("out", path + ".records")
    return cfg, records_path


def _jsonable(arr):
    return None if arr is None else [float(x) for x in np.atleast_1d(arr)]


def _cmd_bench(args) -> int:
    cfg, records_path = _load_bench_config(args.config)
    reports, aggregates = run_experiment(cfg)
    print(format_report_table(aggregates))
    with open(records_path, "w", encoding="utf-8") as fh:
        for r in reports:
            fh.write(json.dumps({
                "label": r.label, "low": _jsonable(r.low), "est": _jsonable(r.est),
                "high": _jsonable(r.high), "exact": _jsonable(r.exact),
                "est_eps": r.est_eps, "hi_lo": r.hi_lo,
                "elapsed_seconds": r.elapsed_seconds}) + "\n")
        for a in aggregates:
            fh.write(json.dumps({
                "label": a.label, "aggregate": True, "low": a.low, "est": a.est,
                "high": a.high, "exact": a.exact, "est_eps": a.est_eps,
                "hi_lo": a.hi_lo, "elapsed_seconds": a.elapsed_seconds}) + "\n")
    print(f"records written to {records_path}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "gen":
            return _cmd_gen(args)
        return _cmd_bench(args)
    except ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except ResourceLimitError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4
    except (InputError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except AdboundError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
