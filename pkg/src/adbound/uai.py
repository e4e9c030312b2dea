"""Text model files in the UAI competition format, plus evidence files.

BAYES files carry one CPT per variable with scope (parents..., child);
MARKOV files carry 0/1 constraint tables and parse into constraint
problems.  Tables are row-major with the last scope variable fastest.
Evidence files are a count followed by (variable, value) pairs.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import InputError, ParseError
from .model import BeliefNetwork, CspProblem, Factor


class _Tokens:
    def __init__(self, text: str):
        self.items: list[tuple[str, int]] = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            for tok in line.split():
                self.items.append((tok, lineno))
        self.pos = 0
        self.last_line = 0

    def take(self, what: str) -> str:
        if self.pos >= len(self.items):
            raise ParseError(f"unexpected end of file, expected {what}",
                             self.last_line or None)
        tok, line = self.items[self.pos]
        self.pos += 1
        self.last_line = line
        return tok

    def take_int(self, what: str) -> int:
        tok = self.take(what)
        try:
            return int(tok)
        except ValueError:
            raise ParseError(f"expected integer {what}, got {tok!r}", self.last_line)

    def take_float(self, what: str) -> float:
        tok = self.take(what)
        try:
            return float(tok)
        except ValueError:
            raise ParseError(f"expected number {what}, got {tok!r}", self.last_line)

    def done(self) -> bool:
        return self.pos >= len(self.items)


def _parse_tables(tokens: _Tokens, scopes: list[tuple[int, ...]],
                  cards: list[int]) -> list[Factor]:
    factors = []
    for scope in scopes:
        expected = int(np.prod([cards[v] for v in scope])) if scope else 1
        declared = tokens.take_int("table size")
        if declared != expected:
            raise ParseError(
                f"table size {declared} but scope {scope} needs {expected} entries",
                tokens.last_line)
        values = [tokens.take_float("table entry") for _ in range(declared)]
        factors.append(Factor.from_flat(scope, [cards[v] for v in scope], values))
    return factors


def parse_model(path: str | os.PathLike) -> BeliefNetwork | CspProblem:
    """Read a BAYES or MARKOV model file."""
    with open(path, "r", encoding="utf-8") as fh:
        tokens = _Tokens(fh.read())
    kind = tokens.take("preamble")
    if kind not in ("BAYES", "MARKOV"):
        raise ParseError(f"unknown preamble {kind!r}", tokens.last_line)
    n = tokens.take_int("variable count")
    if n < 1:
        raise ParseError("need at least one variable", tokens.last_line)
    cards = [tokens.take_int("cardinality") for _ in range(n)]
    if any(c < 1 for c in cards):
        raise ParseError("cardinalities must be positive", tokens.last_line)
    n_factors = tokens.take_int("factor count")
    scopes = []
    for _ in range(n_factors):
        k = tokens.take_int("scope size")
        scope = tuple(tokens.take_int("scope variable") for _ in range(k))
        for v in scope:
            if not 0 <= v < n:
                raise ParseError(f"scope variable {v} out of range", tokens.last_line)
        scopes.append(scope)
    factors = _parse_tables(tokens, scopes, cards)
    if not tokens.done():
        raise ParseError("trailing content after tables", tokens.items[tokens.pos][1])

    if kind == "BAYES":
        if n_factors != n:
            raise ParseError(f"BAYES needs one CPT per variable, got {n_factors}")
        parents = []
        for i, scope in enumerate(scopes):
            if not scope or scope[-1] != i:
                raise ParseError(
                    f"CPT {i} must end with its child variable {i}, scope {scope}")
            parents.append(scope[:-1])
        try:
            return BeliefNetwork(tuple(cards), tuple(parents), tuple(factors))
        except InputError as err:
            raise ParseError(f"invalid network: {err}") from err
    try:
        return CspProblem(tuple(cards), tuple(factors))
    except InputError as err:
        raise ParseError(f"invalid constraint problem: {err}") from err


def write_model(model: BeliefNetwork | CspProblem, path: str | os.PathLike):
    """Write a model; parsing the result reproduces it exactly."""
    lines = []
    if isinstance(model, BeliefNetwork):
        lines.append("BAYES")
        factors = model.cpts
    elif isinstance(model, CspProblem):
        lines.append("MARKOV")
        factors = model.constraints
    else:
        raise InputError(f"cannot write model of type {type(model).__name__}")
    lines.append(str(len(model.domains)))
    lines.append(" ".join(str(c) for c in model.domains))
    lines.append(str(len(factors)))
    for f in factors:
        lines.append(" ".join([str(len(f.scope))] + [str(v) for v in f.scope]))
    for f in factors:
        lines.append(str(f.flat.size))
        lines.append(" ".join(f"{v:.17g}" for v in f.flat))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_evidence(path: str | os.PathLike) -> dict[int, int]:
    """Read an evidence file: a count followed by (variable, value) pairs."""
    with open(path, "r", encoding="utf-8") as fh:
        tokens = _Tokens(fh.read())
    count = tokens.take_int("evidence count")
    evidence = {}
    for _ in range(count):
        var = tokens.take_int("evidence variable")
        val = tokens.take_int("evidence value")
        if var in evidence:
            raise ParseError(f"variable {var} evidenced twice", tokens.last_line)
        evidence[var] = val
    if not tokens.done():
        raise ParseError("trailing content after evidence pairs",
                         tokens.items[tokens.pos][1])
    return evidence
