"""SMT-LIB (QF_LIA) scripting and a subprocess solver client.

Scripts are plain text.  The client runs an external solver binary over
stdin/stdout, caches results by script hash and can optionally dump every
script it sends.
"""
from __future__ import annotations

import hashlib
import logging
import math
import os
import re
import shlex
import shutil
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .model import Comparison, Conjunction, Disjunction, Formula, LinearTerm, ThresholdAutomaton

log = logging.getLogger(__name__)

DEFAULT_SOLVER = "z3 -in"
_END = "<<etacheck-end>>"
_MODEL_RE = re.compile(r"\(define-fun\s+(\S+)\s+\(\)\s+Int\s+(\(\s*-\s*\d+\s*\)|-?\d+)\s*\)")


class SolverFailure(RuntimeError):
    """The solver crashed, timed out, answered ``unknown`` or spoke gibberish."""

    def __init__(self, message: str, query: str | None = None):
        super().__init__(message)
        self.query = query


@dataclass(frozen=True)
class SolverResult:
    status: str  # sat | unsat | unknown
    model: Mapping[str, int] = field(default_factory=dict)
    raw: str = ""

    @property
    def sat(self) -> bool:
        return self.status == "sat"


# -- affine expressions over SMT symbols ----------------------------------------


class Affine:
    """``const + sum(coef * symbol)`` with rational coefficients."""

    __slots__ = ("terms", "const")

    def __init__(self, terms: Mapping[str, Fraction] | None = None, const: Fraction | int = 0):
        self.terms = {k: Fraction(v) for k, v in (terms or {}).items() if v != 0}
        self.const = Fraction(const)

    @classmethod
    def var(cls, name: str, coef: int | Fraction = 1) -> "Affine":
        return cls({name: Fraction(coef)})

    @classmethod
    def of_term(cls, term: LinearTerm, prefix: str = "p_") -> "Affine":
        return cls({prefix + n: c for n, c in term.coefficients}, term.constant)

    def __add__(self, other: "Affine | int") -> "Affine":
        if not isinstance(other, Affine):
            return Affine(self.terms, self.const + other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, Fraction(0)) + v
        return Affine(terms, self.const + other.const)

    __radd__ = __add__

    def __neg__(self) -> "Affine":
        return self * -1

    def __sub__(self, other: "Affine | int") -> "Affine":
        return self + (-other)

    def __mul__(self, k: int | Fraction) -> "Affine":
        return Affine({n: c * k for n, c in self.terms.items()}, self.const * k)

    __rmul__ = __mul__

    def symbols(self) -> set[str]:
        return set(self.terms)


def smt_int(value: int) -> str:
    return str(value) if value >= 0 else f"(- {-value})"


def _sum_expr(terms: Mapping[str, int]) -> str:
    parts = []
    for name in sorted(terms):
        c = terms[name]
        parts.append(name if c == 1 else f"(* {smt_int(c)} {name})")
    if not parts:
        return "0"
    return parts[0] if len(parts) == 1 else f"(+ {' '.join(parts)})"


def compare(op: str, lhs: Affine | int, rhs: Affine | int) -> str:
    """``lhs op rhs`` as an integer-coefficient SMT atom (denominators cleared)."""
    lhs = lhs if isinstance(lhs, Affine) else Affine(const=lhs)
    rhs = rhs if isinstance(rhs, Affine) else Affine(const=rhs)
    diff = lhs - rhs
    scale = math.lcm(diff.const.denominator, *(c.denominator for c in diff.terms.values()))
    terms = {n: int(c * scale) for n, c in diff.terms.items()}
    bound = int(-diff.const * scale)
    if not terms:
        value = {"<": 0 < bound, "<=": 0 <= bound, ">": 0 > bound, ">=": 0 >= bound,
                 "==": 0 == bound, "!=": 0 != bound}[op]
        return "true" if value else "false"
    expr, rhs_s = _sum_expr(terms), smt_int(bound)
    if op == "==":
        return f"(= {expr} {rhs_s})"
    if op == "!=":
        return f"(not (= {expr} {rhs_s}))"
    return f"({op} {expr} {rhs_s})"


def conj(atoms: Sequence[str]) -> str:
    atoms = [a for a in atoms if a != "true"]
    if not atoms:
        return "true"
    return atoms[0] if len(atoms) == 1 else f"(and {' '.join(atoms)})"


def disj(atoms: Sequence[str]) -> str:
    if not atoms:
        return "false"
    return atoms[0] if len(atoms) == 1 else f"(or {' '.join(atoms)})"


def formula_to_smt(formula: Formula, prefix: str = "p_") -> str:
    if isinstance(formula, Comparison):
        return compare(formula.op, Affine.of_term(formula.lhs, prefix), Affine.of_term(formula.rhs, prefix))
    if isinstance(formula, Conjunction):
        return conj([formula_to_smt(f, prefix) for f in formula.items])
    if isinstance(formula, Disjunction):
        return disj([formula_to_smt(f, prefix) for f in formula.items])
    raise TypeError(f"not a formula: {formula!r}")


class Script:
    """Accumulates integer declarations and assertions, renders QF_LIA text."""

    def __init__(self) -> None:
        self._decls: dict[str, None] = {}
        self.asserts: list[str] = []

    def declare(self, *names: str) -> None:
        for n in names:
            self._decls.setdefault(n, None)

    def add(self, atom: str, *symbols: str) -> None:
        self.declare(*symbols)
        if atom != "true":
            self.asserts.append(atom)

    @property
    def symbols(self) -> list[str]:
        return list(self._decls)

    def render(self) -> str:
        lines = ["(set-logic QF_LIA)"]
        lines += [f"(declare-const {n} Int)" for n in self._decls]
        lines += [f"(assert {a})" for a in self.asserts]
        lines += ["(check-sat)", "(get-model)"]
        return "\n".join(lines) + "\n"


def parameter_constraints(script: Script, ta: ThresholdAutomaton, prefix: str = "p_") -> None:
    """Parameters are naturals satisfying the resilience condition."""
    for p in ta.parameters:
        script.add(f"(>= {prefix}{p} 0)", prefix + p)
    script.add(formula_to_smt(ta.resilience, prefix))


def lia_satisfiable(client: "SolverClient", ta: ThresholdAutomaton, extra: Iterable[str]) -> bool:
    script = Script()
    parameter_constraints(script, ta)
    for atom in extra:
        script.add(atom)
    result = client.check(script.render())
    if result.status == "unknown":
        raise SolverFailure("solver answered unknown", script.render())
    return result.sat


# -- process interaction ---------------------------------------------------------


def _command(command: str | Sequence[str] | None) -> list[str]:
    if command is None:
        command = os.environ.get("ETACHECK_SOLVER", DEFAULT_SOLVER)
    return shlex.split(command) if isinstance(command, str) else list(command)


def parse_output(text: str, script: str | None = None) -> SolverResult:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise SolverFailure("empty solver output", script)
    status = lines[0]
    if status not in ("sat", "unsat", "unknown"):
        raise SolverFailure(f"unexpected solver output: {lines[0][:200]}", script)
    model: dict[str, int] = {}
    if status == "sat":
        for name, value in _MODEL_RE.findall(text):
            model[name] = -int(value.strip("()- ")) if value.startswith("(") else int(value)
    return SolverResult(status, model, text)


def solver_session(script: str, command: str | Sequence[str] | None = None,
                   timeout: float | None = 30.0) -> SolverResult:
    """Run one script through a fresh solver process."""
    argv = _command(command)
    if not argv or shutil.which(argv[0]) is None and not Path(argv[0]).exists():
        raise SolverFailure(f"solver executable not found: {argv[0] if argv else '<empty>'}", script)
    try:
        proc = subprocess.run(argv, input=script, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        raise SolverFailure(f"solver timed out after {timeout}s", script) from None
    except OSError as exc:
        raise SolverFailure(f"cannot launch solver: {exc}", script) from None
    return parse_output(proc.stdout, script)


class SolverClient:
    """Caching front end for the external solver.

    ``check_many`` sends several independent scripts to one process, separated
    by ``(reset)``; each script still stands alone and is cached on its own.
    With ``jobs > 1`` the batches run in that many solver processes at once.
    """

    def __init__(self, command: str | Sequence[str] | None = None, timeout: float | None = 30.0,
                 dump_dir: str | os.PathLike | None = None, batch_size: int = 64, jobs: int = 1):
        self.command = _command(command)
        self.timeout = timeout
        self.dump_dir = Path(dump_dir) if dump_dir else None
        self.batch_size = batch_size
        self.jobs = max(1, jobs)
        self._cache: dict[str, SolverResult] = {}
        self.calls = 0
        self.cache_hits = 0

    @staticmethod
    def key(script: str) -> str:
        return hashlib.sha256(script.encode()).hexdigest()

    def _dump(self, key: str, script: str) -> None:
        if self.dump_dir is not None:
            self.dump_dir.mkdir(parents=True, exist_ok=True)
            (self.dump_dir / f"{key[:16]}.smt2").write_text(script)

    def check(self, script: str) -> SolverResult:
        return self.check_many([script])[0]

    def check_many(self, scripts: Sequence[str]) -> list[SolverResult]:
        keys = [self.key(s) for s in scripts]
        todo: dict[str, str] = {}
        for k, s in zip(keys, scripts):
            if k in self._cache:
                self.cache_hits += 1
            elif k not in todo:
                todo[k] = s
        items = list(todo.items())
        self.calls += len(items)
        size = min(self.batch_size, max(1, -(-len(items) // self.jobs)))
        chunks = [items[i:i + size] for i in range(0, len(items), size)]
        if self.jobs > 1 and len(chunks) > 1:
            with ThreadPoolExecutor(self.jobs) as pool:
                outcomes = list(pool.map(lambda c: self._run_batch([s for _, s in c]), chunks))
        else:
            outcomes = [self._run_batch([s for _, s in c]) for c in chunks]
        for chunk, results in zip(chunks, outcomes):
            for (k, _), res in zip(chunk, results):
                self._cache[k] = res
        return [self._cache[k] for k in keys]

    def _run_batch(self, scripts: list[str]) -> list[SolverResult]:
        for s in scripts:
            self._dump(self.key(s), s)
        if len(scripts) == 1:
            return [solver_session(scripts[0], self.command, self.timeout)]
        text = "".join(f'{s}(echo "{_END}")\n(reset)\n' for s in scripts)
        timeout = None if self.timeout is None else self.timeout * len(scripts)
        try:
            out = solver_session_raw(text, self.command, timeout)
        except SolverFailure:
            log.debug("batch failed, retrying %d scripts one by one", len(scripts))
            return [solver_session(s, self.command, self.timeout) for s in scripts]
        segments = out.split(_END)
        if len(segments) < len(scripts):
            return [solver_session(s, self.command, self.timeout) for s in scripts]
        return [parse_output(seg, s) for seg, s in zip(segments, scripts)]


def solver_session_raw(text: str, command: Sequence[str], timeout: float | None) -> str:
    if not command or shutil.which(command[0]) is None and not Path(command[0]).exists():
        raise SolverFailure(f"solver executable not found: {command[0] if command else '<empty>'}")
    try:
        proc = subprocess.run(list(command), input=text, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        raise SolverFailure(f"solver timed out after {timeout}s") from None
    except OSError as exc:
        raise SolverFailure(f"cannot launch solver: {exc}") from None
    return proc.stdout
