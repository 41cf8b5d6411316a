"""Domain types for extended threshold automata and their concrete semantics.

Shared variables may be incremented, decremented and reset.  Everything here
is immutable; names are resolved to dense indices when an automaton is built,
so configurations are plain integer tuples.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence, Union

Number = Union[int, Fraction]


def _frac(value: Number | str) -> Fraction:
    return value if isinstance(value, Fraction) else Fraction(value)


@dataclass(frozen=True, order=True)
class LinearTerm:
    """``constant + sum(coef * param)`` with exact rational coefficients.

    Coefficients are stored as a name-sorted tuple of pairs with zero entries
    dropped, which makes syntactic equality the canonical equality.
    """

    constant: Fraction = Fraction(0)
    coefficients: tuple[tuple[str, Fraction], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "constant", _frac(self.constant))
        merged: dict[str, Fraction] = {}
        for name, coef in self.coefficients:
            merged[name] = merged.get(name, Fraction(0)) + _frac(coef)
        canon = tuple(sorted((n, c) for n, c in merged.items() if c != 0))
        object.__setattr__(self, "coefficients", canon)

    @classmethod
    def const(cls, value: Number) -> "LinearTerm":
        return cls(_frac(value))

    @classmethod
    def param(cls, name: str, coef: Number = 1) -> "LinearTerm":
        return cls(Fraction(0), ((name, _frac(coef)),))

    @classmethod
    def of(cls, constant: Number = 0, **coefs: Number) -> "LinearTerm":
        return cls(_frac(constant), tuple((k, _frac(v)) for k, v in coefs.items()))

    @property
    def coefficient_map(self) -> dict[str, Fraction]:
        return dict(self.coefficients)

    @property
    def parameters(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.coefficients)

    @property
    def is_constant(self) -> bool:
        return not self.coefficients

    def coefficient(self, name: str) -> Fraction:
        return self.coefficient_map.get(name, Fraction(0))

    def denominator_lcm(self) -> int:
        dens = [self.constant.denominator] + [c.denominator for _, c in self.coefficients]
        return math.lcm(*dens)

    def evaluate(self, values: Mapping[str, Number]) -> Fraction:
        total = self.constant
        for name, coef in self.coefficients:
            total += coef * values[name]
        return total

    def __add__(self, other: "LinearTerm") -> "LinearTerm":
        return LinearTerm(self.constant + other.constant, self.coefficients + other.coefficients)

    def __neg__(self) -> "LinearTerm":
        return self.scale(-1)

    def __sub__(self, other: "LinearTerm") -> "LinearTerm":
        return self + (-other)

    def scale(self, factor: Number) -> "LinearTerm":
        f = _frac(factor)
        return LinearTerm(self.constant * f, tuple((n, c * f) for n, c in self.coefficients))

    def render(self, order: Sequence[str] | None = None) -> str:
        """Canonical text, parameters in ``order`` (declaration order) then the constant.

        Without an order, positive coefficients come first.
        """
        coefs = self.coefficient_map
        default = sorted(coefs, key=lambda n: (coefs[n] < 0, n))
        names = [n for n in (order or default) if n in coefs]
        names += sorted(set(coefs) - set(names))
        parts: list[tuple[bool, str]] = []
        for name in names:
            c = coefs[name]
            mag = abs(c)
            body = name if mag == 1 else f"{_render_fraction(mag)}*{name}"
            parts.append((c < 0, body))
        if self.constant != 0 or not parts:
            parts.append((self.constant < 0, _render_fraction(abs(self.constant))))
        out = ("-" if parts[0][0] else "") + parts[0][1]
        for neg, body in parts[1:]:
            out += (" - " if neg else " + ") + body
        return out

    def __str__(self) -> str:
        return self.render()


def _render_fraction(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


ZERO = LinearTerm.const(0)
ONE = LinearTerm.const(1)


class AtomKind(enum.Enum):
    LOWER = "lower"  # threshold <= x
    UPPER = "upper"  # threshold > x


@dataclass(frozen=True, order=True)
class GuardAtom:
    kind: AtomKind
    threshold: LinearTerm
    variable: int

    def holds(self, value: int, params: Mapping[str, Number]) -> bool:
        bound = self.threshold.evaluate(params)
        if self.kind is AtomKind.LOWER:
            return bound <= value
        return bound > value


@dataclass(frozen=True)
class Guard:
    """Conjunction of guard atoms; the empty conjunction is ``true``."""

    atoms: tuple[GuardAtom, ...] = ()

    @property
    def is_true(self) -> bool:
        return not self.atoms

    def __iter__(self) -> Iterator[GuardAtom]:
        return iter(self.atoms)


TRUE_GUARD = Guard()


@dataclass(frozen=True)
class Rule:
    id: str
    source: int
    target: int
    guard: Guard
    update: tuple[int, ...]
    resets: frozenset[int] = frozenset()

    @property
    def is_monotone(self) -> bool:
        return all(u >= 0 for u in self.update) and not self.resets


# -- resilience condition -----------------------------------------------------

_OPS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


@dataclass(frozen=True)
class Comparison:
    lhs: LinearTerm
    op: str
    rhs: LinearTerm

    def __post_init__(self) -> None:
        if self.op not in _OPS:
            raise ValueError(f"unknown comparison operator {self.op!r}")

    def evaluate(self, values: Mapping[str, Number]) -> bool:
        return _OPS[self.op](self.lhs.evaluate(values), self.rhs.evaluate(values))

    def parameters(self) -> set[str]:
        return set(self.lhs.parameters) | set(self.rhs.parameters)


@dataclass(frozen=True)
class Conjunction:
    items: tuple["Formula", ...]

    def evaluate(self, values: Mapping[str, Number]) -> bool:
        return all(i.evaluate(values) for i in self.items)

    def parameters(self) -> set[str]:
        return set().union(*(i.parameters() for i in self.items)) if self.items else set()


@dataclass(frozen=True)
class Disjunction:
    items: tuple["Formula", ...]

    def evaluate(self, values: Mapping[str, Number]) -> bool:
        return any(i.evaluate(values) for i in self.items)

    def parameters(self) -> set[str]:
        return set().union(*(i.parameters() for i in self.items)) if self.items else set()


Formula = Union[Comparison, Conjunction, Disjunction]
TRUE_FORMULA = Conjunction(())


# -- automaton -----------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdAutomaton:
    name: str
    locations: tuple[str, ...]
    initial: frozenset[int]
    shared: tuple[str, ...]
    parameters: tuple[str, ...]
    resilience: Formula
    size: LinearTerm
    rules: tuple[Rule, ...]
    extra_thresholds: tuple[LinearTerm, ...] = ()  # boundaries beyond guard thresholds

    @cached_property
    def location_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.locations)}

    @cached_property
    def shared_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.shared)}

    @cached_property
    def rule_index(self) -> dict[str, int]:
        return {r.id: i for i, r in enumerate(self.rules)}

    def rule(self, rule_id: str) -> Rule:
        return self.rules[self.rule_index[rule_id]]

    def param_map(self, values: Sequence[int]) -> dict[str, int]:
        return dict(zip(self.parameters, values))

    def param_vector(self, values: Mapping[str, int]) -> tuple[int, ...]:
        return tuple(int(values[p]) for p in self.parameters)

    def admissible(self, params: Sequence[int] | Mapping[str, int]) -> bool:
        values = params if isinstance(params, Mapping) else self.param_map(params)
        if any(values[p] < 0 for p in self.parameters):
            return False
        return self.resilience.evaluate(values)

    def system_size(self, params: Sequence[int] | Mapping[str, int]) -> Fraction:
        values = params if isinstance(params, Mapping) else self.param_map(params)
        return self.size.evaluate(values)

    def thresholds(self) -> list[LinearTerm]:
        return [atom.threshold for r in self.rules for atom in r.guard] + list(self.extra_thresholds)

    @property
    def is_monotone(self) -> bool:
        return all(r.is_monotone for r in self.rules)


class ConcreteConfiguration(NamedTuple):
    counters: tuple[int, ...]
    shared: tuple[int, ...]
    params: tuple[int, ...]


# -- specifications ------------------------------------------------------------


@dataclass(frozen=True)
class GeneralCoverability:
    """Cover some counter vector of ``basis`` (pointwise lower bounds)."""

    basis: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Coverability:
    positive: frozenset[int]


@dataclass(frozen=True)
class Reachability:
    zero: frozenset[int]
    positive: frozenset[int]

    def __post_init__(self) -> None:
        if self.zero & self.positive:
            raise ValueError("zero and positive location sets overlap")


Specification = Union[GeneralCoverability, Coverability, Reachability]


def satisfies(spec: Specification, counters: Sequence[int]) -> bool:
    """Does a configuration with these counters satisfy (i.e. hit) ``spec``?"""
    if isinstance(spec, GeneralCoverability):
        return any(all(b <= k for b, k in zip(vec, counters)) for vec in spec.basis)
    if isinstance(spec, Coverability):
        return all(counters[i] > 0 for i in spec.positive)
    return all(counters[i] > 0 for i in spec.positive) and all(counters[i] == 0 for i in spec.zero)


def coverability_basis(spec: Specification, n_locations: int) -> tuple[tuple[int, ...], ...]:
    if isinstance(spec, GeneralCoverability):
        return spec.basis
    if isinstance(spec, Coverability):
        return (tuple(1 if i in spec.positive else 0 for i in range(n_locations)),)
    raise TypeError("reachability specifications have no coverability basis")


# -- validation ----------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    category: str
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.severity}: {self.category}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not any(v.severity == "error" for v in self.violations)

    @property
    def categories(self) -> set[str]:
        return {v.category for v in self.violations}

    def __bool__(self) -> bool:
        return bool(self.violations)

    def __iter__(self) -> Iterator[Violation]:
        return iter(self.violations)

    def __str__(self) -> str:
        return "\n".join(map(str, self.violations))


def _duplicates(names: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    dups: list[str] = []
    for n in names:
        if n in seen and n not in dups:
            dups.append(n)
        seen.add(n)
    return dups


def validate(ta: ThresholdAutomaton, solver=None, check_resilience: bool = True) -> ValidationReport:
    """Collect every structural problem of ``ta`` instead of raising on the first."""
    out: list[Violation] = []
    n_loc, n_shared = len(ta.locations), len(ta.shared)
    params = set(ta.parameters)

    for kind, names in (("location", ta.locations), ("shared variable", ta.shared),
                        ("parameter", ta.parameters), ("rule", [r.id for r in ta.rules])):
        for dup in _duplicates(names):
            out.append(Violation("duplicate name", f"{kind} {dup!r} declared twice"))

    if not ta.initial:
        out.append(Violation("initial locations", "no initial location"))
    for i in sorted(ta.initial):
        if not 0 <= i < n_loc:
            out.append(Violation("undeclared location", f"initial location index {i}"))

    def check_term(term: LinearTerm, where: str) -> None:
        for p in term.parameters:
            if p not in params:
                out.append(Violation("undeclared parameter", f"{p!r} in {where}"))

    for p in sorted(ta.resilience.parameters()):
        if p not in params:
            out.append(Violation("undeclared parameter", f"{p!r} in resilience condition"))
    check_term(ta.size, "system size")
    for term in ta.extra_thresholds:
        check_term(term, "extra thresholds")

    for r in ta.rules:
        for end, idx in (("from", r.source), ("to", r.target)):
            if not 0 <= idx < n_loc:
                out.append(Violation("undeclared location", f"rule {r.id}: {end} index {idx}"))
        if len(r.update) != n_shared:
            out.append(Violation("update length",
                                 f"rule {r.id}: update has {len(r.update)} entries, expected {n_shared}"))
        for j in sorted(r.resets):
            if not 0 <= j < n_shared:
                out.append(Violation("undeclared shared variable", f"rule {r.id}: reset index {j}"))
        for atom in r.guard:
            if not 0 <= atom.variable < n_shared:
                out.append(Violation("undeclared shared variable",
                                     f"rule {r.id}: guard variable index {atom.variable}"))
            check_term(atom.threshold, f"guard of rule {r.id}")
        for j, u in enumerate(r.update):
            if abs(u) > 1:
                out.append(Violation("unsupported update",
                                     f"rule {r.id}: update {u:+d} on shared variable {j}", "warning"))

    if check_resilience and not any(v.category == "undeclared parameter" for v in out):
        from .smt import SolverClient, SolverFailure, lia_satisfiable
        try:
            client = solver or SolverClient()
            if not lia_satisfiable(client, ta, []):
                out.append(Violation("resilience condition unsatisfiable",
                                     "no admissible parameter vector", "warning"))
        except SolverFailure as exc:
            out.append(Violation("resilience check skipped", str(exc), "warning"))
    return ValidationReport(out)


class TerminationClass(enum.Enum):
    GUARANTEED_TERMINATING = "GuaranteedTerminating"
    SEMI_DECISION = "SemiDecision"


def classify_termination(ta: ThresholdAutomaton) -> TerminationClass:
    """Increment-only automata without resets make the backward procedure terminate."""
    if ta.is_monotone:
        return TerminationClass.GUARANTEED_TERMINATING
    return TerminationClass.SEMI_DECISION


# -- concrete semantics ----------------------------------------------------------


def concrete_enabled(guard: Guard, shared: Sequence[int], params: Mapping[str, Number]) -> bool:
    return all(atom.holds(shared[atom.variable], params) for atom in guard)


def concrete_step(ta: ThresholdAutomaton, config: ConcreteConfiguration,
                  rule: Rule) -> ConcreteConfiguration | None:
    """Fire ``rule`` once; ``None`` when it is disabled in ``config``.

    A rule whose update would make a (non-reset) shared variable negative is
    disabled, keeping shared values in the naturals.
    """
    if config.counters[rule.source] < 1:
        return None
    if not concrete_enabled(rule.guard, config.shared, ta.param_map(config.params)):
        return None
    shared = []
    for j, (g, u) in enumerate(zip(config.shared, rule.update)):
        if j in rule.resets:
            shared.append(0)
        elif g + u < 0:
            return None
        else:
            shared.append(g + u)
    counters = list(config.counters)
    counters[rule.source] -= 1
    counters[rule.target] += 1
    return ConcreteConfiguration(tuple(counters), tuple(shared), config.params)


def initial_configurations(ta: ThresholdAutomaton,
                           params: Sequence[int]) -> Iterator[ConcreteConfiguration]:
    """All distributions of N(p) processes over the initial locations."""
    size = ta.system_size(params)
    if size.denominator != 1 or size < 0:
        return
    initial = sorted(ta.initial)
    zero_shared = (0,) * len(ta.shared)
    for parts in _compositions(int(size), len(initial)):
        counters = [0] * len(ta.locations)
        for loc, k in zip(initial, parts):
            counters[loc] = k
        yield ConcreteConfiguration(tuple(counters), zero_shared, tuple(params))


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest
