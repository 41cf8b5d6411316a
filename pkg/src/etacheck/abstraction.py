"""Parametric interval abstraction of shared variables.

Guard thresholds split the naturals into intervals ``[d_i, d_{i+1})``.  Which
intervals exist depends on how the thresholds compare for the admissible
parameters, so we enumerate every satisfiable threshold order with LIA queries
and build one abstract automaton per order.

Shared values are naturals, so a threshold only matters through
``ceil(max(d, 0))``.  Orders compare these effective values: thresholds that
are ``<= 0`` merge with the boundary 0, and equal effective values share a
boundary.  For integer-coefficient thresholds the ceiling is the term itself;
rational ones get an auxiliary integer ``ceil_<i>`` in the queries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

from .model import ONE, ZERO, AtomKind, LinearTerm, Rule, ThresholdAutomaton
from .smt import Affine, Script, SolverClient, compare, parameter_constraints


class NoAdmissibleParameters(ValueError):
    pass


class UnsupportedUpdate(ValueError):
    pass


def collect_thresholds(ta: ThresholdAutomaton) -> tuple[LinearTerm, ...]:
    """0 and 1 first, then guard thresholds in order of first appearance."""
    out = [ZERO, ONE]
    for term in ta.thresholds():
        if term not in out:
            out.append(term)
    return tuple(out)


def _effective(index: int, term: LinearTerm, prefix: str) -> tuple[Affine, list[str], list[str]]:
    """Affine form of ``ceil(term)`` plus defining atoms and extra symbols."""
    aff = Affine.of_term(term, prefix)
    if term.denominator_lcm() == 1:
        return aff, [], sorted(aff.symbols())
    name = f"ceil_{index}"
    e = Affine.var(name)
    atoms = [compare("<", e - 1, aff), compare("<=", aff, e)]
    return e, atoms, sorted(aff.symbols() | {name})


@dataclass(frozen=True)
class ThresholdOrder:
    """A total preorder of thresholds as a sequence of boundary blocks.

    ``blocks[0]`` holds 0 and every threshold that is at most 0, ``blocks[1]``
    holds 1.  Blocks are strictly increasing in effective value.
    """

    thresholds: tuple[LinearTerm, ...]
    blocks: tuple[tuple[int, ...], ...]

    def block_of(self, threshold: LinearTerm) -> int:
        idx = self.thresholds.index(threshold)
        for b, members in enumerate(self.blocks):
            if idx in members:
                return b
        raise KeyError(threshold)

    def representative(self, block: int) -> int:
        if block == 0:
            return 0
        if block == 1:
            return 1
        return self.blocks[block][0]

    def effective(self, index: int, prefix: str = "p_") -> Affine:
        return _effective(index, self.thresholds[index], prefix)[0]

    def smt_constraints(self, prefix: str = "p_") -> tuple[list[str], list[str]]:
        """Atoms pinning the parameters to this order, and the symbols they use."""
        atoms: list[str] = []
        symbols: set[str] = set()
        eff: dict[int, Affine] = {}
        for b in self.blocks:
            for i in b:
                e, defs, syms = _effective(i, self.thresholds[i], prefix)
                eff[i] = e
                atoms += defs
                symbols |= set(syms)
        for i in self.blocks[0]:
            atoms.append(compare("<=", eff[i], 0))
        for b in range(1, len(self.blocks)):
            rep = eff[self.representative(b)]
            for i in self.blocks[b]:
                atoms.append(compare("==", eff[i], rep))
            if b + 1 < len(self.blocks):
                atoms.append(compare("<", rep, eff[self.representative(b + 1)]))
        return [a for a in atoms if a != "true"], sorted(symbols)

    def effective_values(self, params: Mapping[str, int]) -> list[int]:
        return [max(0, math.ceil(t.evaluate(params))) for t in self.thresholds]

    def holds(self, params: Mapping[str, int]) -> bool:
        """Do these concrete parameters induce this order?"""
        vals = self.effective_values(params)
        if any(vals[i] != 0 for i in self.blocks[0]):
            return False
        prev = 0
        for b in range(1, len(self.blocks)):
            rep = vals[self.representative(b)]
            if rep <= prev or any(vals[i] != rep for i in self.blocks[b]):
                return False
            prev = rep
        return True

    def render(self) -> str:
        return " < ".join(" = ".join(str(self.thresholds[i]) for i in block) for block in self.blocks)

    def __str__(self) -> str:
        return self.render()


def _order_satisfiable(client: SolverClient, ta: ThresholdAutomaton, order: ThresholdOrder) -> bool:
    script = Script()
    parameter_constraints(script, ta)
    atoms, symbols = order.smt_constraints()
    script.declare(*symbols)
    for a in atoms:
        script.add(a)
    return client.check(script.render()).sat


def enumerate_orders(ta: ThresholdAutomaton, thresholds: Sequence[LinearTerm] | None = None,
                     client: SolverClient | None = None) -> list[ThresholdOrder]:
    """Every threshold order that some admissible parameter vector induces.

    Thresholds are inserted one at a time (into an existing block or as a new
    block above block 1); partial orders that are already unsatisfiable are
    dropped, since adding thresholds only adds constraints.
    """
    thresholds = tuple(thresholds if thresholds is not None else collect_thresholds(ta))
    client = client or SolverClient()
    base = ThresholdOrder(thresholds, ((0,), (1,)))
    if not _order_satisfiable(client, ta, ThresholdOrder(thresholds, ((0,),))):
        raise NoAdmissibleParameters(f"resilience condition of {ta.name} is unsatisfiable")
    partial: list[tuple[tuple[int, ...], ...]] = [base.blocks]
    for idx in range(2, len(thresholds)):
        candidates = []
        for blocks in partial:
            for b in range(len(blocks)):
                candidates.append(blocks[:b] + (blocks[b] + (idx,),) + blocks[b + 1:])
            for pos in range(2, len(blocks) + 1):
                candidates.append(blocks[:pos] + ((idx,),) + blocks[pos:])
        scripts = []
        for blocks in candidates:
            script = Script()
            parameter_constraints(script, ta)
            atoms, symbols = ThresholdOrder(thresholds, blocks).smt_constraints()
            script.declare(*symbols)
            for a in atoms:
                script.add(a)
            scripts.append(script.render())
        results = client.check_many(scripts)
        partial = [blocks for blocks, res in zip(candidates, results) if res.sat]
    if len(thresholds) == 2:
        partial = [b for b in partial if _order_satisfiable(client, ta, ThresholdOrder(thresholds, b))]
    return [ThresholdOrder(thresholds, blocks) for blocks in partial]


@dataclass(frozen=True)
class Interval:
    index: int
    lower: LinearTerm
    upper: LinearTerm | None  # None: unbounded

    def render(self) -> str:
        hi = "inf" if self.upper is None else str(self.upper)
        return f"[{self.lower}, {hi})"


@dataclass(frozen=True)
class AbstractDomain:
    order: ThresholdOrder
    intervals: tuple[Interval, ...]

    def __len__(self) -> int:
        return len(self.intervals)

    @property
    def last(self) -> int:
        return len(self.intervals) - 1

    def lower_affine(self, i: int, prefix: str = "p_") -> Affine:
        if i == 0:
            return Affine(const=0)
        return self.order.effective(self.order.representative(i), prefix)

    def upper_affine(self, i: int, prefix: str = "p_") -> Affine | None:
        return None if i == self.last else self.lower_affine(i + 1, prefix)

    def locate(self, value: int, params: Mapping[str, int]) -> int:
        """Index of the interval holding a concrete value (params must induce the order)."""
        vals = self.order.effective_values(params)
        idx = 0
        for b in range(1, len(self.intervals)):
            if vals[self.order.representative(b)] <= value:
                idx = b
        return idx

    def render(self) -> str:
        return "{" + ", ".join(i.render() for i in self.intervals) + "}"


def build_domain(order: ThresholdOrder) -> AbstractDomain:
    reps = [order.thresholds[order.representative(b)] for b in range(len(order.blocks))]
    reps[0] = ZERO
    intervals = tuple(
        Interval(i, reps[i], reps[i + 1] if i + 1 < len(reps) else None) for i in range(len(reps))
    )
    return AbstractDomain(order, intervals)


@dataclass(frozen=True)
class AbstractRule:
    rule: Rule
    allowed: tuple[frozenset[int], ...]  # per shared variable

    @property
    def id(self) -> str:
        return self.rule.id

    @property
    def source(self) -> int:
        return self.rule.source

    @property
    def target(self) -> int:
        return self.rule.target

    @property
    def update(self) -> tuple[int, ...]:
        return self.rule.update

    @property
    def resets(self) -> frozenset[int]:
        return self.rule.resets

    def guard_holds(self, intervals: Sequence[int]) -> bool:
        return all(iv in ok for iv, ok in zip(intervals, self.allowed))


@dataclass(frozen=True)
class AbstractTA:
    ta: ThresholdAutomaton
    domain: AbstractDomain
    rules: tuple[AbstractRule, ...]

    @property
    def order(self) -> ThresholdOrder:
        return self.domain.order

    @property
    def n_locations(self) -> int:
        return len(self.ta.locations)

    @property
    def n_shared(self) -> int:
        return len(self.ta.shared)

    @cached_property
    def initial(self) -> frozenset[int]:
        return self.ta.initial

    def render_guard(self, arule: AbstractRule) -> str:
        parts = []
        full = frozenset(range(len(self.domain)))
        for j, ok in enumerate(arule.allowed):
            if ok == full:
                continue
            names = " | ".join(f"I{i}" for i in sorted(ok)) or "false"
            parts.append(f"{self.ta.shared[j]} in {{{names}}}" if len(ok) != 1
                         else f"{self.ta.shared[j]} = I{next(iter(ok))}")
        return " && ".join(parts) or "true"


def abstract_ta(ta: ThresholdAutomaton, domain: AbstractDomain) -> AbstractTA:
    full = frozenset(range(len(domain)))
    rules = []
    for r in ta.rules:
        bad = [u for u in r.update if abs(u) > 1]
        if bad:
            raise UnsupportedUpdate(f"rule {r.id}: update {bad[0]:+d} cannot be abstracted")
        allowed = [full] * len(ta.shared)
        for atom in r.guard:
            j = domain.order.block_of(atom.threshold)
            ok = frozenset(range(j, len(domain))) if atom.kind is AtomKind.LOWER else frozenset(range(j))
            allowed[atom.variable] = allowed[atom.variable] & ok
        rules.append(AbstractRule(r, tuple(allowed)))
    return AbstractTA(ta, domain, tuple(rules))


def abstractions(ta: ThresholdAutomaton, client: SolverClient | None = None) -> list[AbstractTA]:
    """One abstract automaton per satisfiable threshold order."""
    thresholds = collect_thresholds(ta)
    return [abstract_ta(ta, build_domain(o)) for o in enumerate_orders(ta, thresholds, client)]


def order_for(orders: Sequence[ThresholdOrder], params: Mapping[str, int]) -> int:
    """Index of the order induced by concrete parameters."""
    for i, o in enumerate(orders):
        if o.holds(params):
            return i
    raise LookupError(f"no order matches parameters {dict(params)}")

