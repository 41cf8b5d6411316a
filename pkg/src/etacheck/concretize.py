"""Concretization of abstract paths as QF_LIA queries.

An abstract path ``c0 r0 c1 ... cm`` corresponds to concrete runs that fire
``r_i`` some ``c_i >= 1`` times in a row while the shared variables stay in the
intervals the path prescribes.  The query fixes the threshold order of the
abstract domain, so a model is an admissible parameter vector of that order
together with counters, shared values and repetition counts at every node.

Concrete counters are only tied to the abstract ones through the final mode
constraint (cover: at least the abstract counters; reach: the same occupied
locations); in between they follow the flow equations.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .abstraction import AbstractTA
from .model import AtomKind, ConcreteConfiguration, Guard, ThresholdAutomaton
from .semantics import DRAIN, KEEP, AbstractConfiguration, Config
from .smt import Affine, Script, SolverClient, SolverFailure, compare, conj, disj, parameter_constraints


class Mode(enum.Enum):
    COVER = "cover"
    REACH = "reach"
    PLAIN = "plain"


@dataclass(frozen=True)
class AbstractPath:
    configs: tuple[Config, ...]
    rules: tuple[str, ...]
    variants: tuple[str | None, ...] = ()  # ZCS occupancy constraint per step

    def __post_init__(self) -> None:
        if len(self.configs) != len(self.rules) + 1:
            raise ValueError("a path alternates configurations and rules")
        if not self.variants:
            object.__setattr__(self, "variants", (None,) * len(self.rules))

    def __len__(self) -> int:
        return len(self.rules)

    def render(self, ata: AbstractTA | None = None) -> str:
        parts = [self.configs[0].render(ata)]
        for r, c in zip(self.rules, self.configs[1:]):
            parts += [r, c.render(ata)]
        return ", ".join(parts)


@dataclass(frozen=True)
class WitnessPath:
    """Accelerated concrete run: each rule fires ``count`` times in a row."""

    params: Mapping[str, int]
    initial: ConcreteConfiguration
    steps: tuple[tuple[str, int], ...]
    final: ConcreteConfiguration

    def expanded_rules(self) -> list[str]:
        return [rid for rid, count in self.steps for _ in range(count)]

    def to_json(self, ta: ThresholdAutomaton) -> dict:
        def conf(c: ConcreteConfiguration) -> dict:
            return {"counters": dict(zip(ta.locations, c.counters)),
                    "shared": dict(zip(ta.shared, c.shared))}
        return {"params": dict(self.params), "initial": conf(self.initial),
                "steps": [{"rule": r, "count": k} for r, k in self.steps], "final": conf(self.final)}


@dataclass(frozen=True)
class Spurious:
    pass


@dataclass(frozen=True)
class Concrete:
    witness: WitnessPath
    model: Mapping[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class ConcretizationQuery:
    path: AbstractPath
    mode: Mode
    script: str
    names: Mapping[str, str]  # symbol -> human-readable meaning
    n_steps: int


def _k(i: int, loc: int) -> str:
    return f"k_{i}_{loc}"


def _g(i: int, var: int) -> str:
    return f"g_{i}_{var}"


def _guard_atoms(guard: Guard, values: Sequence[Affine]) -> list[str]:
    out = []
    for atom in guard:
        d = Affine.of_term(atom.threshold)
        x = values[atom.variable]
        out.append(compare("<=", d, x) if atom.kind is AtomKind.LOWER else compare(">", d, x))
    return out


def build_concretize(path: AbstractPath, ata: AbstractTA, mode: Mode) -> ConcretizationQuery:
    ta = ata.ta
    n_loc, n_sh, m = len(ta.locations), len(ta.shared), len(path)
    script = Script()
    names: dict[str, str] = {}
    for p in ta.parameters:
        names["p_" + p] = p
    parameter_constraints(script, ta)
    atoms, symbols = ata.order.smt_constraints()
    script.declare(*symbols)
    for a in atoms:
        script.add(a)

    for i in range(m + 1):
        for loc in range(n_loc):
            s = _k(i, loc)
            names[s] = f"node {i}: {ta.locations[loc]}"
            script.add(f"(>= {s} 0)", s)
        for v in range(n_sh):
            s = _g(i, v)
            names[s] = f"node {i}: {ta.shared[v]}"
            script.add(f"(>= {s} 0)", s)
    for i in range(m):
        names[f"c_{i}"] = f"repetitions of step {i}"
        script.add(f"(>= c_{i} 1)", f"c_{i}")

    k = [[Affine.var(_k(i, loc)) for loc in range(n_loc)] for i in range(m + 1)]
    g = [[Affine.var(_g(i, v)) for v in range(n_sh)] for i in range(m + 1)]

    # initial configuration
    size = Affine.of_term(ta.size)
    total = Affine()
    for loc in sorted(ta.initial):
        total = total + k[0][loc]
    script.add(compare("==", total, size))
    for loc in range(n_loc):
        if loc not in ta.initial:
            script.add(compare("==", k[0][loc], 0))
    for v in range(n_sh):
        script.add(compare("==", g[0][v], 0))

    # interval membership of every node
    dom = ata.domain
    for i, cfg in enumerate(path.configs):
        for v, iv in enumerate(cfg.intervals):
            script.add(compare("<=", dom.lower_affine(iv), g[i][v]))
            upper = dom.upper_affine(iv)
            if upper is not None:
                script.add(compare("<", g[i][v], upper))

    by_id = {r.id: r for r in ta.rules}
    for i, (rid, variant) in enumerate(zip(path.rules, path.variants)):
        r = by_id[rid]
        c = Affine.var(f"c_{i}")
        a, b = r.source, r.target
        for loc in range(n_loc):
            if a != b and loc == a:
                script.add(compare("==", k[i][a], c + k[i + 1][a]))
            elif a != b and loc == b:
                script.add(compare("==", k[i + 1][b], c + k[i][b]))
            else:
                script.add(compare("==", k[i + 1][loc], k[i][loc]))
        if a == b:
            script.add(compare(">=", k[i][a], 1))
        for v in range(n_sh):
            if v in r.resets:
                script.add(compare("==", g[i + 1][v], 0))
            else:
                script.add(compare("==", g[i + 1][v], g[i][v] + c * r.update[v]))
        for atom in _guard_atoms(r.guard, g[i]):
            script.add(atom)
        # last firing of an accelerated step must still be enabled
        before_last = [Affine() if v in r.resets else g[i + 1][v] - r.update[v] for v in range(n_sh)]
        last_ok = _guard_atoms(r.guard, before_last)
        if last_ok:
            script.add(disj([f"(<= c_{i} 1)", conj(last_ok)]))
        if variant == KEEP and a != b:
            script.add(compare(">=", k[i + 1][a], 1))
        elif variant == DRAIN and a != b:
            script.add(compare("==", k[i + 1][a], 0))

    final = path.configs[-1]
    target = final.counters if isinstance(final, AbstractConfiguration) else final.occupancy
    if mode is Mode.COVER:
        for loc, want in enumerate(target):
            if want:
                script.add(compare(">=", k[m][loc], want))
    elif mode is Mode.REACH:
        for loc, want in enumerate(target):
            script.add(compare(">=", k[m][loc], 1) if want else compare("==", k[m][loc], 0))

    return ConcretizationQuery(path, mode, script.render(), names, m)


def witness_from_model(query: ConcretizationQuery, ata: AbstractTA, model: Mapping[str, int]) -> WitnessPath:
    ta = ata.ta
    m = query.n_steps

    def val(s: str) -> int:
        return int(model.get(s, 0))

    params = {p: val("p_" + p) for p in ta.parameters}
    pvec = ta.param_vector(params)

    def conf(i: int) -> ConcreteConfiguration:
        return ConcreteConfiguration(tuple(val(_k(i, l)) for l in range(len(ta.locations))),
                                     tuple(val(_g(i, v)) for v in range(len(ta.shared))), pvec)

    steps = tuple((rid, val(f"c_{i}")) for i, rid in enumerate(query.path.rules))
    return WitnessPath(params, conf(0), steps, conf(m))


def interpret(query: ConcretizationQuery, ata: AbstractTA, result) -> Spurious | Concrete:
    if result.status == "unsat":
        return Spurious()
    if result.status != "sat":
        raise SolverFailure(f"solver answered {result.status}", query.script)
    return Concrete(witness_from_model(query, ata, result.model), dict(result.model))


def discharge(query: ConcretizationQuery, ata: AbstractTA, client: SolverClient | None = None) -> Spurious | Concrete:
    client = client or SolverClient()
    return interpret(query, ata, client.check(query.script))


def discharge_many(queries: Sequence[ConcretizationQuery], ata: AbstractTA,
                   client: SolverClient) -> list[Spurious | Concrete]:
    results = client.check_many([q.script for q in queries])
    return [interpret(q, ata, r) for q, r in zip(queries, results)]

