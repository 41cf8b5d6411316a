"""Explicit-state exploration of the concrete counter system.

Breadth-first search over all configurations reachable for one fixed,
admissible parameter vector.  This is the ground truth the parameterized
engine is cross-checked against; it never claims anything beyond the given
parameters.
"""
from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping, Sequence

from .concretize import WitnessPath
from .kernels import concrete_successors, rule_table
from .model import (
    ConcreteConfiguration,
    Specification,
    ThresholdAutomaton,
    concrete_step,
    initial_configurations,
    satisfies,
)


class InadmissibleParameters(ValueError):
    pass


State = tuple  # counters followed by shared values


@dataclass
class ExplorationResult:
    params: dict[str, int]
    parents: dict[State, tuple[State, int] | None]
    exhausted: bool
    depth: int
    n_locations: int
    hit: State | None = None
    rule_ids: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.parents)

    def __contains__(self, cfg: ConcreteConfiguration) -> bool:
        return tuple(cfg.counters) + tuple(cfg.shared) in self.parents

    def configuration(self, state: State) -> ConcreteConfiguration:
        pvec = tuple(self.params.values())
        return ConcreteConfiguration(state[:self.n_locations], state[self.n_locations:], pvec)

    def configurations(self) -> Iterator[ConcreteConfiguration]:
        for s in self.parents:
            yield self.configuration(s)

    def trace(self, state: State) -> tuple[list[ConcreteConfiguration], list[str]]:
        states, rules = [state], []
        link = self.parents[state]
        while link is not None:
            prev, ridx = link
            states.append(prev)
            rules.append(self.rule_ids[ridx])
            link = self.parents[prev]
        states.reverse()
        rules.reverse()
        return [self.configuration(s) for s in states], rules


def _check_params(ta: ThresholdAutomaton, params: Mapping[str, int]) -> dict[str, int]:
    values = {p: int(params[p]) for p in ta.parameters}
    if not ta.admissible(values):
        raise InadmissibleParameters(f"parameters {values} violate the resilience condition")
    return values


def explore(ta: ThresholdAutomaton, params: Mapping[str, int], depth_limit: int | None = None,
            node_limit: int | None = None, stop: Callable[[State], bool] | None = None) -> ExplorationResult:
    """BFS from every initial configuration; ``stop`` ends the search at a matching state."""
    values = _check_params(ta, params)
    pvec = ta.param_vector(values)
    n_loc = len(ta.locations)
    table = rule_table(ta, values)
    parents: dict[State, tuple[State, int] | None] = {}
    frontier: list[State] = []
    rule_ids = tuple(r.id for r in ta.rules)
    result = ExplorationResult(values, parents, False, 0, n_loc, rule_ids=rule_ids)
    for cfg in initial_configurations(ta, pvec):
        s = cfg.counters + cfg.shared
        if node_limit is not None and len(parents) >= node_limit:
            return result
        parents[s] = None
        frontier.append(s)
        if stop is not None and stop(s):
            result.hit = s
            return result
    depth = 0
    while frontier:
        if depth_limit is not None and depth >= depth_limit:
            result.depth = depth
            return result
        nxt: list[State] = []
        for s in frontier:
            for ridx, succ in concrete_successors(s, table, n_loc):
                if succ in parents:
                    continue
                if node_limit is not None and len(parents) >= node_limit:
                    result.depth = depth
                    return result
                parents[succ] = (s, ridx)
                nxt.append(succ)
                if stop is not None and stop(succ):
                    result.hit = succ
                    result.depth = depth + 1
                    return result
        frontier = nxt
        depth += 1
    result.depth = depth
    result.exhausted = True
    return result


@dataclass(frozen=True)
class Holds:
    states: int


@dataclass(frozen=True)
class Violated:
    configs: tuple[ConcreteConfiguration, ...]
    rules: tuple[str, ...]
    params: Mapping[str, int] = field(default_factory=dict)

    def witness(self) -> WitnessPath:
        return WitnessPath(dict(self.params), self.configs[0], tuple((r, 1) for r in self.rules), self.configs[-1])


@dataclass(frozen=True)
class Inconclusive:
    states: int
    depth: int


def oracle_check(ta: ThresholdAutomaton, params: Mapping[str, int], spec: Specification,
                 depth_limit: int | None = None, node_limit: int | None = None) -> Holds | Violated | Inconclusive:
    n_loc = len(ta.locations)
    res = explore(ta, params, depth_limit, node_limit, stop=lambda s: satisfies(spec, s[:n_loc]))
    if res.hit is not None:
        configs, rules = res.trace(res.hit)
        return Violated(tuple(configs), tuple(rules), res.params)
    if res.exhausted:
        return Holds(len(res))
    return Inconclusive(len(res), res.depth)


def validate_witness(ta: ThresholdAutomaton, w: WitnessPath) -> bool:
    """Replay an accelerated path one firing at a time."""
    try:
        values = _check_params(ta, w.params)
    except (InadmissibleParameters, KeyError):
        return False
    pvec = ta.param_vector(values)
    init = w.initial
    if tuple(init.params) != pvec or any(init.shared) or any(k < 0 for k in init.counters):
        return False
    if any(init.counters[l] for l in range(len(ta.locations)) if l not in ta.initial):
        return False
    if sum(init.counters) != ta.system_size(values):
        return False
    cfg = ConcreteConfiguration(tuple(init.counters), tuple(init.shared), pvec)
    for rid, count in w.steps:
        if rid not in ta.rule_index or count < 1:
            return False
        rule = ta.rule(rid)
        for _ in range(count):
            nxt = concrete_step(ta, cfg, rule)
            if nxt is None:
                return False
            cfg = nxt
    return cfg.counters == tuple(w.final.counters) and cfg.shared == tuple(w.final.shared)


def admissible_params(ta: ThresholdAutomaton, bound: int) -> list[dict[str, int]]:
    """All admissible parameter vectors with every entry in ``0..bound``.

    Vectors with a negative or fractional system size are skipped.
    """
    out = []
    for vec in itertools.product(range(bound + 1), repeat=len(ta.parameters)):
        values = dict(zip(ta.parameters, vec))
        if not ta.admissible(values):
            continue
        size = ta.system_size(values)
        if size < 0 or size.denominator != 1:
            continue
        out.append(values)
    return out


def parse_params(text: str, ta: ThresholdAutomaton) -> dict[str, int]:
    """``n=4,t=1,f=0`` -> dict; every parameter must be given."""
    values: dict[str, int] = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        name, sep, val = item.partition("=")
        if not sep:
            raise ValueError(f"expected name=value, got {item!r}")
        values[name.strip()] = int(val)
    missing = [p for p in ta.parameters if p not in values]
    unknown = [p for p in values if p not in ta.parameters]
    if missing or unknown:
        raise ValueError(f"parameters missing {missing} / unknown {unknown}")
    return values


def simulate(ta: ThresholdAutomaton, params: Mapping[str, int], steps: int,
             seed: int = 0) -> tuple[list[ConcreteConfiguration], list[str]]:
    """A random run of at most ``steps`` firings from a random initial configuration."""
    rng = random.Random(seed)
    values = _check_params(ta, params)
    initial = list(initial_configurations(ta, ta.param_vector(values)))
    if not initial:
        return [], []
    n_loc = len(ta.locations)
    table = rule_table(ta, values)
    cfg = rng.choice(initial)
    state = cfg.counters + cfg.shared
    configs, rules = [cfg], []
    for _ in range(steps):
        succ = concrete_successors(state, table, n_loc)
        if not succ:
            break
        ridx, state = rng.choice(succ)
        rules.append(ta.rules[ridx].id)
        configs.append(ConcreteConfiguration(state[:n_loc], state[n_loc:], cfg.params))
    return configs, rules


def step_path(ta: ThresholdAutomaton, configs: Sequence[ConcreteConfiguration], rules: Sequence[str]) -> bool:
    """Does each consecutive pair follow by one firing of the named rule?"""
    return all(concrete_step(ta, a, ta.rule(r)) == b for a, r, b in zip(configs, rules, configs[1:]))
