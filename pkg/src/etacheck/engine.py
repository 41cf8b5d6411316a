"""Backward fixed points over abstract configurations and error-path search.

Three checks share one skeleton:

* general coverability on the ACS (predecessor bases, ``<=`` pruning),
* reachability on the ZCS (exact predecessors, equality pruning),
* location coverability on the ZCS (predecessor bases, ``<=`` on occupancy).

Each run iterates predecessors from the error set until nothing new appears,
recording the edges it used.  If an initial configuration was met, the
recorded graph is unfolded breadth-first into abstract error paths and every
path goes to the solver; the first one (in enumeration order) with a model is
a concrete counterexample.
"""
from __future__ import annotations

import logging
import time
from collections import defaultdict
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Iterator, Sequence

from .abstraction import AbstractTA, abstractions
from .concretize import (
    AbstractPath,
    Concrete,
    Mode,
    WitnessPath,
    build_concretize,
    discharge_many,
)
from .kernels import find_geq_all, find_leq
from .model import (
    AtomKind,
    Coverability,
    Reachability,
    Specification,
    ThresholdAutomaton,
    coverability_basis,
)
from .semantics import (
    AbstractConfiguration,
    BasisTransition,
    Config,
    ZConfiguration,
    acs_initial,
    cpred_basis,
    zcs_cover_pred_basis,
    zcs_initial,
    zcs_pred,
)
from .smt import SolverClient

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Budget:
    max_paths: int = 10_000
    unfold: int = 3
    wall_clock: float = 300.0
    max_prefixes: int | None = None  # partial paths examined; default 20 * max_paths

    @property
    def prefix_limit(self) -> int:
        return self.max_prefixes if self.max_prefixes is not None else 20 * self.max_paths


@dataclass
class Statistics:
    iterations: int = 0
    frontier_sizes: list[int] = field(default_factory=list)
    nodes: int = 0
    edges: int = 0
    roots: int = 0
    sinks: int = 0
    paths_enumerated: int = 0
    prefixes_checked: int = 0
    spurious: int = 0
    solver_calls: int = 0
    cache_hits: int = 0
    truncated: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {k: (list(v) if isinstance(v, list) else v) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class SafeProven:
    name = "SafeProven"


@dataclass(frozen=True)
class Witness:
    witness: WitnessPath
    path: AbstractPath
    model: dict
    name = "Witness"


@dataclass(frozen=True)
class BudgetExhausted:
    reason: str
    name = "BudgetExhausted"


Verdict = SafeProven | Witness | BudgetExhausted


@dataclass
class OrderResult:
    index: int
    order: str
    verdict: Verdict
    stats: Statistics
    ata: AbstractTA


@dataclass
class CheckResult:
    verdict: Verdict
    orders: list[OrderResult]

    @property
    def witness_order(self) -> OrderResult | None:
        for o in self.orders:
            if isinstance(o.verdict, Witness):
                return o
        return None


def _key(cfg: Config) -> tuple:
    vec = cfg[0]
    return (sum(vec), vec, cfg[1])


# -- error graph ----------------------------------------------------------------------


@dataclass
class ErrorGraph:
    nodes: set
    out: dict  # node -> set of (rule, target, lifted, variant)
    roots: list
    sinks: set

    @property
    def edges(self) -> list[BasisTransition]:
        return [BasisTransition(s, r, t, lifted, variant)
                for s in sorted(self.out, key=_key) for r, t, lifted, variant in sorted(self.out[s], key=_edge_key)]


def _edge_key(e: tuple) -> tuple:
    rule, tgt, lifted, variant = e
    return (rule, _key(tgt), lifted, variant or "")


class _Store:
    """Kept configurations plus edges, with domination-based replacement."""

    def __init__(self, wqo: bool):
        self.wqo = wqo
        self.kept: set = set()
        self.by_iv: dict[tuple, list] = defaultdict(list)  # intervals -> list of vectors
        self.out: dict = defaultdict(set)
        self.inc: dict = defaultdict(set)
        self.sinks: set = set()

    def add_edge(self, src, rule, tgt, lifted, variant) -> None:
        self.out[src].add((rule, tgt, lifted, variant))
        self.inc[tgt].add((src, rule, lifted, variant))

    def _remove_node(self, node) -> tuple[set, set]:
        outs = self.out.pop(node, set())
        ins = self.inc.pop(node, set())
        for rule, tgt, lifted, variant in outs:
            self.inc[tgt].discard((node, rule, lifted, variant))
        for src, rule, lifted, variant in ins:
            self.out[src].discard((rule, node, lifted, variant))
        self.kept.discard(node)
        vecs = self.by_iv[node[1]]
        vecs.remove(node[0])
        return outs, ins

    def _keep(self, node) -> None:
        self.kept.add(node)
        self.by_iv[node[1]].append(node[0])

    def seed(self, nodes: Iterable) -> list:
        out = []
        for n in sorted(set(nodes), key=_key):
            if n not in self.kept:
                self._keep(n)
                self.sinks.add(n)
                out.append(n)
        return out

    def insert(self, node, edges: list[tuple]) -> bool:
        """Add a freshly generated source with its outgoing edges; True if kept."""
        cls = type(node)
        if node in self.kept:
            for e in edges:
                self.add_edge(node, *e)
            return False
        if self.wqo:
            vecs = self.by_iv[node[1]]
            i = find_leq(node[0], vecs)
            if i >= 0:
                dom = cls(vecs[i], node[1])
                for rule, tgt, lifted, variant in edges:
                    self.add_edge(dom, rule, tgt, lifted, variant)
                return False
            bigger = [cls(vecs[j], node[1]) for j in find_geq_all(node[0], vecs)]
            self._keep(node)
            for e in edges:
                self.add_edge(node, *e)
            for b in sorted(bigger, key=_key):
                if b in self.sinks:
                    continue
                outs, ins = self._remove_node(b)
                for rule, tgt, lifted, variant in outs:
                    self.add_edge(node, rule, node if tgt == b else tgt, lifted, variant)
                for src, rule, lifted, variant in ins:
                    self.add_edge(node if src == b else src, rule, node, lifted, variant)
            return True
        self._keep(node)
        for e in edges:
            self.add_edge(node, *e)
        return True


def backward_fixed_point(
    err: Iterable[Config],
    pred: Callable[[Iterable[Config]], tuple[set, set]],
    wqo: bool,
    is_initial: Callable[[Config], bool],
    stats: Statistics,
    deadline: float | None = None,
) -> ErrorGraph | None:
    """Iterate predecessors from ``err``; None when the deadline passed."""
    store = _Store(wqo)
    frontier = store.seed(err)
    stats.frontier_sizes.append(len(frontier))
    while frontier:
        if deadline is not None and time.monotonic() > deadline:
            return None
        stats.iterations += 1
        _, edges = pred(frontier)
        grouped: dict = defaultdict(list)
        for e in edges:
            grouped[e.source].append((e.rule, e.target, e.lifted, e.variant))
        new = []
        for src in sorted(grouped, key=_key):
            # targets may have been replaced by a smaller configuration meanwhile
            es = [(r, t, l, v) for r, t, l, v in grouped[src] if t in store.kept]
            if not es:
                continue
            if store.insert(src, es):
                new.append(src)
        frontier = [n for n in new if n in store.kept]
        stats.frontier_sizes.append(len(frontier))
    roots = sorted((n for n in store.kept if is_initial(n)), key=_key)
    stats.nodes = len(store.kept)
    stats.edges = sum(len(v) for v in store.out.values())
    stats.roots = len(roots)
    stats.sinks = len(store.sinks)
    return ErrorGraph(set(store.kept), {k: set(v) for k, v in store.out.items() if v}, roots, set(store.sinks))


# -- path enumeration -------------------------------------------------------------------


@dataclass(frozen=True)
class _Partial:
    nodes: tuple
    rules: tuple[str, ...]
    variants: tuple
    occupiable: frozenset[int]

    def path(self) -> AbstractPath:
        return AbstractPath(self.nodes, self.rules, self.variants)


@dataclass
class _RuleInfo:
    source: int
    target: int
    monotone: bool
    upper: bool


def _rule_info(ta: ThresholdAutomaton) -> dict[str, _RuleInfo]:
    return {r.id: _RuleInfo(r.source, r.target, r.is_monotone,
                            any(a.kind is AtomKind.UPPER for a in r.guard)) for r in ta.rules}


class PathEnumerator:
    """Breadth-first unfolding of an error graph, one layer (path length) at a time.

    A node may appear at most ``unfold + 1`` times on a path.  Cycles made of
    increment-only rules without upper guards are never re-entered; other
    cycles are unfolded up to the bound and a cut is recorded.
    """

    def __init__(self, graph: ErrorGraph, ta: ThresholdAutomaton, unfold: int, stats: Statistics):
        self.graph = graph
        self.unfold = unfold
        self.stats = stats
        self.info = _rule_info(ta)
        order = {r.id: i for i, r in enumerate(ta.rules)}
        self.adj = {s: sorted(es, key=lambda e: (order[e[0]], _key(e[1]), e[2], e[3] or ""))
                    for s, es in graph.out.items()}
        self.initial = ta.initial
        self.layer = [_Partial((r,), (), (), frozenset(ta.initial)) for r in graph.roots]

    def _extend(self, p: _Partial) -> Iterator[_Partial]:
        last = p.nodes[-1]
        for rule, tgt, _lifted, variant in self.adj.get(last, ()):
            info = self.info[rule]
            if info.source not in p.occupiable:
                continue
            if tgt in p.nodes:
                idx = len(p.nodes) - 1 - p.nodes[::-1].index(tgt)
                cycle = list(p.rules[idx:]) + [rule]
                monotone = all(self.info[r].monotone for r in cycle)
                upper = any(self.info[r].upper for r in cycle)
                if monotone and not upper:
                    continue
                if p.nodes.count(tgt) >= self.unfold + 1:
                    msg = "cycle " + " ".join(cycle) + f" cut after {self.unfold} unfoldings"
                    target = self.stats.warnings if monotone else self.stats.truncated
                    if msg not in target:
                        target.append(msg)
                    continue
            yield _Partial(p.nodes + (tgt,), p.rules + (rule,), p.variants + (variant,),
                           p.occupiable | {info.target})

    def advance(self) -> None:
        nxt = []
        for p in self.layer:
            nxt.extend(self._extend(p))
        self.layer = nxt


# -- checks -------------------------------------------------------------------------------


class _Run:
    def __init__(self, ata: AbstractTA, budget: Budget, client: SolverClient, deadline: float):
        self.ata = ata
        self.budget = budget
        self.client = client
        self.deadline = deadline
        self.stats = Statistics()

    def search(self, graph: ErrorGraph, mode: Mode, target_ok: Callable[[_Partial], bool]) -> Verdict:
        ata, stats, budget = self.ata, self.stats, self.budget
        if not graph.roots:
            return SafeProven()
        en = PathEnumerator(graph, ata.ta, budget.unfold, stats)
        while en.layer:
            if time.monotonic() > self.deadline:
                return BudgetExhausted("wall-clock limit reached")
            layer = en.layer
            if len(layer[0].rules) > 0:
                stats.prefixes_checked += len(layer)
                if stats.prefixes_checked > budget.prefix_limit:
                    return BudgetExhausted(f"more than {budget.prefix_limit} partial paths")
                queries = [build_concretize(p.path(), ata, Mode.PLAIN) for p in layer]
                results = discharge_many(queries, ata, self.client)
                layer = [p for p, r in zip(layer, results) if isinstance(r, Concrete)]
            done = [p for p in layer if p.nodes[-1] in graph.sinks and target_ok(p)]
            if done:
                room = budget.max_paths - stats.paths_enumerated
                if room <= 0:
                    return BudgetExhausted(f"more than {budget.max_paths} error paths")
                batch = done[:room]
                stats.paths_enumerated += len(batch)
                queries = [build_concretize(p.path(), ata, mode) for p in batch]
                for q, r in zip(queries, discharge_many(queries, ata, self.client)):
                    if isinstance(r, Concrete):
                        return Witness(r.witness, q.path, dict(r.model))
                    stats.spurious += 1
                if len(done) > room:
                    return BudgetExhausted(f"more than {budget.max_paths} error paths")
            en.layer = layer
            en.advance()
        if stats.truncated:
            return BudgetExhausted("; ".join(stats.truncated))
        return SafeProven()


def _positive_ok(locs: Sequence[int]) -> Callable[[_Partial], bool]:
    return lambda p: all(l in p.occupiable for l in locs)


def check_general_coverability(ata: AbstractTA, basis: Sequence[Sequence[int]], budget: Budget | None = None,
                               client: SolverClient | None = None, deadline: float | None = None
                               ) -> tuple[Verdict, Statistics]:
    budget = budget or Budget()
    client = client or SolverClient()
    deadline = deadline if deadline is not None else time.monotonic() + budget.wall_clock
    run = _Run(ata, budget, client, deadline)
    n_iv = len(ata.domain)
    err = [AbstractConfiguration(tuple(vec), ivs)
           for vec in basis for ivs in product(range(n_iv), repeat=ata.n_shared)]
    graph = backward_fixed_point(err, lambda e: cpred_basis(e, ata), True,
                                 lambda c: acs_initial(c, ata), run.stats, deadline)
    if graph is None:
        return BudgetExhausted("wall-clock limit reached during fixed point"), _finish(run)

    def covered(p: _Partial) -> bool:
        return all(l in p.occupiable for l, k in enumerate(p.nodes[-1].counters) if k)
    return run.search(graph, Mode.COVER, covered), _finish(run)


def check_coverability_zcs(ata: AbstractTA, positive: Iterable[int], budget: Budget | None = None,
                           client: SolverClient | None = None, deadline: float | None = None
                           ) -> tuple[Verdict, Statistics]:
    budget = budget or Budget()
    client = client or SolverClient()
    deadline = deadline if deadline is not None else time.monotonic() + budget.wall_clock
    run = _Run(ata, budget, client, deadline)
    pos = sorted(set(positive))
    occ = tuple(1 if l in pos else 0 for l in range(ata.n_locations))
    err = [ZConfiguration(occ, ivs) for ivs in product(range(len(ata.domain)), repeat=ata.n_shared)]
    graph = backward_fixed_point(err, lambda e: zcs_cover_pred_basis(e, ata), True,
                                 lambda c: zcs_initial(c, ata), run.stats, deadline)
    if graph is None:
        return BudgetExhausted("wall-clock limit reached during fixed point"), _finish(run)
    return run.search(graph, Mode.COVER, _positive_ok(pos)), _finish(run)


def check_reachability(ata: AbstractTA, spec: Reachability, budget: Budget | None = None,
                       client: SolverClient | None = None, deadline: float | None = None
                       ) -> tuple[Verdict, Statistics]:
    budget = budget or Budget()
    client = client or SolverClient()
    deadline = deadline if deadline is not None else time.monotonic() + budget.wall_clock
    run = _Run(ata, budget, client, deadline)
    free = [l for l in range(ata.n_locations) if l not in spec.zero and l not in spec.positive]
    err = []
    for bits in product((0, 1), repeat=len(free)):
        occ = [1 if l in spec.positive else 0 for l in range(ata.n_locations)]
        for l, b in zip(free, bits):
            occ[l] = b
        for ivs in product(range(len(ata.domain)), repeat=ata.n_shared):
            err.append(ZConfiguration(tuple(occ), ivs))
    graph = backward_fixed_point(err, lambda e: zcs_pred(e, ata), False,
                                 lambda c: zcs_initial(c, ata), run.stats, deadline)
    if graph is None:
        return BudgetExhausted("wall-clock limit reached during fixed point"), _finish(run)
    return run.search(graph, Mode.REACH, _positive_ok(sorted(spec.positive))), _finish(run)


def _finish(run: _Run) -> Statistics:
    run.stats.solver_calls = run.client.calls
    run.stats.cache_hits = run.client.cache_hits
    return run.stats


# -- per-order driver ----------------------------------------------------------------------


def aggregate(verdicts: Sequence[Verdict]) -> Verdict:
    for v in verdicts:
        if isinstance(v, Witness):
            return v
    exhausted = [v for v in verdicts if isinstance(v, BudgetExhausted)]
    if exhausted:
        return BudgetExhausted("; ".join(sorted({v.reason for v in exhausted})))
    return SafeProven()


def check(ta: ThresholdAutomaton, spec: Specification, budget: Budget | None = None,
          client: SolverClient | None = None, order_index: int | None = None,
          atas: Sequence[AbstractTA] | None = None) -> CheckResult:
    """Run the check matching ``spec`` once per threshold order and combine the verdicts."""
    budget = budget or Budget()
    client = client or SolverClient()
    deadline = time.monotonic() + budget.wall_clock
    atas = list(atas) if atas is not None else abstractions(ta, client)
    indices = range(len(atas)) if order_index is None else [order_index]
    results = []
    for i in indices:
        ata = atas[i]
        calls0, hits0 = client.calls, client.cache_hits
        if isinstance(spec, Reachability):
            verdict, stats = check_reachability(ata, spec, budget, client, deadline)
        elif isinstance(spec, Coverability):
            verdict, stats = check_coverability_zcs(ata, spec.positive, budget, client, deadline)
        else:
            verdict, stats = check_general_coverability(
                ata, coverability_basis(spec, len(ta.locations)), budget, client, deadline)
        stats.solver_calls = client.calls - calls0
        stats.cache_hits = client.cache_hits - hits0
        results.append(OrderResult(i, ata.order.render(), verdict, stats, ata))
        log.info("order %d (%s): %s", i, ata.order, verdict.name)
        if isinstance(verdict, Witness):
            break
    return CheckResult(aggregate([r.verdict for r in results]), results)


def enumerate_error_paths(graph: ErrorGraph, ta: ThresholdAutomaton, unfold: int) -> Iterator[AbstractPath]:
    """All root-to-sink paths of ``graph`` in nondecreasing length (no solver pruning)."""
    stats = Statistics()
    en = PathEnumerator(graph, ta, unfold, stats)
    while en.layer:
        for p in en.layer:
            if p.nodes[-1] in graph.sinks:
                yield p.path()
        en.advance()

