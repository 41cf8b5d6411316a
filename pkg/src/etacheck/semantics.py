"""Abstract counter systems over interval-valued shared variables.

Two flavours share the interval machinery:

* ACS: exact process counters per location, intervals per shared variable.
* ZCS: one occupancy bit per location instead of a counter.

Predecessor functions return both configurations and the witnessing edges,
because the backward engine builds its error graph from the edges.
"""
from __future__ import annotations

from itertools import product
from typing import Iterable, NamedTuple, Sequence

from .abstraction import AbstractRule, AbstractTA

KEEP = "keep"
DRAIN = "drain"


class AbstractConfiguration(NamedTuple):
    counters: tuple[int, ...]
    intervals: tuple[int, ...]

    def render(self, ata: AbstractTA | None = None) -> str:
        ivs = ",".join(f"I{i}" for i in self.intervals)
        return f"[({','.join(map(str, self.counters))})({ivs})]"


class ZConfiguration(NamedTuple):
    occupancy: tuple[int, ...]
    intervals: tuple[int, ...]

    def render(self, ata: AbstractTA | None = None) -> str:
        if ata is not None:
            occ = ",".join(ata.ta.locations[i] for i, b in enumerate(self.occupancy) if b)
        else:
            occ = "".join(map(str, self.occupancy))
        ivs = ",".join(f"I{i}" for i in self.intervals)
        return f"[{{{occ}}}({ivs})]"


Config = AbstractConfiguration | ZConfiguration


class BasisTransition(NamedTuple):
    """Edge ``source --rule--> target``.

    ``lifted`` marks an ACS edge whose real successor has one more process at
    the rule's target than ``target`` (the basis element had none there).
    ``variant`` is the ZCS occupancy constraint on the rule's source location
    after the step: ``keep``, ``drain`` or None for either.
    """

    source: Config
    rule: str
    target: Config
    lifted: bool = False
    variant: str | None = None


# -- intervals --------------------------------------------------------------------


def interval_step(i: int, delta: int, last: int) -> tuple[int, ...]:
    """Intervals a value in ``I_i`` can land in after adding ``delta``."""
    if delta == 0:
        return (i,)
    if delta == 1:
        if i == 0:
            return (1,) if last >= 1 else (0,)
        return (i,) if i == last else (i, i + 1)
    if delta == -1:
        return (0,) if i == 0 else (i - 1, i)
    raise ValueError(f"interval step only defined for -1, 0, +1 (got {delta})")


def _next_intervals(ata: AbstractTA, arule: AbstractRule, intervals: Sequence[int]) -> list[tuple[int, ...]]:
    last = ata.domain.last
    options = []
    for v, (iv, delta) in enumerate(zip(intervals, arule.update)):
        options.append((0,) if v in arule.resets else interval_step(iv, delta, last))
    return [tuple(c) for c in product(*options)]


def _prev_intervals(ata: AbstractTA, arule: AbstractRule, target: Sequence[int]) -> list[tuple[int, ...]]:
    """Source interval vectors that step to ``target`` and satisfy the guard."""
    last = ata.domain.last
    options = []
    for v, (iv, delta) in enumerate(zip(target, arule.update)):
        if v in arule.resets:
            srcs = range(last + 1) if iv == 0 else ()
        else:
            srcs = [s for s in range(last + 1) if iv in interval_step(s, delta, last)]
        srcs = [s for s in srcs if s in arule.allowed[v]]
        if not srcs:
            return []
        options.append(srcs)
    return [tuple(c) for c in product(*options)]


# -- ACS ----------------------------------------------------------------------------


def acs_successors(cfg: AbstractConfiguration, arule: AbstractRule,
                   ata: AbstractTA) -> tuple[AbstractConfiguration, ...]:
    if cfg.counters[arule.source] < 1 or not arule.guard_holds(cfg.intervals):
        return ()
    k = list(cfg.counters)
    k[arule.source] -= 1
    k[arule.target] += 1
    counters = tuple(k)
    return tuple(sorted({AbstractConfiguration(counters, g) for g in _next_intervals(ata, arule, cfg.intervals)}))


def acs_leq(a: AbstractConfiguration, b: AbstractConfiguration) -> bool:
    return a.intervals == b.intervals and all(x <= y for x, y in zip(a.counters, b.counters))


def acs_initial(cfg: AbstractConfiguration, ata: AbstractTA) -> bool:
    return (all(i == 0 for i in cfg.intervals)
            and all(k == 0 for loc, k in enumerate(cfg.counters) if loc not in ata.initial))


def cpred_basis(targets: Iterable[AbstractConfiguration], ata: AbstractTA
                ) -> tuple[set[AbstractConfiguration], set[BasisTransition]]:
    """Finite basis of the predecessors of the upward closure of ``targets``."""
    configs: set[AbstractConfiguration] = set()
    edges: set[BasisTransition] = set()
    for tgt in sorted(targets):
        for arule in ata.rules:
            i, j = arule.source, arule.target
            k = list(tgt.counters)
            lifted = k[j] == 0
            k[i] += 1
            if not lifted:
                k[j] -= 1
            counters = tuple(k)
            for g in _prev_intervals(ata, arule, tgt.intervals):
                src = AbstractConfiguration(counters, g)
                configs.add(src)
                edges.add(BasisTransition(src, arule.id, tgt, lifted=lifted))
    return configs, edges


# -- ZCS ----------------------------------------------------------------------------


def zcs_transitions(z: ZConfiguration, arule: AbstractRule,
                    ata: AbstractTA) -> list[tuple[str, ZConfiguration]]:
    """(variant, successor) pairs; the variant says whether the source stays occupied."""
    i, j = arule.source, arule.target
    if z.occupancy[i] != 1 or not arule.guard_holds(z.intervals):
        return []
    out = []
    for variant in (KEEP, DRAIN):
        occ = list(z.occupancy)
        if variant == DRAIN and i != j:
            occ[i] = 0
        occ[j] = 1
        for g in _next_intervals(ata, arule, z.intervals):
            out.append((variant, ZConfiguration(tuple(occ), g)))
    return out


def zcs_successors(z: ZConfiguration, arule: AbstractRule, ata: AbstractTA) -> tuple[ZConfiguration, ...]:
    return tuple(sorted({s for _, s in zcs_transitions(z, arule, ata)}))


def zcs_leq(a: ZConfiguration, b: ZConfiguration) -> bool:
    return a.intervals == b.intervals and all(x <= y for x, y in zip(a.occupancy, b.occupancy))


def zcs_initial(z: ZConfiguration, ata: AbstractTA) -> bool:
    return (all(i == 0 for i in z.intervals)
            and all(b == 0 for loc, b in enumerate(z.occupancy) if loc not in ata.initial))


def project(cfg: AbstractConfiguration) -> ZConfiguration:
    return ZConfiguration(tuple(1 if k > 0 else 0 for k in cfg.counters), cfg.intervals)


def zcs_pred(targets: Iterable[ZConfiguration], ata: AbstractTA
             ) -> tuple[set[ZConfiguration], set[BasisTransition]]:
    """Exact one-step predecessors under ``zcs_transitions``."""
    configs: set[ZConfiguration] = set()
    edges: set[BasisTransition] = set()
    for tgt in sorted(targets):
        for arule in ata.rules:
            i, j = arule.source, arule.target
            if tgt.occupancy[j] != 1:
                continue
            if i == j:
                occs, variant = [tgt.occupancy], KEEP
            else:
                variant = KEEP if tgt.occupancy[i] == 1 else DRAIN
                occs = []
                for bit in (0, 1):
                    occ = list(tgt.occupancy)
                    occ[i], occ[j] = 1, bit
                    occs.append(tuple(occ))
            for occ in occs:
                for g in _prev_intervals(ata, arule, tgt.intervals):
                    src = ZConfiguration(occ, g)
                    configs.add(src)
                    edges.add(BasisTransition(src, arule.id, tgt, variant=variant))
    return configs, edges


def zcs_cover_pred_basis(targets: Iterable[ZConfiguration], ata: AbstractTA
                         ) -> tuple[set[ZConfiguration], set[BasisTransition]]:
    """Minimal predecessors of the occupancy-upward closure of ``targets``.

    The least source has the rule's source bit set and its target bit cleared;
    if the basis element needs the source location occupied afterwards, the
    step must keep a process there.
    """
    configs: set[ZConfiguration] = set()
    edges: set[BasisTransition] = set()
    for tgt in sorted(targets):
        for arule in ata.rules:
            i, j = arule.source, arule.target
            occ = list(tgt.occupancy)
            variant = None
            if i == j:
                occ[i] = 1
            else:
                if occ[i] == 1:
                    variant = KEEP
                occ[j] = 0
                occ[i] = 1
            for g in _prev_intervals(ata, arule, tgt.intervals):
                src = ZConfiguration(tuple(occ), g)
                configs.add(src)
                edges.add(BasisTransition(src, arule.id, tgt, variant=variant))
    return configs, edges


def replay(path_configs: Sequence[Config], rules: Sequence[str], ata: AbstractTA) -> bool:
    """Is ``c0 r0 c1 ... cm`` a path of the ACS (or ZCS for ZConfigurations)?"""
    if len(path_configs) != len(rules) + 1:
        return False
    by_id = {r.id: r for r in ata.rules}
    for a, rid, b in zip(path_configs, rules, path_configs[1:]):
        arule = by_id.get(rid)
        if arule is None:
            return False
        succ = acs_successors(a, arule, ata) if isinstance(a, AbstractConfiguration) \
            else zcs_successors(a, arule, ata)
        if b not in succ:
            return False
    return True
