"""Random small threshold automata for property-based testing and benchmarks."""
from __future__ import annotations

import random

from .model import (
    AtomKind,
    Comparison,
    Conjunction,
    Guard,
    GuardAtom,
    LinearTerm,
    Rule,
    ThresholdAutomaton,
)

_THRESHOLDS = [
    LinearTerm.const(1),
    LinearTerm.const(2),
    LinearTerm.param("t"),
    LinearTerm.of(1, t=1),
    LinearTerm.of(0, n=1, t=-1),
    LinearTerm.of(1, t=2),
]

_RC = Conjunction((
    Comparison(LinearTerm.param("n"), ">", LinearTerm.param("t").scale(3)),
    Comparison(LinearTerm.param("t"), ">=", LinearTerm.param("f")),
))


def random_ta(rng: random.Random, max_locations: int = 4, max_shared: int = 2, max_rules: int = 5,
              monotone: bool = False, resets: bool = True, upper: bool = True,
              name: str = "Random") -> ThresholdAutomaton:
    """A structurally valid automaton over parameters n, t, f with RC n > 3t, t >= f."""
    n_loc = rng.randint(2, max_locations)
    n_sh = rng.randint(1, max_shared)
    locations = tuple(f"l{i}" for i in range(n_loc))
    shared = tuple(f"x{j}" for j in range(n_sh))
    initial = frozenset(rng.sample(range(n_loc), rng.randint(1, max(1, n_loc // 2))))
    rules = []
    for r in range(rng.randint(1, max_rules)):
        src = rng.randrange(n_loc)
        dst = rng.randrange(n_loc)
        atoms = []
        for _ in range(rng.choice((0, 0, 1, 1, 2))):
            kind = AtomKind.UPPER if upper and rng.random() < 0.3 else AtomKind.LOWER
            atoms.append(GuardAtom(kind, rng.choice(_THRESHOLDS), rng.randrange(n_sh)))
        choices = (0, 1) if monotone else (-1, 0, 1)
        update = tuple(rng.choice(choices) for _ in range(n_sh))
        reset: frozenset[int] = frozenset()
        if resets and not monotone and rng.random() < 0.25:
            reset = frozenset({rng.randrange(n_sh)})
        rules.append(Rule(f"r{r}", src, dst, Guard(tuple(dict.fromkeys(atoms))), update, reset))
    return ThresholdAutomaton(
        name=name, locations=locations, initial=initial, shared=shared,
        parameters=("n", "t", "f"), resilience=_RC, size=LinearTerm.of(0, n=1, f=-1),
        rules=tuple(rules),
    )
