"""Hot loops: concrete successor generation and domination checks.

The compiled extension is used when it was built; set
``ETACHECK_PURE_PYTHON=1`` to force the pure-Python implementation.
"""
from __future__ import annotations

import math
import os
from typing import Mapping

from .model import AtomKind, ThresholdAutomaton

if os.environ.get("ETACHECK_PURE_PYTHON"):
    from . import _fallback as _impl
    COMPILED = False
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
        COMPILED = True
    except ImportError:
        from . import _fallback as _impl
        COMPILED = False

UNBOUNDED = _impl.UNBOUNDED
concrete_successors = _impl.concrete_successors
find_leq = _impl.find_leq
find_geq_all = _impl.find_geq_all


def rule_table(ta: ThresholdAutomaton, params: Mapping[str, int]) -> list[tuple]:
    """Integer guard bounds per rule for fixed parameters.

    ``d <= x`` becomes ``x >= ceil(d)`` and ``d > x`` becomes ``x <= ceil(d) - 1``.
    """
    n_sh = len(ta.shared)
    table = []
    for r in ta.rules:
        low = [0] * n_sh
        high = [UNBOUNDED] * n_sh
        for atom in r.guard:
            bound = math.ceil(atom.threshold.evaluate(params))
            j = atom.variable
            if atom.kind is AtomKind.LOWER:
                low[j] = max(low[j], bound)
            else:
                high[j] = min(high[j], bound - 1)
        reset = tuple(1 if j in r.resets else 0 for j in range(n_sh))
        table.append((r.source, r.target, tuple(low), tuple(high), tuple(r.update), reset))
    return table
