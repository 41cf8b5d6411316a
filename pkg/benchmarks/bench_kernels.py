"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_kernels.py [--n 40] [--repeat 3]

Times a full breadth-first exploration of the voting automaton and a batch of
domination queries with each implementation, after checking they agree.
"""
from __future__ import annotations

import argparse
import random
import time
from pathlib import Path

from etacheck import _fallback
from etacheck.kernels import rule_table
from etacheck.syntax import load_ta

try:
    from etacheck import _speedups
except ImportError:
    _speedups = None

HERE = Path(__file__).parent


def bfs(impl, ta, params) -> int:
    table = rule_table(ta, params)
    n_loc = len(ta.locations)
    size = ta.system_size(params)
    seen = set()
    frontier = []
    for k in range(int(size) + 1):
        s = (k, int(size) - k) + (0,) * (n_loc - 2) + (0,) * len(ta.shared)
        seen.add(s)
        frontier.append(s)
    while frontier:
        nxt = []
        for s in frontier:
            for _, succ in impl.concrete_successors(s, table, n_loc):
                if succ not in seen:
                    seen.add(succ)
                    nxt.append(succ)
        frontier = nxt
    return len(seen)


def domination(impl, vectors, queries) -> int:
    hits = 0
    for q in queries:
        hits += impl.find_leq(q, vectors) >= 0
        hits += len(impl.find_geq_all(q, vectors))
    return hits


def timed(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=40, help="voting system size parameter n")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    ta = load_ta(HERE / "voting.ta")
    params = {"n": args.n, "t": (args.n - 1) // 3, "f": 0}
    rng = random.Random(0)
    vectors = [tuple(rng.randint(0, 6) for _ in range(8)) for _ in range(2000)]
    queries = [tuple(rng.randint(0, 6) for _ in range(8)) for _ in range(300)]

    impls = [("fallback", _fallback)] + ([("compiled", _speedups)] if _speedups else [])
    rows = []
    for name, impl in impls:
        t_bfs, states = timed(lambda: bfs(impl, ta, params), args.repeat)
        t_dom, hits = timed(lambda: domination(impl, vectors, queries), args.repeat)
        rows.append((name, t_bfs, states, t_dom, hits))
    if len({(r[2], r[4]) for r in rows}) != 1:
        raise SystemExit("implementations disagree")
    print(f"voting n={params['n']}: {rows[0][2]} states; domination: {len(queries)} queries x {len(vectors)}")
    print(f"{'kernel':<10}{'bfs [s]':>10}{'dominate [s]':>14}")
    for name, t_bfs, _, t_dom, _ in rows:
        print(f"{name:<10}{t_bfs:>10.3f}{t_dom:>14.3f}")
    if len(rows) == 2:
        print(f"speedup   {rows[0][1] / rows[1][1]:>10.1f}x{rows[0][3] / rows[1][3]:>13.1f}x")
    else:
        print("compiled kernels not built; only the fallback was timed")


if __name__ == "__main__":
    main()
