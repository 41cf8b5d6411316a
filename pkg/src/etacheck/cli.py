"""``eta-check`` command line.

Every mode first builds a JSON-serialisable report; the human output is a
rendering of that report, so ``--json`` and plain output never disagree.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from importlib import resources
from typing import Sequence

from .abstraction import NoAdmissibleParameters, UnsupportedUpdate, abstractions, collect_thresholds
from .engine import Budget, BudgetExhausted, CheckResult, SafeProven, Witness, check
from .model import ConcreteConfiguration, ThresholdAutomaton, concrete_step, validate
from .oracle import Holds, InadmissibleParameters, Violated, oracle_check, parse_params, simulate
from .syntax import FormatError, load_ta, parse_spec
from .smt import SolverClient, SolverFailure

EXIT = {
    SafeProven.name: 0, "Holds": 0,
    Witness.name: 1, "Violated": 1,
    BudgetExhausted.name: 2, "Inconclusive": 2,
}
USAGE_ERROR = 3
SOLVER_ERROR = 4

PROPERTY_MODES = ("cover", "cover-locs", "reach")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with 2, which means "inconclusive" here
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--json", action="store_true", help="print the report as JSON")
    parser.add_argument("--solver", default=None, help="solver command (default: $ETACHECK_SOLVER or 'z3 -in')")
    parser.add_argument("--timeout", type=float, default=30.0, help="per-query solver timeout in seconds")
    parser.add_argument("--dump-scripts", metavar="DIR", default=None, help="write every solver query to DIR")
    parser.add_argument("-v", "--verbose", action="store_true")


def _budget(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--max-paths", type=int, default=10_000)
    parser.add_argument("--unfold", type=int, default=3, help="how often a path may revisit a node")
    parser.add_argument("--wall-clock", type=float, default=300.0, help="seconds for the whole check")
    parser.add_argument("--jobs", type=int, default=1, help="concurrent solver processes")
    parser.add_argument("--order-index", type=int, default=None, help="only check this threshold order")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="eta-check", description="Parameterized safety checking of threshold automata.")
    sub = parser.add_subparsers(dest="mode", required=True, parser_class=_Parser)

    p = sub.add_parser("cover", help="general coverability: can every listed lower bound hold at once?")
    p.add_argument("property", help='e.g. "d0>=1, d1>=1" (alternatives separated by ||)')
    p.add_argument("file")
    p = sub.add_parser("cover-locs", help="can all listed locations be occupied at once?")
    p.add_argument("items", nargs="+", metavar="LOC ... FILE")
    p = sub.add_parser("reach", help="can the listed locations be occupied while others are empty?")
    p.add_argument("property", help='e.g. "d0>0 && d1>0; others=0"')
    p.add_argument("file")
    for name in PROPERTY_MODES:
        _common(sub.choices[name])
        _budget(sub.choices[name])

    p = sub.add_parser("oracle", help="explicit-state check for fixed parameters")
    p.add_argument("kind", choices=PROPERTY_MODES)
    p.add_argument("items", nargs="+", metavar="PROPERTY ... FILE")
    p.add_argument("--params", required=True, help="k=v,... for every parameter")
    p.add_argument("--depth", type=int, default=None, help="BFS depth limit")
    p.add_argument("--max-states", type=int, default=1_000_000)
    _common(p)

    p = sub.add_parser("simulate", help="print one random run for fixed parameters")
    p.add_argument("file")
    p.add_argument("--params", required=True)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    _common(p)

    p = sub.add_parser("abstract-dump", help="show threshold orders, interval domains and abstract rules")
    p.add_argument("file")
    _common(p)
    return parser


# -- reports -------------------------------------------------------------------------------


def _conf_json(ta: ThresholdAutomaton, c: ConcreteConfiguration) -> dict:
    return {"counters": dict(zip(ta.locations, c.counters)), "shared": dict(zip(ta.shared, c.shared))}


def _expanded_path(ta: ThresholdAutomaton, initial: ConcreteConfiguration, rules: Sequence[str]) -> list[dict]:
    out = [{"rule": None, **_conf_json(ta, initial)}]
    cfg = initial
    for rid in rules:
        nxt = concrete_step(ta, cfg, ta.rule(rid))
        if nxt is None:  # cannot happen for validated witnesses; keep the report honest anyway
            out.append({"rule": rid, "error": "rule not enabled"})
            break
        cfg = nxt
        out.append({"rule": rid, **_conf_json(ta, cfg)})
    return out


def _stats_total(result: CheckResult) -> dict:
    keys = ("iterations", "nodes", "edges", "paths_enumerated", "prefixes_checked",
            "spurious", "solver_calls", "cache_hits")
    total = {k: sum(getattr(o.stats, k) for o in result.orders) for k in keys}
    total["frontier_sizes"] = [list(o.stats.frontier_sizes) for o in result.orders]
    return total


def check_report(ta: ThresholdAutomaton, mode: str, prop: str, result: CheckResult) -> dict:
    orders = []
    for o in result.orders:
        entry = {"index": o.index, "order": o.order, "verdict": o.verdict.name,
                 "domain": o.ata.domain.render(), "statistics": o.stats.to_json()}
        if isinstance(o.verdict, BudgetExhausted):
            entry["reason"] = o.verdict.reason
        orders.append(entry)
    witness = None
    wo = result.witness_order
    if wo is not None:
        v = wo.verdict
        w = v.witness
        witness = {
            "order_index": wo.index,
            "order": wo.order,
            "abstract_path": {"configurations": [c.render(wo.ata) for c in v.path.configs],
                              "rules": list(v.path.rules)},
            "accelerated": w.to_json(ta),
            "concrete_path": _expanded_path(ta, w.initial, w.expanded_rules()),
            "model": {k: v.model[k] for k in sorted(v.model)},
        }
    verdict = result.verdict.name
    return {"mode": mode, "automaton": ta.name, "property": prop, "verdict": verdict,
            "exit_code": EXIT[verdict], "orders": orders, "witness": witness,
            "statistics": _stats_total(result)}


def oracle_report(ta: ThresholdAutomaton, kind: str, prop: str, params: dict, outcome) -> dict:
    report = {"mode": "oracle", "automaton": ta.name, "property": f"{kind} {prop}",
              "params": params, "verdict": type(outcome).__name__, "witness": None}
    if isinstance(outcome, Violated):
        report["witness"] = {"concrete_path": _expanded_path(ta, outcome.configs[0], outcome.rules)}
    if isinstance(outcome, Holds):
        report["statistics"] = {"states": outcome.states}
    elif not isinstance(outcome, Violated):
        report["statistics"] = {"states": outcome.states, "depth": outcome.depth}
    report["exit_code"] = EXIT[report["verdict"]]
    return report


def dump_report(ta: ThresholdAutomaton, client: SolverClient) -> dict:
    thresholds = [t.render(ta.parameters) for t in collect_thresholds(ta)]
    orders = []
    for i, ata in enumerate(abstractions(ta, client)):
        rules = [{"id": ar.id, "source": ta.locations[ar.source], "target": ta.locations[ar.target],
                  "guard": ata.render_guard(ar)} for ar in ata.rules]
        orders.append({"index": i, "order": ata.order.render(), "domain": ata.domain.render(), "rules": rules})
    return {"mode": "abstract-dump", "automaton": ta.name, "thresholds": thresholds,
            "orders": orders, "exit_code": 0}


def report_schema() -> dict:
    """The JSON schema every report conforms to."""
    return json.loads(resources.files("etacheck").joinpath("report_schema.json").read_text())


# -- human rendering ------------------------------------------------------------------------


def _render_conf(c: dict) -> str:
    occ = " ".join(f"{k}={v}" for k, v in c["counters"].items() if v)
    sh = " ".join(f"{k}={v}" for k, v in c["shared"].items())
    return f"{occ or '-'} | {sh}"


def render_human(report: dict) -> str:
    lines = []
    mode = report["mode"]
    if mode == "abstract-dump":
        lines.append(f"automaton {report['automaton']}")
        lines.append("thresholds: " + ", ".join(report["thresholds"]))
        for o in report["orders"]:
            lines.append(f"order {o['index']}: {o['order']}")
            lines.append(f"  domain {o['domain']}")
            for r in o["rules"]:
                lines.append(f"  {r['id']}: {r['source']} -> {r['target']} when {r['guard']}")
        return "\n".join(lines)
    if mode == "simulate":
        lines.append(f"run of {report['automaton']} with {report['params']}")
        for step in report["run"]:
            lines.append(f"  {step['rule'] or 'init':>8}  {_render_conf(step)}")
        return "\n".join(lines)
    lines.append(f"{report['automaton']}: {report['property']} -> {report['verdict']}")
    for o in report.get("orders", []):
        extra = f" ({o['reason']})" if "reason" in o else ""
        lines.append(f"  order {o['index']} [{o['order']}]: {o['verdict']}{extra}")
    w = report.get("witness")
    if w:
        if "abstract_path" in w:
            ap = w["abstract_path"]
            lines.append(f"abstract path (order {w['order_index']}):")
            lines.append("  " + ap["configurations"][0])
            for r, c in zip(ap["rules"], ap["configurations"][1:]):
                lines.append(f"  --{r}--> {c}")
            acc = w["accelerated"]
            lines.append("parameters: " + ", ".join(f"{k}={v}" for k, v in acc["params"].items()))
            lines.append("accelerated steps: " + ", ".join(f"{s['rule']}x{s['count']}" for s in acc["steps"]))
        lines.append("concrete path:")
        for step in w["concrete_path"]:
            lines.append(f"  {step['rule'] or 'init':>8}  {_render_conf(step) if 'counters' in step else step['error']}")
    if "timing" in report:
        lines.append(f"time: {report['timing']['seconds']:.2f}s")
    return "\n".join(lines)


# -- entry point ----------------------------------------------------------------------------


def _split_items(items: Sequence[str], what: str) -> tuple[str, str]:
    if len(items) < 2:
        raise UsageError(f"expected {what} followed by the automaton file")
    return " ".join(items[:-1]), items[-1]


def _client(args) -> SolverClient:
    return SolverClient(args.solver, timeout=args.timeout, dump_dir=args.dump_scripts,
                        jobs=getattr(args, "jobs", 1))


def _load(path: str) -> ThresholdAutomaton:
    ta = load_ta(path)
    report = validate(ta)
    if not report.ok:
        raise UsageError(f"{path}: invalid automaton: {', '.join(sorted(report.categories))}")
    return ta


def run(args: argparse.Namespace) -> dict:
    start = time.monotonic()
    mode = args.mode
    if mode in PROPERTY_MODES:
        if mode == "cover-locs":
            prop, path = _split_items(args.items, "locations")
        else:
            prop, path = args.property, args.file
        ta = _load(path)
        spec = parse_spec(f"{mode} {prop}", ta)
        budget = Budget(max_paths=args.max_paths, unfold=args.unfold, wall_clock=args.wall_clock)
        client = _client(args)
        atas = abstractions(ta, client)
        if args.order_index is not None and not 0 <= args.order_index < len(atas):
            raise UsageError(f"--order-index must be below {len(atas)}")
        result = check(ta, spec, budget, client, args.order_index, atas)
        report = check_report(ta, mode, prop, result)
    elif mode == "oracle":
        prop, path = _split_items(args.items, "a property")
        ta = _load(path)
        spec = parse_spec(f"{args.kind} {prop}", ta)
        params = parse_params(args.params, ta)
        outcome = oracle_check(ta, params, spec, args.depth, args.max_states)
        report = oracle_report(ta, args.kind, prop, params, outcome)
    elif mode == "simulate":
        ta = _load(args.file)
        params = parse_params(args.params, ta)
        configs, rules = simulate(ta, params, args.steps, args.seed)
        run_steps = [{"rule": r, **_conf_json(ta, c)} for r, c in zip([None, *rules], configs)]
        report = {"mode": "simulate", "automaton": ta.name, "params": params, "seed": args.seed,
                  "run": run_steps, "exit_code": 0}
    else:
        ta = _load(args.file)
        report = dump_report(ta, _client(args))
    report["timing"] = {"seconds": round(time.monotonic() - start, 3)}
    return report


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        report = run(args)
    except SolverFailure as exc:
        print(f"eta-check: solver failure: {exc}", file=sys.stderr)
        return SOLVER_ERROR
    except (UsageError, FormatError, NoAdmissibleParameters, UnsupportedUpdate,
            InadmissibleParameters, ValueError, OSError) as exc:
        print(f"eta-check: {type(exc).__name__}: {exc}", file=sys.stderr)
        return USAGE_ERROR
    print(json.dumps(report, indent=2) if args.json else render_human(report))
    return report["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
