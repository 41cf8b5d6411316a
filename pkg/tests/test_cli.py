import json

import jsonschema
import pytest

from etacheck.cli import main, report_schema
from etacheck.oracle import validate_witness
from etacheck.concretize import WitnessPath
from etacheck.model import ConcreteConfiguration


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--json")
    report = json.loads(out)
    jsonschema.validate(report, report_schema())
    assert report["exit_code"] == code
    return code, report


def _witness(ta, data):
    acc = data["accelerated"]

    def conf(c):
        return ConcreteConfiguration(tuple(c["counters"][l] for l in ta.locations),
                                     tuple(c["shared"][v] for v in ta.shared), ta.param_vector(acc["params"]))
    return WitnessPath(acc["params"], conf(acc["initial"]), tuple((s["rule"], s["count"]) for s in acc["steps"]),
                       conf(acc["final"]))


def test_cover_locs_witness(capsys, bench, voting):
    code, report = run_json(capsys, "cover-locs", "d0", str(bench / "voting.ta"))
    assert code == 1 and report["verdict"] == "Witness"
    w = report["witness"]
    assert voting.admissible(w["accelerated"]["params"])
    assert validate_witness(voting, _witness(voting, w))
    path = w["concrete_path"]
    assert path[0]["rule"] is None and path[-1]["counters"]["d0"] >= 1
    assert set(w["model"]) >= {"p_n", "p_t", "p_f", "c_0"}


def test_witness_in_the_order_of_the_small_example(capsys, bench):
    code, report = run_json(capsys, "cover-locs", "d0", str(bench / "voting.ta"), "--order-index", "2")
    assert code == 1
    params = report["witness"]["accelerated"]["params"]
    assert params["t"] == 1 and params["n"] > 3 and params["f"] <= 1


def test_reach_agreement_is_safe(capsys, bench):
    code, report = run_json(capsys, "reach", "d0>0 && d1>0; others=0", str(bench / "voting.ta"))
    assert code == 0 and report["witness"] is None
    assert len(report["orders"]) == 4 and all(o["verdict"] == "SafeProven" for o in report["orders"])
    stats = report["statistics"]
    assert stats["solver_calls"] > 0 and len(stats["frontier_sizes"]) == 4


def test_oracle_mode(capsys, bench):
    code, report = run_json(capsys, "oracle", "--params", "n=4,t=1,f=0", "cover-locs", "d0", str(bench / "voting.ta"))
    assert code == 1 and report["verdict"] == "Violated"
    assert [s["rule"] for s in report["witness"]["concrete_path"]] == [None, "r0", "r0", "r0", "r2"]
    code, report = run_json(capsys, "oracle", "--params", "n=4,t=1,f=0", "cover", "d0>=1, d1>=1",
                            str(bench / "voting.ta"))
    assert code == 0 and report["verdict"] == "Holds"
    code, _ = run_json(capsys, "oracle", "--params", "n=4,t=1,f=0", "--depth", "1", "cover-locs", "d0",
                       str(bench / "voting.ta"))
    assert code == 2


def test_budget_exhaustion_exit_code(capsys, bench):
    code, report = run_json(capsys, "cover-locs", "a", "d", str(bench / "two_round_reset.ta"), "--wall-clock", "0")
    assert code == 2 and report["verdict"] == "BudgetExhausted"


def test_abstract_dump(capsys, bench):
    code, report = run_json(capsys, "abstract-dump", str(bench / "voting_many_faults.ta"))
    assert code == 0
    (order,) = report["orders"]
    assert order["domain"] == "{[0, 1), [1, t), [t, n - t), [n - t, inf)}"
    assert {r["id"]: r["guard"] for r in order["rules"]}["r2"] == "x0 = I3"
    code, out, _ = run(capsys, "abstract-dump", str(bench / "voting.ta"))
    assert code == 0 and out.count("order ") == 4


def test_simulate_is_reproducible(capsys, bench):
    args = ("simulate", "--params", "n=4,t=1,f=0", "--steps", "6", "--seed", "5", str(bench / "voting.ta"))
    _, a = run_json(capsys, *args)
    _, b = run_json(capsys, *args)
    assert a["run"] == b["run"] and len(a["run"]) <= 7


def test_human_output_renders_the_report(capsys, bench):
    code, out, _ = run(capsys, "cover-locs", "d0", str(bench / "voting.ta"))
    assert code == 1
    assert "Witness" in out and "concrete path:" in out and "accelerated steps:" in out


@pytest.mark.parametrize("argv", [
    [],
    ["frobnicate", "x.ta"],
    ["cover-locs", "d0"],
    ["cover-locs", "d0", "/nonexistent.ta"],
    ["cover-locs", "nowhere", "BENCH/voting.ta"],
    ["cover-locs", "d0", "BENCH/voting.ta", "--order-index", "9"],
    ["oracle", "--params", "n=3,t=1,f=0", "cover-locs", "d0", "BENCH/voting.ta"],
    ["oracle", "--params", "n=4", "cover-locs", "d0", "BENCH/voting.ta"],
    ["cover", "d0>=1", "BENCH/voting.ta", "--max-paths", "many"],
])
def test_usage_errors_exit_3(capsys, bench, argv):
    argv = [a.replace("BENCH", str(bench)) for a in argv]
    try:
        code = main(argv)
    except SystemExit as exc:  # argparse rejects the command line itself
        code = exc.code
    assert code == 3
    assert capsys.readouterr().err


def test_unsatisfiable_resilience_exit_3(capsys, tmp_path):
    f = tmp_path / "bad.ta"
    f.write_text("ta T\nparams n\nresilience n < 0\nsize n\nshared x\nlocations a* b\n"
                 "rule r: a -> b when x >= n\n")
    code, _, err = run(capsys, "abstract-dump", str(f))
    assert code == 3 and "NoAdmissibleParameters" in err


def test_solver_failure_exit_4(capsys, bench):
    code, _, err = run(capsys, "cover-locs", "d0", str(bench / "voting.ta"), "--solver", "/nonexistent/z3")
    assert code == 4 and "solver" in err


def test_dump_scripts(capsys, bench, tmp_path):
    run(capsys, "cover-locs", "d0", str(bench / "voting.ta"), "--dump-scripts", str(tmp_path))
    files = list(tmp_path.glob("*.smt2"))
    assert files and all("(check-sat)" in f.read_text() for f in files)
