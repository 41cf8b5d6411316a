import pytest

from etacheck.model import LinearTerm
from etacheck.smt import (
    Affine,
    Script,
    SolverClient,
    SolverFailure,
    compare,
    parse_output,
    solver_session,
)

SAT = "(set-logic QF_LIA)\n(declare-const a Int)\n(assert (= a 1))\n(check-sat)\n(get-model)\n"
UNSAT = "(set-logic QF_LIA)\n(assert (= 1 2))\n(check-sat)\n"


def test_affine_comparisons_clear_denominators():
    half_n = Affine.of_term(LinearTerm.of(0, n="1/2"))
    atom = compare("<=", half_n, Affine.var("x"))
    assert "/" not in atom
    assert compare("<", Affine(const=1), Affine(const=2)) == "true"
    assert compare("==", Affine(const=1), Affine(const=2)) == "false"


def test_script_declares_each_symbol_once():
    s = Script()
    s.add("(>= x 0)", "x")
    s.add("(>= x y)", "x", "y")
    text = s.render()
    assert text.count("(declare-const x Int)") == 1 and "(declare-const y Int)" in text


def test_one_shot_sessions():
    res = solver_session(SAT)
    assert res.sat and res.model == {"a": 1}
    assert solver_session(UNSAT).status == "unsat"


def test_negative_model_values():
    text = "sat\n(\n  (define-fun a () Int\n    (- 3))\n  (define-fun b () Int 4)\n)\n"
    assert parse_output(text).model == {"a": -3, "b": 4}
    with pytest.raises(SolverFailure):
        parse_output("(error \"boom\")")
    with pytest.raises(SolverFailure):
        parse_output("")


def test_client_caches_and_batches(tmp_path):
    client = SolverClient(dump_dir=tmp_path, batch_size=3)
    scripts = [SAT.replace("1)", f"{i})") for i in range(7)] + [UNSAT]
    results = client.check_many(scripts)
    assert [r.model.get("a") for r in results[:7]] == list(range(7))
    assert results[7].status == "unsat"
    assert client.calls == 8 and client.cache_hits == 0
    client.check(SAT)
    assert client.calls == 8 and client.cache_hits == 1
    assert len(list(tmp_path.glob("*.smt2"))) == 8


def test_parallel_batches_match_sequential():
    scripts = [SAT.replace("1)", f"{i})") for i in range(20)]
    seq = SolverClient(batch_size=4).check_many(scripts)
    par = SolverClient(batch_size=4, jobs=3).check_many(scripts)
    assert [r.model for r in seq] == [r.model for r in par]


def test_missing_solver_is_a_failure():
    with pytest.raises(SolverFailure):
        SolverClient("/nonexistent/z3 -in").check(SAT)


def test_solver_timeout_is_a_failure():
    with pytest.raises(SolverFailure):
        SolverClient("sleep 5", timeout=0.2).check(SAT)


def test_environment_selects_solver(monkeypatch):
    monkeypatch.setenv("ETACHECK_SOLVER", "/nonexistent/other")
    assert SolverClient().command == ["/nonexistent/other"]
