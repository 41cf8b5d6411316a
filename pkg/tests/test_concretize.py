import re

import pytest

from etacheck.abstraction import abstractions
from etacheck.concretize import (
    AbstractPath,
    Concrete,
    Mode,
    Spurious,
    build_concretize,
    discharge,
    interpret,
)
from etacheck.oracle import validate_witness
from etacheck.semantics import AbstractConfiguration as A, ZConfiguration as Z
from etacheck.smt import SolverClient, SolverFailure, SolverResult
from etacheck.syntax import parse_ta

EXAMPLE = AbstractPath(
    (A((4, 0, 0, 0, 0), (0, 0)), A((3, 0, 1, 0, 0), (1, 0)), A((2, 0, 2, 0, 0), (2, 0)),
     A((1, 0, 3, 0, 0), (3, 0)), A((1, 0, 2, 1, 0), (3, 0))),
    ("r0", "r0", "r0", "r2"),
)

THREE_PROCESS = AbstractPath(
    (A((3, 0, 0, 0, 0), (0, 0)), A((2, 0, 1, 0, 0), (1, 0)), A((1, 0, 2, 0, 0), (2, 0)),
     A((0, 0, 3, 0, 0), (3, 0)), A((0, 0, 2, 1, 0), (3, 0))),
    ("r0", "r0", "r0", "r2"),
)


@pytest.fixture(scope="module")
def general(voting_atas):
    return voting_atas[3]


def test_example_path_is_concrete_in_cover_mode(voting, general, client):
    q = build_concretize(EXAMPLE, general, Mode.COVER)
    res = discharge(q, general, client)
    assert isinstance(res, Concrete)
    w = res.witness
    assert voting.admissible(w.params)
    assert general.order.holds(w.params)
    assert sum(c for r, c in w.steps if r == "r0") <= w.initial.counters[0]
    assert validate_witness(voting, w)
    assert all(f >= a for f, a in zip(w.final.counters, EXAMPLE.configs[-1].counters))


def test_plain_mode_is_weaker_than_cover(general, client):
    for path in (EXAMPLE, THREE_PROCESS):
        cover = discharge(build_concretize(path, general, Mode.COVER), general, client)
        plain = discharge(build_concretize(path, general, Mode.PLAIN), general, client)
        if isinstance(cover, Concrete):
            assert isinstance(plain, Concrete)


def test_interval_contradiction_is_spurious(general, client):
    # r0 adds at least one to x0, so x0 cannot stay in [0, 1)
    path = AbstractPath((A((1, 0, 0, 0, 0), (0, 0)), A((0, 0, 1, 0, 0), (0, 0))), ("r0",))
    assert isinstance(discharge(build_concretize(path, general, Mode.PLAIN), general, client), Spurious)


def test_empty_path_in_reach_mode(voting, voting_atas, client):
    ata = voting_atas[0]
    path = AbstractPath((Z((1, 0, 0, 0, 0), (0, 0)),), ())
    res = discharge(build_concretize(path, ata, Mode.REACH), ata, client)
    assert isinstance(res, Concrete)
    assert res.witness.steps == () and res.witness.initial.counters[0] >= 1
    assert validate_witness(voting, res.witness)


def test_drain_variant_forces_empty_source(voting_atas, client):
    ata = voting_atas[1]  # t = 0 < 1 < n - t: room for more than one process
    path = AbstractPath((Z((1, 0, 0, 0, 0), (0, 0)), Z((0, 0, 1, 0, 0), (1, 0))), ("r0",), ("drain",))
    res = discharge(build_concretize(path, ata, Mode.PLAIN), ata, client)
    assert isinstance(res, Concrete) and res.witness.final.counters[0] == 0
    keep = AbstractPath(path.configs, path.rules, ("keep",))
    res = discharge(build_concretize(keep, ata, Mode.PLAIN), ata, client)
    assert isinstance(res, Concrete) and res.witness.final.counters[0] >= 1


def test_scripts_are_deterministic_and_quantifier_free(general):
    a = build_concretize(EXAMPLE, general, Mode.COVER)
    b = build_concretize(EXAMPLE, general, Mode.COVER)
    assert a.script == b.script
    assert "forall" not in a.script and "exists" not in a.script
    assert "(set-logic QF_LIA)" in a.script and "(check-sat)" in a.script
    m, n_loc, n_sh, n_par = 4, 5, 2, 3
    declared = set(re.findall(r"\(declare-const (\S+) Int\)", a.script))
    core = {s for s in declared if not s.startswith("ceil_")}
    assert len(core) == (m + 1) * (n_loc + n_sh) + m + n_par
    assert {"c_0", "c_3", "k_4_3", "g_0_1", "p_n"} <= declared


def test_accelerated_steps_recheck_the_guard(general, client):
    # two r2 firings in one step: the second must still see x0 >= n - t
    path = AbstractPath((A((0, 0, 2, 0, 0), (3, 0)), A((0, 0, 1, 1, 0), (3, 0))), ("r2",))
    q = build_concretize(path, general, Mode.PLAIN)
    assert "(<= c_0 1)" in q.script


def test_solver_problems_are_not_spurious(general):
    q = build_concretize(EXAMPLE, general, Mode.COVER)
    with pytest.raises(SolverFailure):
        interpret(q, general, SolverResult("unknown", {}, "unknown"))
    with pytest.raises(SolverFailure):
        discharge(q, general, SolverClient("/nonexistent/solver"))


def test_rational_thresholds_are_integral_in_scripts(client):
    ta = parse_ta("ta T\nparams n\nresilience n >= 3\nsize n\nshared x\nlocations a* b c\n"
                  "rule r: a -> b when true update x += 1\nrule s: b -> c when x >= (n+1)/2\n")
    for ata in abstractions(ta, client):
        path = AbstractPath((A((2, 0, 0), (0,)), A((1, 1, 0), (1,))), ("r",))
        q = build_concretize(path, ata, Mode.PLAIN)
        assert "/" not in q.script
