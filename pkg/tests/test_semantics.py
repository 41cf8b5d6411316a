import random

import pytest
from hypothesis import given, settings, strategies as st

from brute import acs_edges, acs_initials, acs_space, covers_target, zcs_pred_brute, zcs_space
from etacheck.abstraction import abstractions, order_for
from etacheck.oracle import admissible_params, simulate
from etacheck.random_ta import random_ta
from etacheck.semantics import (
    DRAIN,
    KEEP,
    AbstractConfiguration as A,
    ZConfiguration as Z,
    acs_initial,
    acs_leq,
    acs_successors,
    cpred_basis,
    interval_step,
    project,
    replay,
    zcs_cover_pred_basis,
    zcs_leq,
    zcs_pred,
    zcs_successors,
    zcs_transitions,
)
from etacheck.syntax import parse_ta


def rule(ata, rid):
    return next(r for r in ata.rules if r.id == rid)


@pytest.fixture(scope="module")
def general(voting_atas):
    return voting_atas[3]  # 0 < 1 < t < n - t


@pytest.mark.parametrize("i, delta, expected", [
    (0, 0, (0,)), (2, 0, (2,)),
    (0, 1, (1,)), (1, 1, (1, 2)), (3, 1, (3,)),
    (0, -1, (0,)), (2, -1, (1, 2)),
])
def test_interval_step(i, delta, expected):
    assert interval_step(i, delta, last=3) == expected


def test_interval_step_rejects_large_updates():
    with pytest.raises(ValueError):
        interval_step(1, 2, 3)


def test_acs_example_steps(general):
    r0, r2 = rule(general, "r0"), rule(general, "r2")
    assert acs_successors(A((4, 0, 0, 0, 0), (0, 0)), r0, general) == (A((3, 0, 1, 0, 0), (1, 0)),)
    assert acs_successors(A((1, 0, 3, 0, 0), (3, 0)), r2, general) == (A((1, 0, 2, 1, 0), (3, 0)),)
    assert acs_successors(A((0, 4, 0, 0, 0), (0, 0)), r0, general) == ()
    assert acs_successors(A((0, 0, 3, 0, 0), (2, 0)), r2, general) == ()  # guard needs I3


def test_example_path_replays(general):
    path = [A((4, 0, 0, 0, 0), (0, 0)), A((3, 0, 1, 0, 0), (1, 0)), A((2, 0, 2, 0, 0), (2, 0)),
            A((1, 0, 3, 0, 0), (3, 0)), A((1, 0, 2, 1, 0), (3, 0))]
    assert replay(path, ["r0", "r0", "r0", "r2"], general)
    assert not replay(path, ["r0", "r0", "r1", "r2"], general)
    assert acs_initial(path[0], general) and not acs_initial(path[1], general)


def test_acs_order_examples():
    assert acs_leq(A((1, 0), (2,)), A((1, 3), (2,)))
    assert acs_leq(A((1, 0), (2,)), A((1, 0), (2,)))
    assert not acs_leq(A((1, 0), (2,)), A((1, 3), (1,)))
    assert zcs_leq(Z((0, 1), (0,)), Z((1, 1), (0,)))
    assert not zcs_leq(Z((1, 1), (0,)), Z((0, 1), (0,)))


def test_cpred_basis_examples(general):
    target = A((0, 0, 0, 1, 0), (3, 0))
    configs, edges = cpred_basis({target}, general)
    assert A((0, 0, 1, 0, 0), (3, 0)) in configs
    via_r0 = {e.source for e in edges if e.rule == "r0"}
    assert via_r0 == {A((1, 0, 0, 1, 0), (2, 0)), A((1, 0, 0, 1, 0), (3, 0))}
    assert all(e.lifted for e in edges if e.rule == "r0")
    assert cpred_basis(set(), general) == (set(), set())


def test_cpred_basis_against_bounded_brute_force(general):
    rng = random.Random(7)
    for _ in range(10):
        target = A(tuple(rng.randint(0, 1) for _ in range(5)), tuple(rng.randrange(4) for _ in range(2)))
        configs, edges = cpred_basis({target}, general)
        for c in configs:
            assert covers_target(c, target, general)
        for c in acs_space(general, 2):
            if covers_target(c, target, general):
                assert any(acs_leq(b, c) for b in configs), c


def test_zcs_transition_examples(general):
    r0 = rule(general, "r0")
    z = Z((1, 0, 0, 0, 0), (0, 0))
    assert set(zcs_transitions(z, r0, general)) == {(KEEP, Z((1, 0, 1, 0, 0), (1, 0))),
                                                    (DRAIN, Z((0, 0, 1, 0, 0), (1, 0)))}
    assert zcs_successors(Z((0, 1, 0, 0, 0), (0, 0)), r0, general) == ()


def test_zcs_self_loop_keeps_occupancy(client):
    ta = parse_ta("ta T\nparams n\nsize n\nshared x\nlocations a* b\nrule s: a -> a when true update x += 1\n")
    (ata,) = abstractions(ta, client)
    z = Z((1, 0), (0,))
    assert {s.occupancy for s in zcs_successors(z, ata.rules[0], ata)} == {(1, 0)}


def test_zcs_pred_examples_and_exactness(general):
    target = Z((0, 0, 0, 1, 0), (3, 0))
    configs, edges = zcs_pred({target}, general)
    assert Z((0, 0, 1, 0, 0), (3, 0)) in configs
    assert any(e.rule == "r2" and e.variant == DRAIN and e.source == Z((0, 0, 1, 0, 0), (3, 0)) for e in edges)
    assert configs == zcs_pred_brute({target}, general)
    assert zcs_pred(set(), general) == (set(), set())


def test_zcs_pred_of_everything_is_everything_enabled(voting_atas):
    ata = voting_atas[1]
    everything = set(zcs_space(ata))
    configs, _ = zcs_pred(everything, ata)
    enabled = {z for z in everything if any(zcs_successors(z, r, ata) for r in ata.rules)}
    assert configs == enabled


@pytest.mark.parametrize("seed", range(15))
def test_zcs_cover_basis_is_sound_and_complete(seed, client):
    ta = random_ta(random.Random(seed))
    for ata in abstractions(ta, client)[:2]:
        rng = random.Random(seed)
        for _ in range(3):
            target = Z(tuple(rng.randint(0, 1) for _ in range(ata.n_locations)),
                       tuple(rng.randrange(len(ata.domain)) for _ in range(ata.n_shared)))
            configs, _ = zcs_cover_pred_basis({target}, ata)
            brute = {z for z in zcs_space(ata) for r in ata.rules
                     if any(zcs_leq(target, s) for s in zcs_successors(z, r, ata))}
            assert all(any(zcs_leq(b, z) for b in configs) for z in brute)
            assert all(b in brute for b in configs)


def test_projection_of_acs_steps_are_zcs_steps(general):
    for src, rid, dst in acs_edges(general, acs_initials(general), 6):
        assert project(dst) in zcs_successors(project(src), rule(general, rid), general)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_concrete_runs_abstract_to_acs_paths(seed):
    ta = random_ta(random.Random(seed))
    atas = abstractions(ta)
    params = random.Random(seed).choice(admissible_params(ta, 7))
    ata = atas[order_for([a.order for a in atas], params)]
    configs, rules = simulate(ta, params, 12, seed)
    dom = ata.domain
    abstract = [A(c.counters, tuple(dom.locate(g, params) for g in c.shared)) for c in configs]
    assert replay(abstract, rules, ata)
