import random

import pytest

from etacheck.abstraction import (
    NoAdmissibleParameters,
    UnsupportedUpdate,
    abstract_ta,
    abstractions,
    build_domain,
    collect_thresholds,
    enumerate_orders,
    order_for,
)
from etacheck.oracle import admissible_params
from etacheck.random_ta import random_ta
from etacheck.syntax import load_ta, parse_ta

VOTING_ORDERS = [
    "0 = t < 1 = n - t",
    "0 = t < 1 < n - t",
    "0 < 1 = t < n - t",
    "0 < 1 < t < n - t",
]


def test_thresholds_start_with_zero_and_one(voting):
    assert [t.render(voting.parameters) for t in collect_thresholds(voting)] == ["0", "1", "n - t", "t"]


def test_voting_orders(voting, client):
    assert [o.render() for o in enumerate_orders(voting, client=client)] == VOTING_ORDERS


def test_one_order_when_faults_exceed_one(bench, client):
    ta = load_ta(bench / "voting_many_faults.ta")
    (ata,) = abstractions(ta, client)
    assert ata.domain.render() == "{[0, 1), [1, t), [t, n - t), [n - t, inf)}"
    r2 = next(r for r in ata.rules if r.id == "r2")
    assert ata.render_guard(r2) == "x0 = I3"
    r0 = next(r for r in ata.rules if r.id == "r0")
    assert ata.render_guard(r0) == "true"


def test_guardless_domain(client):
    ta = parse_ta("ta T\nparams n\nsize n\nshared x\nlocations a* b\nrule r: a -> b when true update x += 1\n")
    (ata,) = abstractions(ta, client)
    assert ata.domain.render() == "{[0, 1), [1, inf)}"


def test_unsatisfiable_resilience(client):
    ta = parse_ta("ta T\nparams n\nresilience n < 0\nsize n\nshared x\nlocations a*\n")
    with pytest.raises(NoAdmissibleParameters):
        enumerate_orders(ta, client=client)


def test_large_updates_are_rejected(client):
    ta = parse_ta("ta T\nparams n\nsize n\nshared x\nlocations a* b\nrule r: a -> b when true update x += 2\n")
    order = enumerate_orders(ta, client=client)[0]
    with pytest.raises(UnsupportedUpdate):
        abstract_ta(ta, build_domain(order))


def test_upper_guards_select_lower_intervals(client):
    ta = parse_ta("ta T\nparams n t f\nresilience n > 3*t && t >= f && t > 0\nshared x\nlocations a* b\n"
                  "rule r: a -> b when x >= t && x < n - t\n")
    for ata in abstractions(ta, client):
        (r,) = ata.rules
        lo = ata.order.block_of(ta.rules[0].guard.atoms[0].threshold)
        hi = ata.order.block_of(ta.rules[0].guard.atoms[1].threshold)
        assert r.allowed[0] == frozenset(range(lo, hi))


def test_rational_thresholds_use_ceilings(client):
    # x >= n/2 and x >= (n+1)/2 coincide for even n (ceil) but not for odd n
    ta = parse_ta("ta T\nparams n\nresilience n >= 2\nsize n\nshared x\nlocations a* b c\n"
                  "rule r: a -> b when x >= n/2\nrule s: a -> c when x >= (n+1)/2\n")
    orders = enumerate_orders(ta, client=client)
    # n = 2, odd n, even n >= 4
    assert [o.render() for o in orders] == ["0 < 1 = 1/2*n < 1/2*n + 1/2", "0 < 1 < 1/2*n = 1/2*n + 1/2",
                                            "0 < 1 < 1/2*n < 1/2*n + 1/2"]
    for n in range(2, 12):
        idx = order_for(orders, {"n": n})
        vals = orders[idx].effective_values({"n": n})
        assert vals[2:] == [-(-n // 2), -(-(n + 1) // 2)]


@pytest.mark.parametrize("seed", range(25))
def test_every_admissible_vector_has_exactly_one_order(seed, client):
    ta = random_ta(random.Random(seed))
    orders = enumerate_orders(ta, client=client)
    for params in admissible_params(ta, 7):
        assert sum(o.holds(params) for o in orders) == 1, params


def test_interval_location_matches_bounds(voting_atas):
    params = {"n": 7, "t": 2, "f": 0}
    ata = voting_atas[order_for([a.order for a in voting_atas], params)]
    dom = ata.domain
    assert [dom.locate(v, params) for v in range(8)] == [0, 1, 2, 2, 2, 3, 3, 3]
