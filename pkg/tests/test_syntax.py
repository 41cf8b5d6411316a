import random

import pytest
from hypothesis import given, settings, strategies as st

from etacheck.model import AtomKind, Coverability, GeneralCoverability, LinearTerm, Reachability
from etacheck.random_ta import random_ta
from etacheck.syntax import (
    FormatError,
    TASemanticError,
    TASyntaxError,
    format_spec,
    parse_spec,
    parse_ta,
    print_ta,
)

MINIMAL = """
ta Mini
params n t
resilience n > 2*t
size n
shared x
locations a* b
rule r: a -> b when x >= (n + 1)/2 && x < n - t update x += 1
"""


def test_parse_minimal():
    ta = parse_ta(MINIMAL)
    assert ta.name == "Mini" and ta.parameters == ("n", "t")
    (rule,) = ta.rules
    assert {a.kind for a in rule.guard} == {AtomKind.LOWER, AtomKind.UPPER}
    assert LinearTerm.of("1/2", n="1/2") in {a.threshold for a in rule.guard}
    assert rule.update == (1,)


def test_size_defaults_to_n_minus_f():
    ta = parse_ta("ta T\nparams n t f\nshared x\nlocations a*\n")
    assert ta.size == LinearTerm.of(0, n=1, f=-1)


def test_declarations_in_any_order_and_comments():
    text = "locations a* b  # two places\nshared x\nta T\nsize n\nparams n\nrule r: a -> b when true reset x\n"
    ta = parse_ta(text)
    assert ta.rules[0].resets == frozenset({0})


def test_default_size_needs_n_and_f():
    with pytest.raises(TASemanticError):
        parse_ta("ta T\nparams m\nshared x\nlocations a*\n")


@pytest.mark.parametrize("text, error, line", [
    ("params n\nlocations a*\n", TASyntaxError, None),  # no ta
    ("ta T\nparams n\n", TASyntaxError, None),  # no locations
    ("ta T\nparams n\nsize n\nlocations a b\n", TASemanticError, 4),  # no initial location
    ("ta T\nparams n\nsize n\nshared x\nlocations a*\nrule r: a -> c when true\n", TASemanticError, 6),
    ("ta T\nparams n\nsize n\nshared x\nlocations a*\nrule r: a -> a when y >= 1\n", TASemanticError, 6),
    ("ta T\nparams n\nsize n\nshared x\nlocations a*\nrule r: a -> a when x >= m\n", TASemanticError, 6),
    ("ta T\nparams n\nshared x\nlocations a*\nrule r: a -> a when x == 1\n", TASyntaxError, 5),
    ("ta T\nparams n\nshared x\nlocations a*\nrule r a -> a when true\n", TASyntaxError, 5),
    ("ta T\nta U\nparams n\nlocations a*\n", TASemanticError, 2),
    ("ta T\nparams n\nshared x\nlocations a*\nrule r: a -> a when x >= n*n\n", FormatError, 5),
])
def test_errors_carry_positions(text, error, line):
    with pytest.raises(error) as info:
        parse_ta(text)
    if line is not None:
        assert info.value.line == line


def test_print_parse_round_trip_on_benchmarks(bench):
    for path in sorted(bench.glob("*.ta")):
        ta = parse_ta(path.read_text())
        again = parse_ta(print_ta(ta))
        assert again == ta, path.name
        assert print_ta(again) == print_ta(ta)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6), st.booleans())
def test_print_parse_round_trip_on_random_automata(seed, monotone):
    ta = random_ta(random.Random(seed), monotone=monotone)
    assert parse_ta(print_ta(ta)) == ta


def test_spec_forms(voting):
    assert parse_spec("cover-locs d0", voting) == Coverability(frozenset({3}))
    assert parse_spec("cover-locs d0, d1", voting) == Coverability(frozenset({3, 4}))
    g = parse_spec("cover d0>=1, d1>=2 || wait>0", voting)
    assert g == GeneralCoverability(((0, 0, 0, 1, 2), (0, 0, 1, 0, 0)))
    r = parse_spec("reach d0>0 && d1>0; others=0", voting)
    assert r == Reachability(frozenset({0, 1, 2}), frozenset({3, 4}))
    assert parse_spec("reach d0>0; v0=0, wait=0", voting) == Reachability(frozenset({0, 2}), frozenset({3}))


@pytest.mark.parametrize("text", ["cover", "cover-locs", "cover-locs zz", "explode d0", "reach d0>1",
                                  "reach d0>0; d0=0", "cover d0", "cover-lots d0"])
def test_bad_specs(voting, text):
    with pytest.raises(FormatError):
        parse_spec(text, voting)


@pytest.mark.parametrize("text", ["cover d0>=1, d1>=1", "cover d0>=2 || d1>=1", "cover-locs d0 d1",
                                  "reach d0>0; v0=0, v1=0, wait=0", "reach d0>0"])
def test_spec_round_trip(voting, text):
    spec = parse_spec(text, voting)
    assert parse_spec(format_spec(spec, voting), voting) == spec
