import math

import pytest
from hypothesis import given, strategies as st

from cptlab.logic import cycle, graph, unary
from cptlab.logic.structure import Vocabulary
from cptlab.scheme import (
    SchemeError,
    TimingFunction,
    check_standard,
    dump_scheme,
    initial_candidate,
    parse_scheme,
    run,
    stages,
    successor,
)

G = Vocabulary.of({"E": 2})
U = Vocabulary.of({"P": 1})


def scheme(text, vocab=G):
    return parse_scheme(text, vocab)


@pytest.mark.parametrize(
    "text, n, value",
    [("poly 1", 7, 7), ("f2", 3, 9), ("poly 1/2", 10, 4), ("const 2", 100, 2), ("infinity", 3, math.inf)],
)
def test_timing_values(text, n, value):
    assert TimingFunction.parse(text)(n) == value


@given(st.integers(1, 400), st.integers(1, 3), st.integers(1, 3))
def test_rational_timing_is_ceiling(n, a, b):
    v = TimingFunction.poly(f"{a}/{b}")(n)
    assert v**b >= n**a and (v - 1) ** b < n**a


@pytest.mark.parametrize("text", ["poly 0", "poly x", "f", "quadratic", "const -1"])
def test_timing_rejects(text):
    with pytest.raises(ValueError):
        TimingFunction.parse(text)


def test_timing_str_roundtrip():
    for text in ("poly 2", "const 3", "infinity", "poly 1/2"):
        t = TimingFunction.parse(text)
        assert TimingFunction.parse(str(t)) == t


def test_scheme_validation():
    with pytest.raises(SchemeError, match="undeclared"):
        scheme("psi(x) := x = y\nchi := true")
    with pytest.raises(SchemeError, match="dynamic"):
        scheme("phi(x) := DP3(x)\nchi := true")
    with pytest.raises(SchemeError, match="standard"):
        scheme("dialect card\nphi(x) := card{y : atom(y)} = 2\nchi := true")


def test_dump_roundtrip():
    u = scheme("scheme s\npsi(x; y) := atom(y) & E(x, y)\nphi(x) := atom(x)\nchi := exists x (!atom(x))")
    again = scheme(dump_scheme(u))
    assert again == u


def test_singleton_stages_and_overflow():
    M = graph(3, [(0, 1)])
    u = scheme("psi(x; y) := x = y\nchi := true")
    assert [c.size for c in stages(M, u, TimingFunction.infinity(), 3)] == [3, 6, 9, 12]
    # with t = n the second family has 6 members and is dropped
    assert [c.size for c in stages(M, u, TimingFunction.poly(1), 3)] == [3, 6, 6, 6]


def test_constants_are_not_in_universe():
    M = cycle(4)
    u = scheme("phi(x) := atom(x)\nphi(x) := false\nchi := true")
    c1 = successor(initial_candidate(M, u), u, TimingFunction.poly(1))
    assert c1.size == 4
    store = c1.world.store
    assert store.format(c1.c[0]) == "{v0,v1,v2,v3}"
    assert c1.c[1] == store.lookup_set(()) and c1.c[1] not in c1.universe


def test_dynamic_predicates_use_current_and_previous_constants():
    # c0 is the empty set; {c0} can only be defined once c0 is in the universe
    M = unary(3, [0])
    text = "psi(x) := false\npsi(x; y) := x = y & {}(y)\nphi(x) := false\nchi := true"
    dp = parse_scheme(text.format("DP0"), U)
    hp = parse_scheme(text.format("HP0"), U)
    t = TimingFunction.infinity()
    assert [c.size for c in stages(M, dp, t, 3)] == [3, 4, 5, 5]
    assert [c.size for c in stages(M, hp, t, 3)] == [3, 4, 4, 5]


def test_variant_one_waits_two_stages():
    M = unary(2, [0])
    halt = parse_scheme("phi(x) := atom(x)\nphi(x) := atom(x)\nchi := exists x P(x)", U)
    v, trace = run(M, halt, TimingFunction.poly(1), 1)
    assert (v.value, v.stop_time, v.stop_reason) == (True, 2, "halted")
    v2, _ = run(M, halt, TimingFunction.poly(2), 2)
    assert v2.stop_reason == "halted" and v2.stop_time == 1


def test_variants_three_and_four_need_standard():
    u = scheme("psi(x; y) := x = y\nchi := true")
    for variant in (3, 4):
        with pytest.raises(SchemeError, match="standard"):
            run(cycle(3), u, TimingFunction.poly(1), variant)
    with pytest.raises(SchemeError):
        run(cycle(3), u, TimingFunction.poly(1), 5)


def test_variant_four_family_overflow():
    u = scheme("standard yes\npsi(x; y) := x = y\nchi := true")
    v, _ = run(cycle(3), u, TimingFunction.poly(1), 4)
    assert v.stop_reason == "budget" and v.stop_time == 1


def _naive_budget_stop(size, bound):
    t = 0
    while size + t + 1 <= bound:
        t += 1
    return t


@given(st.integers(1, 6), st.integers(1, 3))
def test_stationary_budget_stop_matches_naive(n, q):
    M = unary(n, [])
    u = parse_scheme("phi(x) := atom(x)\nphi(x) := false\nchi := true", U)
    t_fun = TimingFunction.poly(q)
    v, _ = run(M, u, t_fun, 2)
    assert v.stop_reason == "budget"
    assert v.stop_time == _naive_budget_stop(n, t_fun(n))


def test_never_halting_is_reported():
    u = scheme("phi(x) := atom(x)\nphi(x) := false\nchi := true")
    v, _ = run(cycle(3), u, TimingFunction.infinity(), 2)
    assert v.value is None and v.stop_reason == "never" and v.stop_time == math.inf
    assert v.line() == "verdict: undefined stop_t=inf reason=never"


def test_chi_must_be_sentence():
    u = scheme("phi(x) := atom(x)\nphi(x) := atom(x)")
    with pytest.raises(SchemeError, match="chi"):
        run(cycle(3), u, TimingFunction.poly(1))
    from cptlab.logic import parse_formula

    with pytest.raises(SchemeError, match="sentence"):
        run(cycle(3), u, TimingFunction.poly(1), chi=parse_formula("E(x, x)", G))


def test_clock_is_standard():
    from cptlab.models import load_battery

    clock = next(e.scheme for e in load_battery("graph", G) if e.name == "clock")
    assert check_standard(clock, cycle(3), 4)
    assert not check_standard(scheme("psi(x; y) := x = y\nchi := true"), cycle(3), 2)


def test_trace_records_stages():
    u = scheme("psi(x; y) := x = y\nchi := true")
    _, trace = run(cycle(3), u, TimingFunction.poly(2), 2)
    assert trace.sizes[:2] == [3, 6]
    assert trace.stages[1]["new_sets"] == [3]
    assert trace.to_jsonl().count("\n") == len(trace.stages)
