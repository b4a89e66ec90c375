from importlib import resources

import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_extension

from cptlab.logic import cycle, graph, unary
from cptlab.logic.structure import Vocabulary
from cptlab.models import canonical_system, canonical_witness, load_battery
from cptlab.scheme import TimingFunction, Verdict, parse_scheme
from cptlab.symmetry import (
    KSystem,
    PartialMapFamily,
    SAnd,
    SExists,
    SForall,
    SQF,
    SupportFamily,
    WitnessFamily,
    check_dichotomy,
    check_k_system,
    check_lifting,
    check_super,
    check_witness,
    compare_verdicts,
    dump_system,
    good_sets,
    load_system,
    load_witness,
    parse_system,
    support_game_equiv,
    support_logic_sat,
    transfer_verdict,
    zero_lifting,
)
from cptlab.symmetry.maps import compose, dom, extension_cover, inverse, one_point_extension, restrict
from cptlab.symmetry.support_logic import SupportLogicError, depth, width
from cptlab.symmetry.witness import TransferError

from cptlab.logic.formula import Eq, Rel, Var

SYSTEMS = resources.files("cptlab") / "fixtures" / "systems"
T1 = TimingFunction.poly(1)


def small_graphs():
    return st.builds(
        lambda n, mask: graph(n, [p for i, p in enumerate((a, b) for a in range(n) for b in range(a + 1, n)) if mask >> i & 1]),
        st.integers(2, 5),
        st.integers(0, 2**10 - 1),
    )


# -- maps and supports ----------------------------------------------------------------


def test_map_algebra():
    f = ((0, 1), (1, 2))
    g = ((1, 3), (2, 0))
    assert compose(g, f) == ((0, 3), (1, 0))
    assert inverse(f) == ((1, 0), (2, 1))
    assert restrict(f, {1}) == ((1, 2),)
    assert dom(f) == {0, 1}


def test_support_family_unions():
    I = SupportFamily.explicit(4, [{0, 1}, {2}])
    assert {0} in I and {0, 2} not in I
    assert I.union_of({0, 1, 2}, 2) and not I.union_of({0, 1, 3}, 2)
    S = SupportFamily.by_size(4, 1)
    assert S.maximal == tuple(frozenset({i}) for i in range(4))
    assert S.union_of({0, 3}, 2) and not S.union_of({0, 1, 3}, 2)
    with pytest.raises(ValueError):
        SupportFamily.explicit(2, [{5}])


def test_all_partial_isomorphisms_count():
    M = cycle(5)
    F = PartialMapFamily.all_partial_automorphisms(M, 2)
    # the empty map, 25 one point maps, and each of the 5 edges (5 non-edges)
    # goes to the 10 ordered edges (non-edges)
    assert len(F) == 1 + 25 + 5 * 10 + 5 * 10


def _slow_extension(family, I, k):
    cover = extension_cover(family, I, k - 1)
    for g in family:
        for U in I.subsets_in_union(dom(g), k - 1):
            have = cover.get(restrict(g, U), ())
            if any(A not in have for A in I.maximal):
                return False
    return True


@settings(max_examples=40, deadline=None)
@given(small_graphs(), small_graphs(), st.sampled_from([(2, 2), (3, 3), (3, 2)]))
def test_one_point_certificate_agrees_with_cover(M1, M2, dk):
    d, k = dk
    H = PartialMapFamily.all_partial_isomorphisms(M1, M2, d)
    I = SupportFamily.by_size(len(M1), 1)
    fast = one_point_extension(H, I, k - 1)
    assert fast is not None
    assert fast[0] == _slow_extension(H, I, k)


@settings(max_examples=30, deadline=None)
@given(small_graphs())
def test_clause_d_is_extension_property(M):
    Y = KSystem(M, SupportFamily.by_size(len(M), 1), PartialMapFamily.all_partial_automorphisms(M, 3), 3, 1, T1)
    rep = check_k_system(Y)
    assert rep.get("D").passed == brute_extension(M, 3)
    for clause in ("A", "B.partial-automorphism", "B.inverse", "B.restriction", "B.composition", "C"):
        assert rep.get(clause).passed


# -- systems ------------------------------------------------------------------------------


def test_c5_system_fixture():
    Y = load_system(SYSTEMS / "c5.system")
    rep = check_k_system(Y)
    rep.extend(check_dichotomy(Y, "definable"))
    assert rep.passed, str(rep)


def test_broken_inverse_fixture():
    rep = check_k_system(load_system(SYSTEMS / "c5_broken_inverse.system"))
    assert [c.clause for c in rep.failures()] == ["B.inverse"]


def test_dichotomy_modes_agree_on_small_system():
    Y = canonical_system(cycle(5), 1, 3, T1)
    assert check_dichotomy(Y, "definable").passed == check_dichotomy(Y, "exhaustive").passed


def test_super_on_unary():
    Y = canonical_system(unary(8, range(3)), 1, 3, TimingFunction.constant(2))
    assert check_super(Y).passed


def test_system_dump_roundtrip(tmp_path):
    Y = load_system(SYSTEMS / "c5.system")
    (tmp_path / "m.model").write_text(Y.M.to_text())
    again = parse_system(dump_system(Y, "m.model"), tmp_path)
    assert again.F.maps == Y.F.maps and again.I.members == Y.I.members
    assert (again.k, again.s, again.t_fun) == (Y.k, Y.s, Y.t_fun)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("model c5.model\nF: explicit\nk=3 s=1\n", "both"),
        ("model c5.model\nI: size<=1\nF: all-partial-autos\nk=3 s=1\n", "max-dom"),
        ("model c5.model\nI: size<=1\nF: explicit\nmap v0->v9\nk=3 s=1\n", "bad map entry"),
        ("model c5.model\nI: size<=1\nF: explicit\nk=3 r=1\n", "bad parameter"),
        ("model c5.model\nI: size<=1\nF: explicit\nbogus\nk=3 s=1\n", "unrecognized"),
    ],
)
def test_system_format_errors(text, fragment):
    with pytest.raises(ValueError, match=fragment):
        parse_system(text, SYSTEMS.parent / "models")


# -- witnesses ----------------------------------------------------------------------------


def test_witness_fixtures():
    for name in ("c5_self.witness", "unary8.witness"):
        W, Y1, Y2 = load_witness(SYSTEMS / name)
        assert check_witness(W, Y1, Y2).passed, name


def test_witness_negative_cases():
    Y = canonical_system(cycle(5), 1, 3, T1)
    empty = WitnessFamily(PartialMapFamily([], Y.M, Y.M), "k")
    rep = check_witness(empty, Y, Y)
    assert not rep.get("f").passed
    bogus = WitnessFamily(PartialMapFamily([((0, 0), (1, 2))], Y.M, Y.M), "k")
    rep = check_witness(bogus, Y, Y)
    assert not rep.get("b").passed
    with pytest.raises(ValueError):
        WitnessFamily(empty.H, "strong")


def test_witness_between_nonequivalent_fails():
    M1, M2 = cycle(5), cycle(4)
    Y1, Y2 = canonical_system(M1, 1, 2, T1, check=False), canonical_system(M2, 1, 2, T1, check=False)
    W = canonical_witness(M1, M2, 1, 2, "k", check=False)
    assert check_witness(W, Y1, Y2).passed
    Y3 = canonical_system(graph(4, [(0, 1)]), 1, 2, T1, check=False)
    W3 = canonical_witness(M1, Y3.M, 1, 2, "k", check=False)
    assert not check_witness(W3, Y1, Y3).passed


def test_compare_verdicts():
    t = Verdict(True, 3, "halted")
    f = Verdict(False, 3, "halted")
    early = Verdict(None, 1, "budget")
    late = Verdict(None, 9, "budget")
    assert compare_verdicts(t, Verdict(True, 5, "halted")) == "equal"
    assert compare_verdicts(t, f) == "mismatch"
    assert compare_verdicts(early, t) == "allowed-undefined"
    assert compare_verdicts(t, late) == "mismatch"
    assert compare_verdicts(early, late) == "equal"


def test_transfer_respects_bounds():
    Y = canonical_system(cycle(5), 1, 3, T1)
    W = canonical_witness(Y.M, Y.M, 1, 3, "k")
    rep = check_witness(W, Y, Y)
    wide = parse_scheme("psi(x; y, z) := x = y | x = z\nchi := true", Y.M.vocab)
    with pytest.raises(TransferError):
        transfer_verdict(rep, Y.M, Y.M, wide, k=3, s=1)
    single = next(e.scheme for e in load_battery("graph", Y.M.vocab) if e.name == "singleton")
    res = transfer_verdict(rep, Y.M, Y.M, single, t1=T1, k=3, s=1)
    assert res.ok and res.status == "equal"
    rep.add("forced", False)
    with pytest.raises(TransferError):
        transfer_verdict(rep, Y.M, Y.M, single, t1=T1)


# -- liftings -----------------------------------------------------------------------------


def test_zero_lifting_and_good_sets():
    Y = canonical_system(cycle(5), 1, 3, T1)
    Z = zero_lifting(Y)
    assert check_lifting(Z).passed
    goods = good_sets(Z)
    # A-classes for |A| <= 1 on C5 are {a} and the other four vertices
    assert len(goods) == 32


# -- block logic and the game ----------------------------------------------------------------


def test_support_logic_blocks():
    M = cycle(4)
    I = SupportFamily.by_size(4, 2)
    adj = SQF(Rel("E", (Var("x"), Var("y"))))
    phi = SForall(("x",), SExists(("y", "z"), SAnd((adj, SQF(Rel("E", (Var("x"), Var("z")))), SQF(Eq(Var("y"), Var("z")))))))
    assert support_logic_sat(M, I, phi)
    assert depth(phi) == 2 and width(phi) == 2
    with pytest.raises(SupportLogicError):
        support_logic_sat(M, SupportFamily.by_size(4, 1), adj, blocks=[(("x", "y"), ("v0", "v1"))])
    assert support_logic_sat(M, I, adj, blocks=[(("x",), ("v0",)), (("y",), ("v1",))])


def test_game_depth_and_formula():
    M1, M2 = cycle(5), cycle(6)
    I1, I2 = SupportFamily.by_size(5, 1), SupportFamily.by_size(6, 1)
    assert support_game_equiv(M1, M2, I1, I2, 2).equivalent
    assert not support_game_equiv(M1, M2, I1, I2, 3).equivalent
    G1, G2 = graph(3, [(0, 1)]), graph(3, [(0, 1), (1, 2)])
    ok, phi = support_game_equiv(G1, G2, SupportFamily.by_size(3, 1), SupportFamily.by_size(3, 1), 2)
    assert not ok
    assert support_logic_sat(G1, SupportFamily.by_size(3, 1), phi)
    assert not support_logic_sat(G2, SupportFamily.by_size(3, 1), phi)
    with pytest.raises(ValueError):
        support_game_equiv(M1, unary(3, []), I1, SupportFamily.by_size(3, 1), 2)


def test_game_unary_vocabulary():
    V = Vocabulary.of({"P": 1})
    M1, M2 = unary(6, range(3)), unary(6, range(2))
    assert M1.vocab == V
    same = support_game_equiv(M1, M2, SupportFamily.by_size(6, 1), SupportFamily.by_size(6, 1), 2)
    assert same.equivalent
    diff = support_game_equiv(unary(4, range(1)), unary(4, []), SupportFamily.by_size(4, 1), SupportFamily.by_size(4, 1), 1)
    assert not diff.equivalent
