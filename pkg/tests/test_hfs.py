import pytest
from hypothesis import given, strategies as st

from cptlab.hfs import StoreError, UniverseStore


def build(store, spec):
    """spec: str atom name or list of specs."""
    if isinstance(spec, str):
        return store.atom(spec)
    return store.intern_set(build(store, s) for s in spec)


specs = st.recursive(st.sampled_from(["a", "b", "c"]), lambda kids: st.lists(kids, max_size=3), max_leaves=8)


def native(spec):
    if isinstance(spec, str):
        return spec
    return frozenset(native(s) for s in spec)


@pytest.fixture
def store():
    s = UniverseStore()
    for name in "abc":
        s.intern_atom(name)
    return s


def test_atom_is_not_empty_set(store):
    empty = store.intern_set(())
    assert store.is_atom(store.atom("a"))
    assert not store.is_atom(empty)
    assert store.members(store.atom("a")) == store.members(empty) == frozenset()
    assert store.atom("a") != empty


def test_duplicate_atom_and_unknown_member(store):
    with pytest.raises(StoreError):
        store.intern_atom("a")
    with pytest.raises(StoreError):
        store.intern_set([99])
    with pytest.raises(StoreError):
        store.atom_name(store.intern_set(()))


def test_von_neumann_and_rank(store):
    three = store.von_neumann(3)
    assert store.format(three) == "{{},{{}},{{},{{}}}}"
    assert store.rank(three) == 3
    assert len(store.members(three)) == 3
    assert store.rank(store.atom("a")) == 0


def test_transitive_closure(store):
    h = build(store, [["a", ["b"]]])
    names = {store.format(x) for x in store.transitive_closure(h)}
    assert names == {"{a,{b}}", "a", "{b}", "b"}
    assert store.is_transitive(store.transitive_closure(h))
    assert not store.is_transitive({h})


@given(specs, specs)
def test_interning_is_extensional(x, y):
    s = UniverseStore()
    for name in "abc":
        s.intern_atom(name)
    assert (build(s, x) == build(s, y)) == (native(x) == native(y))


@given(specs)
def test_intern_twice_same_handle(x):
    s = UniverseStore()
    for name in "abc":
        s.intern_atom(name)
    n = len(s)
    h = build(s, x)
    after = len(s)
    assert build(s, x) == h and len(s) == after >= n


def to_native(store, h):
    if store.is_atom(h):
        return store.atom_name(h)
    return frozenset(to_native(store, m) for m in store.members(h))


@given(specs)
def test_import_roundtrip(x):
    s1, s2 = UniverseStore(), UniverseStore()
    for name in "abc":
        s1.intern_atom(name)
    for name in "cba":
        s2.intern_atom(name)
    h = build(s1, x)
    assert to_native(s2, s2.import_from(s1, h)) == to_native(s1, h) == native(x)
