"""Partial maps, support families and families of partial isomorphisms.

A partial map is a tuple of (dom, ran) pairs sorted by domain; elements are
integer indices of a structure's elements (equal to their atom handles).
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from functools import cached_property

from ..logic.structure import Structure

PMap = tuple  # tuple[tuple[int, int], ...]


def pmap(pairs) -> PMap:
    items = dict(pairs).items() if not isinstance(pairs, dict) else pairs.items()
    return tuple(sorted(items))


def dom(f: PMap) -> frozenset:
    return frozenset(a for a, _ in f)


def ran(f: PMap) -> frozenset:
    return frozenset(b for _, b in f)


def inverse(f: PMap) -> PMap:
    return tuple(sorted((b, a) for a, b in f))


def compose(g: PMap, f: PMap) -> PMap:
    """g after f, defined where f(x) lies in dom(g)."""
    gd = dict(g)
    return tuple((a, gd[b]) for a, b in f if b in gd)


def restrict(f: PMap, U) -> PMap:
    return tuple(p for p in f if p[0] in U)


def image(f: PMap, A) -> frozenset:
    d = dict(f)
    return frozenset(d[a] for a in A)


def is_injective(f: PMap) -> bool:
    return len(ran(f)) == len(f)


def identity(A) -> PMap:
    return tuple((a, a) for a in sorted(A))


def extends(g: PMap, f: PMap) -> bool:
    """f is a restriction of g."""
    gd = dict(g)
    return all(gd.get(a) == b for a, b in f)


def is_identity_on(f: PMap, A) -> bool:
    d = dict(f)
    return all(d.get(a) == a for a in A)


def fmt(f: PMap, names=None) -> str:
    show = (lambda i: names[i]) if names is not None else str
    return " ".join(f"{show(a)}->{show(b)}" for a, b in f) or "(empty)"


# -- partial isomorphisms -----------------------------------------------------


def _relation_tables(M: Structure):
    return {p: M.indexed_relations()[p] for p, _ in M.vocab.predicates}, dict(M.vocab.predicates)


def all_partial_isomorphisms(M1: Structure, M2: Structure, max_dom: int) -> list[PMap]:
    """Every partial isomorphism M1 -> M2 with at most max_dom pairs.

    Domains are built in increasing order and each new pair is checked against
    the atoms it completes, so only consistent prefixes are explored.
    """
    if M1.vocab.predicates != M2.vocab.predicates:
        raise ValueError("structures have different vocabularies")
    r1, ar = _relation_tables(M1)
    r2, _ = _relation_tables(M2)
    n1, n2 = len(M1), len(M2)
    out: list[PMap] = [()]

    def consistent(pairs, a, b):
        dm = [p[0] for p in pairs] + [a]
        rm = [p[1] for p in pairs] + [b]
        last = len(dm) - 1
        for p, k in ar.items():
            for idx in itertools.product(range(len(dm)), repeat=k):
                if last not in idx:
                    continue
                if (tuple(dm[i] for i in idx) in r1[p]) != (tuple(rm[i] for i in idx) in r2[p]):
                    return False
        return True

    def grow(pairs, used):
        if len(pairs) == max_dom:
            return
        start = pairs[-1][0] + 1 if pairs else 0
        for a in range(start, n1):
            for b in range(n2):
                if b in used or not consistent(pairs, a, b):
                    continue
                nxt = pairs + ((a, b),)
                out.append(nxt)
                grow(nxt, used | {b})

    grow((), frozenset())
    return out


def is_partial_iso(f: PMap, r1, r2, arity) -> bool:
    if not is_injective(f):
        return False
    d = dict(f)
    keys = list(d)
    for p, k in arity.items():
        for t in itertools.product(keys, repeat=k):
            if (t in r1[p]) != (tuple(d[x] for x in t) in r2[p]):
                return False
    return True


def qf_type(t, rels, arity) -> tuple:
    """Canonical quantifier free type of a tuple: equality pattern plus atoms."""
    first: dict = {}
    pattern = tuple(first.setdefault(x, len(first)) for x in t)
    reps = list(first)
    atoms = []
    for p in sorted(arity):
        k = arity[p]
        for idx in itertools.product(range(len(reps)), repeat=k):
            if tuple(reps[i] for i in idx) in rels[p]:
                atoms.append((p, idx))
    return pattern, tuple(atoms)


# -- support families ---------------------------------------------------------


class SupportFamily:
    """A downward closed family I of subsets of range(n).

    Either every subset of size <= q (``size`` kind) or the downward closure of
    explicitly given sets.
    """

    def __init__(self, n: int, q: int | None = None, sets=None):
        self.n = n
        if (q is None) == (sets is None):
            raise ValueError("give exactly one of q or sets")
        self.q = q
        if q is not None:
            self.kind = "size"
            self._explicit = None
        else:
            self.kind = "explicit"
            closed = set()
            for s in sets:
                s = frozenset(s)
                if not s <= frozenset(range(n)):
                    raise ValueError(f"support set {sorted(s)} not inside the universe")
                for r in range(len(s) + 1):
                    closed.update(frozenset(c) for c in itertools.combinations(sorted(s), r))
            self._explicit = frozenset(closed)

    @classmethod
    def by_size(cls, n: int, q: int) -> SupportFamily:
        return cls(n, q=q)

    @classmethod
    def explicit(cls, n: int, sets) -> SupportFamily:
        return cls(n, sets=sets)

    def __contains__(self, A) -> bool:
        A = frozenset(A)
        if self.kind == "size":
            return len(A) <= self.q and all(0 <= a < self.n for a in A)
        return A in self._explicit

    @cached_property
    def members(self) -> frozenset:
        if self.kind == "explicit":
            return self._explicit
        return frozenset(
            frozenset(c) for r in range(min(self.q, self.n) + 1) for c in itertools.combinations(range(self.n), r)
        )

    @cached_property
    def maximal(self) -> tuple:
        ms = self.members
        return tuple(sorted((A for A in ms if not any(A < B for B in ms)), key=lambda s: (len(s), sorted(s))))

    def has_singletons(self) -> bool:
        return all(frozenset((a,)) in self for a in range(self.n))

    def union_of(self, X, m: int) -> bool:
        """X belongs to I[m], the unions of at most m members."""
        X = frozenset(X)
        if self.kind == "size":
            return all(0 <= a < self.n for a in X) and len(X) <= self.q * m
        return X in self.unions(m)

    def unions(self, m: int) -> frozenset:
        return self._unions(m)

    def _unions(self, m: int) -> frozenset:
        cache = self.__dict__.setdefault("_union_cache", {0: frozenset({frozenset()})})
        if m in cache:
            return cache[m]
        prev = self._unions(m - 1)
        maxi = self.maximal
        out = set(prev)
        for X in prev:
            for A in maxi:
                out.add(X | A)
        # a subset of a union of m members is itself such a union
        closed = set()
        for U in out:
            if U in closed:
                continue
            for r in range(len(U) + 1):
                closed.update(frozenset(c) for c in itertools.combinations(sorted(U), r))
        cache[m] = frozenset(closed)
        return cache[m]

    def subsets_in_union(self, X, m: int):
        """Subsets of X that belong to I[m]."""
        X = sorted(X)
        top = min(len(X), self.q * m) if self.kind == "size" else len(X)
        for r in range(top + 1):
            for c in itertools.combinations(X, r):
                if self.union_of(c, m):
                    yield frozenset(c)

    def maximal_inside(self, X):
        """Maximal members of I contained in X."""
        X = frozenset(X)
        if self.kind == "size":
            r = min(self.q, len(X))
            return [frozenset(c) for c in itertools.combinations(sorted(X), r)]
        inside = [A for A in self.members if A <= X]
        return [A for A in inside if not any(A < B for B in inside)]

    def describe(self) -> str:
        if self.kind == "size":
            return f"size<={self.q}"
        return "explicit " + " ".join("{" + ",".join(map(str, sorted(A))) + "}" for A in self.maximal)


# -- families of partial maps -------------------------------------------------


class PartialMapFamily:
    """A finite set of partial maps between two structures.

    ``complete_upto`` records that the family is exactly the set of all partial
    isomorphisms with at most that many pairs, which certifies closure under
    inverse (for automorphism families), restriction and composition.
    """

    def __init__(self, maps, src: Structure, dst: Structure | None = None, complete_upto: int | None = None):
        self.maps = frozenset(tuple(sorted(f)) for f in maps)
        self.src = src
        self.dst = dst if dst is not None else src
        self.complete_upto = complete_upto

    def __contains__(self, f) -> bool:
        return tuple(f) in self.maps

    def __iter__(self):
        return iter(self.sorted_maps)

    def __len__(self) -> int:
        return len(self.maps)

    @cached_property
    def sorted_maps(self) -> tuple:
        return tuple(sorted(sorted(self.maps), key=len))

    @cached_property
    def max_dom(self) -> int:
        return max((len(f) for f in self.maps), default=0)

    @cached_property
    def by_dom(self) -> dict:
        idx = defaultdict(list)
        for f in self.sorted_maps:
            idx[dom(f)].append(f)
        return dict(idx)

    @cached_property
    def by_ran(self) -> dict:
        idx = defaultdict(list)
        for f in self.sorted_maps:
            idx[ran(f)].append(f)
        return dict(idx)

    @cached_property
    def restriction_closed(self) -> bool:
        if self.complete_upto is not None:
            return True
        return all(f[:i] + f[i + 1:] in self.maps for f in self.maps for i in range(len(f)))

    def covering(self, U) -> list:
        """Maps whose domain contains U, up to restriction when the family is restriction closed."""
        U = frozenset(U)
        if self.restriction_closed:
            return self.by_dom.get(U, [])
        return [f for f in self.sorted_maps if U <= dom(f)]

    def inverse_family(self) -> PartialMapFamily:
        return PartialMapFamily((inverse(f) for f in self.maps), self.dst, self.src, self.complete_upto)

    @cached_property
    def maximal_maps(self) -> tuple:
        """Maps that are not a proper restriction of another member."""
        if not self.restriction_closed:
            return tuple(f for f in self.sorted_maps if not any(len(g) > len(f) and extends(g, f) for g in self.maps))
        sub = set()
        for f in self.maps:
            for i in range(len(f)):
                sub.add(f[:i] + f[i + 1:])
        return tuple(f for f in self.sorted_maps if f not in sub)

    @classmethod
    def all_partial_automorphisms(cls, M: Structure, max_dom: int) -> PartialMapFamily:
        return cls(all_partial_isomorphisms(M, M, max_dom), M, M, complete_upto=max_dom)

    @classmethod
    def all_partial_isomorphisms(cls, M1: Structure, M2: Structure, max_dom: int) -> PartialMapFamily:
        return cls(all_partial_isomorphisms(M1, M2, max_dom), M1, M2, complete_upto=max_dom)

    @classmethod
    def saturated(cls, maps, M: Structure, max_rounds: int = 64) -> PartialMapFamily:
        """Close under inverse, composition and restriction until a fixpoint."""
        cur = {tuple(sorted(f)) for f in maps} | {()}
        for _ in range(max_rounds):
            new = set(cur)
            for f in cur:
                new.add(inverse(f))
                for i in range(len(f)):
                    new.add(f[:i] + f[i + 1:])
            for f in cur:
                for g in cur:
                    new.add(compose(g, f))
            if new == cur:
                return cls(cur, M, M)
            cur = new
        raise RuntimeError("saturation did not converge")


def composition_violation(left: PartialMapFamily, right: PartialMapFamily, target: PartialMapFamily, partial_isos=True):
    """Find (g, f) with g in left, f in right and g after f outside target, or None.

    When target is complete up to d, composites of partial isomorphisms whose
    domain has at most d points are members, so nothing needs enumerating.
    ``partial_isos`` says both inputs were already verified to be partial
    isomorphisms.
    """
    if partial_isos and target.complete_upto is not None:
        if min(left.max_dom, right.max_dom) <= target.complete_upto:
            return None
    if left.restriction_closed and right.restriction_closed and target.restriction_closed:
        # g o f equals g' o f' with ran f' = dom g' for restrictions f', g'
        for S, fs in right.by_ran.items():
            for g in left.by_dom.get(S, ()):
                for f in fs:
                    c = compose(g, f)
                    if c not in target.maps:
                        return g, f
        return None
    for g in left.sorted_maps:
        for f in right.sorted_maps:
            if compose(g, f) not in target.maps:
                return g, f
    return None


def extension_cover(family: PartialMapFamily, I: SupportFamily, k_minus_1: int):
    """Map each restriction r = g|U (U in I[k-1]) to the members of I covered by some extension.

    Returns dict r -> set of maximal members A of I with A within dom(g) for
    some g extending r.
    """
    cover = defaultdict(set)
    maxi = I.maximal
    for g in family.sorted_maps:
        D = dom(g)
        covered = [A for A in maxi if A <= D]
        for U in I.subsets_in_union(D, k_minus_1):
            cover[restrict(g, U)].update(covered)
    return cover


def one_point_extension(family: PartialMapFamily, I: SupportFamily, k_minus_1: int):
    """Certificate for the extension property of a complete family over size-bounded I.

    If the family holds every partial isomorphism on at most d points and
    q * k <= d, covering a new member of I after keeping g|U extends one point
    at a time, so it suffices that every map on fewer than q * k points
    extends by any one point.  Returns (True, None), (False, witness) when
    the failure is conclusive (q = 1), or None when the certificate does not
    apply.
    """
    d = family.complete_upto
    if d is None or I.kind != "size":
        return None
    q = I.q
    top = q * (k_minus_1 + 1)
    if top > d:
        return None
    M1, M2 = family.src, family.dst
    r1, ar = _relation_tables(M1)
    r2, _ = _relation_tables(M2)
    n1, n2 = len(M1), len(M2)
    b1: dict = {}
    b2: dict = {}

    def bucket(cache, t, rels, n):
        if t not in cache:
            cache[t] = {qf_type(t + (b,), rels, ar) for b in range(n) if b not in t}
        return cache[t]

    for f in family.sorted_maps:
        if len(f) >= top:
            continue
        src = tuple(a for a, _ in f)
        dst = tuple(b for _, b in f)
        missing = bucket(b1, src, r1, n1) - bucket(b2, dst, r2, n2)
        if missing:
            if q == 1:
                return False, {"map": f, "reason": "no one point extension", "type": repr(min(missing, key=repr))}
            return None
    return True, None
