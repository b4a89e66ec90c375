"""k-systems (M, I, F): structural clauses, the dichotomy clause and super systems."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from ..logic.evaluate import Context, World, holds
from ..logic.formula import free_vars, is_quantifier_free
from ..logic.structure import Structure
from .maps import (
    PartialMapFamily,
    SupportFamily,
    composition_violation,
    dom,
    extension_cover,
    image,
    inverse,
    is_identity_on,
    is_partial_iso,
    one_point_extension,
    qf_type,
    restrict,
)
from .report import Report

EXHAUSTIVE_LIMIT = 8
TYPE_ORBIT_LIMIT = 16


@dataclass
class KSystem:
    M: Structure
    I: SupportFamily
    F: PartialMapFamily
    k: int
    s: int
    t_fun: object

    @property
    def threshold(self):
        return self.t_fun(len(self.M))

    @cached_property
    def relations(self):
        return self.M.indexed_relations()

    @cached_property
    def arity(self):
        return dict(self.M.vocab.predicates)


# -- structural clauses ---------------------------------------------------------


def check_k_system(Y: KSystem) -> Report:
    rep = Report("k-system clauses (A)-(D)")
    n = len(Y.M)
    I, F = Y.I, Y.F
    # (A)
    down = all(frozenset(c) in I for A in I.maximal for r in range(len(A)) for c in itertools.combinations(sorted(A), r))
    missing = next((a for a in range(n) if frozenset((a,)) not in I), None)
    rep.add("A", down and missing is None, None if missing is None else {"missing_singleton": Y.M.elements[missing]})
    # (B)
    bad = next((f for f in F if not is_partial_iso(f, Y.relations, Y.relations, Y.arity)), None)
    rep.add("B.partial-automorphism", bad is None, bad)
    bad_img = None
    if I.kind != "size":
        for f in F:
            for A in I.maximal_inside(dom(f)):
                if image(f, A) not in I:
                    bad_img = {"map": f, "A": sorted(A)}
                    break
            if bad_img:
                break
    # for size-bounded I, injectivity (checked above) keeps images inside I
    rep.add("B.image", bad_img is None, bad_img)
    bad = next((f for f in F if inverse(f) not in F.maps), None)
    rep.add("B.inverse", bad is None, bad)
    bad = next((f for f in F for i in range(len(f)) if f[:i] + f[i + 1:] not in F.maps), None)
    rep.add("B.restriction", bad is None, bad)
    v = composition_violation(F, F, F, partial_isos=rep.get("B.partial-automorphism").passed)
    rep.add("B.composition", v is None, None if v is None else {"g": v[0], "f": v[1]})
    # (C)
    bad = next((f for f in F if not I.union_of(dom(f), Y.k)), None)
    rep.add("C", bad is None, bad)
    # (D)
    rep.add(*_clause_d(Y))
    return rep


def _clause_d(Y: KSystem):
    F, I = Y.F, Y.I
    fast = one_point_extension(F, I, Y.k - 1)
    if fast is not None:
        ok, w = fast
        return "D", ok, w
    cover = extension_cover(F, I, Y.k - 1)
    maxi = I.maximal
    seen = set()
    for f in F:
        for U in I.subsets_in_union(dom(f), Y.k - 1):
            r = restrict(f, U)
            if r in seen:
                continue
            seen.add(r)
            have = cover.get(r, ())
            for A in maxi:
                if A not in have:
                    return "D", False, {"map": f, "kept": sorted(U), "new": sorted(A)}
    return "D", True, None


# -- the dichotomy clause (E) -------------------------------------------------------


class _Orbit:
    """H_h for a base tuple h, optionally restricted to maps fixing A pointwise."""

    def __init__(self, Y: KSystem, h: tuple, fix=frozenset()):
        self.Y = Y
        self.h = h
        self.fix = frozenset(fix)
        U = frozenset(h)
        out = set()
        for f in Y.F.covering(U):
            if self.fix and not is_identity_on(f, self.fix):
                continue
            d = dict(f)
            out.add(tuple(d[a] for a in h))
        self.H = tuple(sorted(out))
        self.index = {x: i for i, x in enumerate(self.H)}

    @cached_property
    def pair_types(self) -> dict:
        Y = self.Y
        return {(i, j): qf_type(a + b, Y.relations, Y.arity) for i, a in enumerate(self.H) for j, b in enumerate(self.H)}

    @cached_property
    def translations(self) -> list:
        """Index quadruples (i1, i2, i3, i4) with some f mapping h1, h2 onto h3, h4."""
        out = set()
        H, ix = self.H, self.index
        for i, a in enumerate(H):
            for j, b in enumerate(H):
                U = frozenset(a) | frozenset(b)
                for f in self.Y.F.covering(U):
                    if self.fix and not is_identity_on(f, self.fix):
                        continue
                    d = dict(f)
                    c = ix.get(tuple(d[x] for x in a))
                    e = ix.get(tuple(d[x] for x in b))
                    if c is not None and e is not None:
                        out.add((i, j, c, e))
        return sorted(out)

    def star_violation(self, rel):
        for i, j, c, e in self.translations:
            if rel(i, j) != rel(c, e):
                return (self.H[i], self.H[j], self.H[c], self.H[e])
        return None


def _classes(n: int, rel) -> list[int]:
    reps: list[int] = []
    cls = []
    for i in range(n):
        for ci, r in enumerate(reps):
            if rel(i, r):
                cls.append(ci)
                break
        else:
            cls.append(len(reps))
            reps.append(i)
    return cls


def _is_equivalence(n: int, rel) -> bool:
    if not all(rel(i, i) for i in range(n)):
        return False
    for i in range(n):
        for j in range(n):
            if rel(i, j) != rel(j, i):
                return False
    cls = _classes(n, rel)
    return all(rel(i, j) == (cls[i] == cls[j]) for i in range(n) for j in range(n))


def outcome(Y: KSystem, orbit: _Orbit, rel) -> dict:
    """Which (beta) alternatives hold for the equivalence rel on H_h."""
    H, h = orbit.H, orbit.h
    m = len(h)
    cls = _classes(len(H), rel)
    n_classes = len(set(cls))
    working = []
    for r in range(m + 1):
        for u in itertools.combinations(range(m), r):
            if frozenset(h[i] for i in u) not in Y.I:
                continue
            groups: dict = {}
            ok = True
            for idx, x in enumerate(H):
                key = tuple(x[i] for i in u)
                c = groups.setdefault(key, cls[idx])
                if c != cls[idx]:
                    ok = False
                    break
            if ok:
                working.append(u)
    beta2 = n_classes > Y.threshold
    return {"classes": n_classes, "beta1": tuple(working), "beta2": beta2, "ok": bool(working) or beta2}


def type_orbits(orbit: _Orbit):
    """Reflexive part and swap orbits of the realized pair types."""
    pt = orbit.pair_types
    n = len(orbit.H)
    diag = frozenset(pt[i, i] for i in range(n))
    swap = {}
    for (i, j), t in pt.items():
        swap[t] = pt[j, i]
    others = sorted({t for t in pt.values() if t not in diag}, key=repr)
    seen, groups = set(), []
    for t in others:
        if t in seen:
            continue
        g = frozenset({t, swap[t]})
        seen |= g
        groups.append(g)
    return diag, groups


def definable_equivalences(orbit: _Orbit, limit: int = TYPE_ORBIT_LIMIT):
    """All equivalence relations on H_h that are unions of realized qf pair types.

    Yields (type set, relation).  Every quantifier free formula phi(x, y)
    defines such a union on H_h, so this covers all qf-definable E.
    """
    diag, groups = type_orbits(orbit)
    if len(groups) > limit:
        raise ValueError(f"{len(groups)} realized pair-type orbits exceed the enumeration limit {limit}")
    pt = orbit.pair_types
    n = len(orbit.H)
    triples = None
    if n**3 <= 2_000_000:
        triples = {(pt[a, b], pt[b, c], pt[a, c]) for a in range(n) for b in range(n) for c in range(n)}
    for r in range(len(groups) + 1):
        for chosen in itertools.combinations(groups, r):
            S = frozenset(diag.union(*chosen))

            def rel(i, j, S=S):
                return pt[i, j] in S

            if triples is not None:
                if any(x in S and y in S and z not in S for x, y, z in triples):
                    continue
            elif not _is_equivalence(n, rel):
                continue
            yield S, rel


def set_partitions(items):
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]
        yield [[first]] + part


def _formula_relation(Y: KSystem, orbit: _Orbit, phi, world, ctx):
    m = len(orbit.h)
    xs = [f"x{i + 1}" for i in range(m)]
    ys = [f"y{i + 1}" for i in range(m)]
    if not free_vars(phi) <= set(xs) | set(ys):
        return None
    table = {}
    for i, a in enumerate(orbit.H):
        for j, b in enumerate(orbit.H):
            env = dict(zip(xs, a))
            env.update(zip(ys, b))
            table[i, j] = holds(phi, ctx, env)
    return lambda i, j: table[i, j]


def base_tuples(Y: KSystem):
    """Injective h with Rang(h) in I[s], one per ordering of each range."""
    n = len(Y.M)
    top = max((len(X) for X in Y.I.unions(Y.s)), default=0) if Y.I.kind != "size" else min(n, Y.I.q * Y.s)
    for m in range(1, top + 1):
        for t in itertools.permutations(range(n), m):
            if Y.I.union_of(t, Y.s):
                yield t


def check_dichotomy(Y: KSystem, mode: str = "definable", formulas=None) -> Report:
    """Clause (E): every admissible (h, E) satisfies (beta)_1 or (beta)_2.

    ``mode`` is ``definable`` (E ranges over qf-definable relations: all unions
    of realized pair types, or the supplied ``formulas`` in x1..xm, y1..ym) or
    ``exhaustive`` (all partitions of H_h satisfying (*), for |H_h| <= 8).
    """
    if mode not in ("definable", "exhaustive"):
        raise ValueError(f"unknown dichotomy mode {mode!r}")
    rep = Report(f"dichotomy clause (E), mode={mode}")
    world = ctx = None
    if formulas is not None:
        for phi in formulas:
            if not is_quantifier_free(phi):
                raise ValueError("dichotomy formulas must be quantifier free")
        world = World(Y.M)
        ctx = Context(world, world.atoms)
    done: dict = {}
    checked = failures = star_fail = 0
    first_fail = None
    for h in base_tuples(Y):
        orbit = _Orbit(Y, h)
        key = (len(h), orbit.H)
        if key in done:
            continue
        done[key] = True
        n = len(orbit.H)
        if mode == "exhaustive":
            if n > EXHAUSTIVE_LIMIT:
                raise ValueError(f"exhaustive mode needs |H_h| <= {EXHAUSTIVE_LIMIT}, got {n}")
            rels = []
            for part in set_partitions(range(n)):
                lab = {x: ci for ci, blk in enumerate(part) for x in blk}
                rels.append((part, lambda i, j, lab=lab: lab[i] == lab[j]))
        elif formulas is not None:
            rels = []
            for phi in formulas:
                rel = _formula_relation(Y, orbit, phi, world, ctx)
                if rel is not None and _is_equivalence(n, rel):
                    rels.append((phi, rel))
        else:
            rels = list(definable_equivalences(orbit))
        for label, rel in rels:
            if mode != "definable" or formulas is not None:
                # type-definable relations are F-invariant because F preserves qf types
                if orbit.star_violation(rel) is not None:
                    star_fail += 1
                    continue
            checked += 1
            res = outcome(Y, orbit, rel)
            if not res["ok"]:
                failures += 1
                if first_fail is None:
                    first_fail = {"h": [Y.M.elements[a] for a in h], "orbit_size": n, "classes": res["classes"]}
    rep.add("E", failures == 0, first_fail)
    rep.data.update({"orbits": len(done), "relations_checked": checked, "failed": failures, "star_rejected": star_fail})
    return rep


# -- super systems ------------------------------------------------------------------


def super_bases(Y: KSystem):
    """Pairs (A, h) with A in I[s], h injective, Rang(h) in I and A within Rang(h)."""
    n = len(Y.M)
    top = Y.I.q if Y.I.kind == "size" else max(len(A) for A in Y.I.maximal)
    for m in range(0, min(top, n) + 1):
        for h in itertools.permutations(range(n), m):
            if frozenset(h) not in Y.I:
                continue
            for r in range(m + 1):
                for A in itertools.combinations(sorted(h), r):
                    if Y.I.union_of(A, Y.s):
                        yield frozenset(A), h


def _partition(orbit: _Orbit, rel) -> frozenset:
    cls = _classes(len(orbit.H), rel)
    blocks: dict = {}
    for i, c in enumerate(cls):
        blocks.setdefault(c, []).append(orbit.H[i])
    return frozenset(frozenset(b) for b in blocks.values())


def equivalence_family(Y: KSystem, A, h):
    """E_Y(A, h) as {type set: partition of H_{A,h}} over qf-definable relations."""
    orbit = _Orbit(Y, h, fix=A)
    return orbit, {S: _partition(orbit, rel) for S, rel in definable_equivalences(orbit)}


def check_super(Y: KSystem, include_base: bool = True, dichotomy: bool = True) -> Report:
    """Clause (E)+ (class counts preserved under F) and the induced map on E_Y(A)."""
    rep = Report("super system")
    if include_base:
        rep.extend(check_k_system(Y))
        if dichotomy:
            rep.extend(check_dichotomy(Y))
    fam_cache: dict = {}

    def family(A, h):
        key = (A, h)
        if key not in fam_cache:
            fam_cache[key] = equivalence_family(Y, A, h)
        return fam_cache[key]

    count_fail = hat_fail = None
    pairs = 0
    for A1, h1 in super_bases(Y):
        orbit1, fam1 = family(A1, h1)
        for f in Y.F.covering(frozenset(h1) | A1):
            d = dict(f)
            A2 = frozenset(d[a] for a in A1)
            h2 = tuple(d[a] for a in h1)
            orbit2, fam2 = family(A2, h2)
            pairs += 1
            # f^ sends the relation defined by a type set to the one it defines on the image
            images: dict = {}
            realized2 = frozenset(orbit2.pair_types.values())
            for S, P1 in fam1.items():
                P2 = fam2.get(frozenset(S & realized2))
                if P2 is None:
                    hat_fail = hat_fail or {"A": sorted(A1), "h": h1, "map": f, "reason": "image not in E_Y(A2,h2)"}
                    continue
                if images.setdefault(P1, P2) != P2:
                    hat_fail = hat_fail or {"A": sorted(A1), "h": h1, "map": f, "reason": "not well defined"}
                if len(P1) != len(P2):
                    count_fail = count_fail or {"A1": sorted(A1), "h1": h1, "A2": sorted(A2), "h2": h2, "classes": (len(P1), len(P2))}
            targets = set(images.values())
            if len(targets) != len(images) or targets != set(fam2.values()):
                hat_fail = hat_fail or {"A": sorted(A1), "h": h1, "map": f, "reason": "not a bijection onto E_Y(A2,h2)"}
    rep.add("E+", count_fail is None, count_fail)
    rep.add("hat-map", hat_fail is None, hat_fail)
    rep.data["super_pairs"] = pairs
    return rep
