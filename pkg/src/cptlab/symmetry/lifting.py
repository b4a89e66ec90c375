"""Liftings (N, c, G, R) of a k-system to a stage universe, and their successors.

G maps each f in F to a partial automorphism of N given as a dict on handles;
R is a set of pairs (A, y) read as "A supports y".
"""
from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property

from ..logic.evaluate import World, context_for, holds
from ..logic.formula import free_vars, max_subformula_free_vars
from ..scheme import Candidate, InductiveScheme, initial_candidate, metrics, successor
from .maps import dom, image, inverse, is_identity_on, restrict
from .report import Report
from .system import KSystem

MAX_CLASSES = 16


class LiftingError(ValueError):
    pass


@dataclass
class Lifting:
    Y: KSystem
    N: Candidate
    G: dict
    R: frozenset
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def store(self):
        return self.N.world.store

    @cached_property
    def universe(self) -> tuple:
        return tuple(sorted(self.N.universe))

    @cached_property
    def supports(self) -> dict:
        out = defaultdict(list)
        for A, y in self.R:
            out[y].append(A)
        return {y: sorted(v, key=lambda s: (len(s), sorted(s))) for y, v in out.items()}

    # -- support classes ---------------------------------------------------------

    def a_classes(self, A) -> dict:
        """Partition of N into classes of y ~ G(f)(y) over f fixing A with A, B inside dom(f), B R y."""
        A = frozenset(A)
        key = ("classes", A)
        if key in self._cache:
            return self._cache[key]
        parent = {y: y for y in self.universe}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for g in self.Y.F.maximal_maps:
            if not A <= dom(g) or not is_identity_on(g, A):
                continue
            Gg = self.G[g]
            D = dom(g)
            for y, Bs in self.supports.items():
                if y in Gg and any(B <= D for B in Bs):
                    z = Gg[y]
                    if z in parent:
                        ry, rz = find(y), find(z)
                        if ry != rz:
                            parent[ry] = rz
        label = {y: find(y) for y in self.universe}
        self._cache[key] = label
        return label

    def supports_set(self, A, X) -> bool:
        """A supports X: X is a union of A-classes."""
        label = self.a_classes(A)
        inside = {label[y] for y in X}
        return all((label[y] in inside) == (y in X) for y in self.universe)

    def set_supports(self, X) -> list:
        return [A for A in _members_sorted(self.Y.I) if self.supports_set(A, X)]

    def in_N(self, X) -> bool:
        h = self.store.lookup_set(X)
        return h is not None and h in self.N.universe

    # -- G+ ------------------------------------------------------------------------

    def _extensions(self, r):
        """Maximal maps of F extending r."""
        key = ("ext", r)
        if key not in self._cache:
            self._cache[key] = [g for g in self.Y.F.maximal_maps if all(dict(g).get(a) == b for a, b in r)]
        return self._cache[key]

    def lift(self, f, X, A=None) -> frozenset:
        X = frozenset(X)
        if A is None:
            D = dom(f)
            A = next((B for B in self.set_supports(X) if B <= D), None)
            if A is None:
                raise LiftingError("no support of X inside dom(f)")
        elif not frozenset(A) <= dom(f):
            raise LiftingError("support not contained in dom(f)")
        r = restrict(f, A)
        out = set()
        for g in self._extensions(r):
            Gg = self.G[g]
            out.update(Gg[y] for y in X if y in Gg)
        return frozenset(out)


def _members_sorted(I):
    return sorted(I.members, key=lambda s: (len(s), sorted(s)))


def zero_lifting(Y: KSystem, u: InductiveScheme | None = None) -> Lifting:
    world = World(Y.M)
    cand = initial_candidate(Y.M, u, world)
    G = {f: dict(f) for f in Y.F}
    R = frozenset((A, a) for A in Y.I.members for a in A)
    return Lifting(Y, cand, G, R)


# -- checking the lifting clauses ---------------------------------------------------------


def check_lifting(Z: Lifting) -> Report:
    rep = Report("lifting clauses (a)-(k)")
    Y, N, store = Z.Y, Z.N, Z.store
    U = N.universe
    atoms = frozenset(N.world.atoms)
    # (a)
    trans = store.is_transitive(U)
    atoms_ok = atoms <= U and all(not store.is_atom(y) for y in U - atoms)
    c_ok = all(c is None or c in U or store.members(c) <= U for c in N.c)
    rep.add("a", trans and atoms_ok and c_ok, None if trans and atoms_ok and c_ok else {"transitive": trans, "atoms": atoms_ok, "constants": c_ok})
    # (b)
    rep.add("b", set(Z.G) == set(Y.F.maps), None if set(Z.G) == set(Y.F.maps) else "domain of G differs from F")
    # (c)
    bad = None
    for f in Y.F:
        Gf = Z.G.get(f, {})
        if any(Gf.get(a) != b for a, b in f):
            bad = {"map": f, "reason": "f not contained in G(f)"}
            break
        if len(set(Gf.values())) != len(Gf) or not set(Gf) <= U or not set(Gf.values()) <= U:
            bad = {"map": f, "reason": "G(f) not injective on N"}
            break
        if any(store.is_atom(x) != store.is_atom(y) for x, y in Gf.items()) or any(
            x in atoms and Gf[x] != dict(f).get(x) for x in Gf
        ):
            bad = {"map": f, "reason": "G(f) moves atoms outside f"}
            break
        sets = [x for x in Gf if not store.is_atom(x)]
        for x in sets:
            mx, my = store.members(x), store.members(Gf[x])
            if any((y in mx) != (Gf[y] in my) for y in Gf):
                bad = {"map": f, "reason": "membership not preserved", "set": store.format(x)}
                break
        if bad:
            break
    rep.add("c", bad is None, bad)
    # (d)
    bad = None
    for g in Y.F:
        Gg = Z.G.get(g, {})
        for r in range(len(g)):
            for sub in itertools.combinations(g, r):
                if sub in Y.F.maps and any(Gg.get(y) != z for y, z in Z.G.get(sub, {}).items()):
                    bad = {"f": sub, "g": g}
                    break
            if bad:
                break
        if bad:
            break
    rep.add("d", bad is None, bad)
    # (e)
    bad = next(((sorted(A), y) for A, y in Z.R if A not in Y.I or y not in U), None)
    rep.add("e", bad is None, bad)
    # (f)
    bad = None
    for f in Y.F:
        Gf, D = Z.G.get(f, {}), dom(f)
        for A, y in Z.R:
            if A <= D:
                if y not in Gf:
                    bad = {"map": f, "A": sorted(A), "y": store.format(y), "reason": "not in domain"}
                elif is_identity_on(f, A) and Gf[y] != y:
                    bad = {"map": f, "A": sorted(A), "y": store.format(y), "reason": "not fixed"}
                if bad:
                    break
        if bad:
            break
    rep.add("f", bad is None, bad)
    # (g)
    bad = next((store.format(y) for y in Z.universe if y not in Z.supports), None)
    rep.add("g", bad is None, bad)
    # (h)
    bad = None
    members = _members_sorted(Y.I)
    for f in Y.F:
        Gf, D = Z.G.get(f, {}), dom(f)
        for A in members:
            if not A <= D:
                continue
            fA = image(f, A)
            for y, z in Gf.items():
                if ((A, y) in Z.R) != ((fA, z) in Z.R):
                    bad = {"map": f, "A": sorted(A), "y": store.format(y)}
                    break
            if bad:
                break
        if bad:
            break
    rep.add("h", bad is None, bad)
    # (i)
    bad = None
    for f in Y.F:
        inv = {v: k for k, v in Z.G.get(f, {}).items()}
        if Z.G.get(inverse(f)) != inv:
            bad = f
            break
    rep.add("i", bad is None, bad)
    # (j): by (d) and restriction closure it suffices to take ran(f1) = dom(f2)
    bad = None
    for S, f1s in Y.F.by_ran.items():
        for f2 in Y.F.by_dom.get(S, ()):
            G2 = Z.G.get(f2, {})
            for f1 in f1s:
                G1 = Z.G.get(f1, {})
                comp = tuple((a, dict(f2)[b]) for a, b in f1)
                for y, z in Z.G.get(comp, {}).items():
                    if G2.get(G1.get(y)) != z:
                        bad = {"f1": f1, "f2": f2, "y": store.format(y)}
                        break
                if bad:
                    break
            if bad:
                break
        if bad:
            break
    if not Y.F.restriction_closed and bad is None:
        for f1 in Y.F:
            for f2 in Y.F:
                comp = tuple((a, dict(f2)[b]) for a, b in f1 if b in dict(f2))
                G1, G2 = Z.G.get(f1, {}), Z.G.get(f2, {})
                if any(G2.get(G1.get(y)) != z for y, z in Z.G.get(comp, {}).items()):
                    bad = {"f1": f1, "f2": f2}
                    break
            if bad:
                break
    rep.add("j", bad is None, bad)
    # (k)
    bad = None
    for f in Y.F:
        Gf = Z.G.get(f, {})
        for li, c in enumerate(N.c):
            if c is not None and c in Gf and Gf[c] != c:
                bad = {"map": f, "constant": li}
                break
        if bad:
            break
    rep.add("k", bad is None, bad)
    return rep


# -- good sets and successors -----------------------------------------------------------


def good_sets(Z: Lifting, max_classes: int = MAX_CLASSES, candidates=None) -> list:
    """Good subsets of N with their supports, as (frozenset, [A, ...]).

    For each A in I the sets supported by A are the unions of A-classes, so
    they are enumerated directly; explicit ``candidates`` may be given instead.
    """
    found: dict = {}
    if candidates is not None:
        for X in candidates:
            X = frozenset(X)
            if X <= Z.N.universe and not Z.in_N(X):
                sup = Z.set_supports(X)
                if sup:
                    found[X] = sup
        return sorted(found.items(), key=lambda p: (len(p[0]), sorted(p[0])))
    for A in _members_sorted(Z.Y.I):
        label = Z.a_classes(A)
        classes: dict = defaultdict(set)
        for y, c in label.items():
            classes[c].add(y)
        blocks = sorted((frozenset(b) for b in classes.values()), key=sorted)
        if len(blocks) > max_classes:
            raise ValueError(f"{len(blocks)} classes for support {sorted(A)} exceed max_classes={max_classes}")
        for r in range(len(blocks) + 1):
            for chosen in itertools.combinations(blocks, r):
                X = frozenset().union(*chosen)
                if X in found or Z.in_N(X):
                    continue
                found[X] = None
    out = []
    for X in sorted(found, key=lambda s: (len(s), sorted(s))):
        out.append((X, Z.set_supports(X)))
    return out


def lift_map(Z: Lifting, f, X, A=None) -> frozenset:
    """G+(f)(X) for a good X with a support inside dom(f)."""
    return Z.lift(f, X, A)


def good_orbit(Z: Lifting, X, supports=None) -> set:
    """All G+(f)(X), f in F with a support of X inside dom(f)."""
    X = frozenset(X)
    supports = supports if supports is not None else Z.set_supports(X)
    out = set()
    for A in supports:
        for f in Z.Y.F.covering(A):
            out.add(Z.lift(f, X, A))
    return out


def good_equiv(Z: Lifting, X1, X2) -> bool:
    return frozenset(X2) in good_orbit(Z, X1)


def _extend(Z: Lifting, new_sets: list, c=None) -> Lifting:
    """Add the given good sets and extend G and R accordingly."""
    store = Z.store
    handles = {}
    sup_of = {}
    for X in new_sets:
        X = frozenset(X)
        h = store.intern_set(X)
        handles[X] = h
        sup_of[X] = Z.set_supports(X)
    universe = Z.N.universe | frozenset(handles.values())
    R = set(Z.R)
    for X, h in handles.items():
        R.update((A, h) for A in sup_of[X])
    G = {}
    for f in Z.Y.F:
        Gf = dict(Z.G[f])
        D = dom(f)
        for X, h in handles.items():
            A = next((B for B in sup_of[X] if B <= D), None)
            if A is None:
                continue
            img = Z.lift(f, X, A)
            hi = store.lookup_set(img)
            if hi is not None and hi in universe:
                Gf[h] = hi
        G[f] = Gf
    cand = Candidate(universe, Z.N.c if c is None else c, Z.N.history, Z.N.world)
    return Lifting(Z.Y, cand, G, frozenset(R))


def full_successor(Z: Lifting, t_fun=None, max_classes: int = MAX_CLASSES) -> Lifting:
    """Add every good set whose E-class has at most t(|M|) members."""
    t_fun = t_fun if t_fun is not None else Z.Y.t_fun
    bound = t_fun(len(Z.Y.M))
    good = good_sets(Z, max_classes)
    keep = []
    for X, sup in good:
        if len(good_orbit(Z, X, sup)) <= bound:
            keep.append(X)
    return _extend(Z, keep)


def true_successor(Z: Lifting, u: InductiveScheme, t_fun=None) -> Lifting:
    """The lifting over the scheme's own successor stage."""
    Y = Z.Y
    t_fun = t_fun if t_fun is not None else Y.t_fun
    _, fv = metrics(u)
    worst = max((max_subformula_free_vars(f) for f in u.formulas()), default=0)
    if fv > Y.s or worst > Y.k or Y.k < 3:
        raise LiftingError(f"scheme bounds m_fv={fv}, free={worst} not within k={Y.k}, s={Y.s} (k >= 3 needed)")
    nxt = successor(Z.N, u, t_fun)
    store = Z.store
    new = [store.members(h) for h in sorted(nxt.universe - Z.N.universe)]
    new_set = set(new)
    for X in new:
        sup = Z.set_supports(X)
        if not sup:
            raise LiftingError(f"new set {store.format(store.lookup_set(X))} has no support in I")
        missing = [Xo for Xo in good_orbit(Z, X, sup) if Xo not in new_set]
        if missing:
            raise LiftingError(f"new sets are not closed under the class relation E: {len(missing)} missing")
    out = _extend(Z, new, c=nxt.c)
    out.N = Candidate(out.N.universe, nxt.c, nxt.history, Z.N.world)
    return out


# -- preservation ------------------------------------------------------------------------


class _TypeOracle:
    def __init__(self, Z: Lifting):
        self.Z = Z
        self.store = Z.store
        self.rels = Z.N.world.relations
        self.arity = dict(Z.Y.M.vocab.predicates)
        self.c = Z.N.c
        self.h = Z.N.history or ()
        self._qf = {}
        self._prof = {}

    def qf(self, t) -> tuple:
        if t in self._qf:
            return self._qf[t]
        st = self.store
        first: dict = {}
        pattern = tuple(first.setdefault(x, len(first)) for x in t)
        reps = list(first)
        mem = tuple((i, j) for i, a in enumerate(reps) for j, b in enumerate(reps) if a in st.members(b))
        atom = tuple(st.is_atom(x) for x in reps)
        dyn = tuple(tuple(x == c for c in self.c) + tuple(x == c for c in self.h) for x in reps)
        rel = []
        for p in sorted(self.arity):
            for idx in itertools.product(range(len(reps)), repeat=self.arity[p]):
                if tuple(reps[i] for i in idx) in self.rels[p]:
                    rel.append((p, idx))
        out = (pattern, mem, atom, dyn, tuple(rel))
        self._qf[t] = out
        return out

    def profile(self, t) -> frozenset:
        """Types of t extended by one more element of N: fixes every depth-one formula about t."""
        if t not in self._prof:
            self._prof[t] = frozenset(self.qf(t + (b,)) for b in self.Z.universe)
        return self._prof[t]


def preservation_check(Z: Lifting, phi=None, max_free: int = 3) -> Report:
    """Satisfaction is invariant under each G(f) on tuples from its domain.

    Covers every quantifier free formula and every formula of quantifier
    depth one in at most ``max_free`` free variables, and a given formula
    ``phi`` if supplied.  Maximal maps suffice because G is
    monotone (clause (d)).
    """
    rep = Report("preservation under lifted maps")
    oracle = _TypeOracle(Z)
    maps = Z.Y.F.maximal_maps
    bad_qf = bad_d1 = bad_phi = None
    ctx = None
    if phi is not None:
        fv = sorted(free_vars(phi))
        if len(fv) > max_free:
            raise ValueError(f"formula has {len(fv)} free variables, profile allows {max_free}")
        ctx = context_for(_View(Z), None)
    for f in maps:
        Gf = Z.G[f]
        D = sorted(Gf)
        if bad_qf is None:
            for r in range(1, max_free + 1):
                for S in itertools.combinations(D, r):
                    if oracle.qf(S) != oracle.qf(tuple(Gf[x] for x in S)):
                        bad_qf = {"map": f, "tuple": [Z.store.format(x) for x in S]}
                        break
                if bad_qf:
                    break
        if bad_d1 is None:
            for r in range(1, max_free + 1):
                for S in itertools.combinations(D, r):
                    if oracle.profile(S) != oracle.profile(tuple(Gf[x] for x in S)):
                        bad_d1 = {"map": f, "tuple": [Z.store.format(x) for x in S]}
                        break
                if bad_d1:
                    break
        if phi is not None and bad_phi is None:
            for vals in itertools.product(D, repeat=len(fv)):
                env = dict(zip(fv, vals))
                env2 = {v: Gf[x] for v, x in env.items()}
                if holds(phi, ctx, env) != holds(phi, ctx, env2):
                    bad_phi = {"map": f, "assignment": {v: Z.store.format(x) for v, x in env.items()}}
                    break
    rep.add("quantifier-free", bad_qf is None, bad_qf)
    rep.add("depth-1", bad_d1 is None, bad_d1)
    if phi is not None:
        rep.add("formula", bad_phi is None, bad_phi)
    rep.data["maps_checked"] = len(maps)
    return rep


@dataclass(frozen=True)
class _ViewData:
    universe: tuple
    c: tuple
    history: tuple
    world: object


def _View(Z: Lifting):
    return _ViewData(Z.universe, Z.N.c, Z.N.history, Z.N.world)
