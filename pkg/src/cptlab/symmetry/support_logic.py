"""The block logic L_{k,alpha} over support families, and its back-and-forth game.

Formulas bind whole blocks of variables; a block ranges over sequences whose
range is a member of the support family of the structure.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..logic.evaluate import Context, World, holds
from ..logic.formula import Eq, Not, Rel, Truth, Var, free_vars, is_quantifier_free, to_text
from ..logic.structure import Structure
from .maps import PartialMapFamily, SupportFamily, extension_cover, restrict


class SupportLogicError(ValueError):
    pass


@dataclass(frozen=True)
class SQF:
    formula: object


@dataclass(frozen=True)
class SNot:
    body: object


@dataclass(frozen=True)
class SAnd:
    parts: tuple


@dataclass(frozen=True)
class SOr:
    parts: tuple


@dataclass(frozen=True)
class SExists:
    block: tuple
    body: object


def SForall(block, body):
    return SNot(SExists(tuple(block), SNot(body)))


def sfree(phi) -> frozenset:
    if isinstance(phi, SQF):
        return free_vars(phi.formula)
    if isinstance(phi, SNot):
        return sfree(phi.body)
    if isinstance(phi, (SAnd, SOr)):
        return frozenset().union(*(sfree(p) for p in phi.parts))
    if isinstance(phi, SExists):
        return sfree(phi.body) - set(phi.block)
    raise TypeError(f"not a support logic formula: {phi!r}")


def depth(phi) -> int:
    """The alpha of the least L_{k,alpha} containing phi."""
    if isinstance(phi, SQF):
        return 0
    if isinstance(phi, SNot):
        return depth(phi.body)
    if isinstance(phi, (SAnd, SOr)):
        return max((depth(p) for p in phi.parts), default=0)
    return depth(phi.body) + 1


def width(phi, blocks=()) -> int:
    """Largest number of blocks any subformula mentions freely."""
    blocks = [tuple(b) for b in blocks]

    def go(f, bl):
        fv = sfree(f)
        here = sum(1 for b in bl if fv & set(b))
        if isinstance(f, SQF):
            return here
        if isinstance(f, SNot):
            return max(here, go(f.body, bl))
        if isinstance(f, (SAnd, SOr)):
            return max([here] + [go(p, bl) for p in f.parts])
        inner = [b for b in bl if not set(b) & set(f.block)] + [tuple(f.block)]
        return max(here, go(f.body, inner))

    return go(phi, blocks)


def to_str(phi) -> str:
    if isinstance(phi, SQF):
        return to_text(phi.formula)
    if isinstance(phi, SNot):
        return f"!{to_str(phi.body)}"
    if isinstance(phi, SAnd):
        return "(" + " & ".join(to_str(p) for p in phi.parts) + ")" if phi.parts else "true"
    if isinstance(phi, SOr):
        return "(" + " | ".join(to_str(p) for p in phi.parts) + ")" if phi.parts else "false"
    return f"exists [{','.join(phi.block)}] {to_str(phi.body)}"


def sequences(I: SupportFamily, n: int, length: int):
    """Seq*: sequences of the given length whose range is in I."""
    for t in itertools.product(range(n), repeat=length):
        if frozenset(t) in I:
            yield t


def support_logic_sat(M: Structure, I: SupportFamily, phi, blocks=(), k: int | None = None) -> bool:
    """M |= phi[blocks], blocks being (variables, values) with values in Seq*_I(M)."""
    ix = M.index
    env = {}
    seen = set()
    for vars_, vals in blocks:
        vars_ = tuple(vars_)
        vals = tuple(ix[v] if isinstance(v, str) else v for v in vals)
        if len(vars_) != len(vals):
            raise SupportLogicError("block length mismatch")
        if seen & set(vars_):
            raise SupportLogicError("blocks must be pairwise disjoint")
        seen |= set(vars_)
        if frozenset(vals) not in I:
            raise SupportLogicError(f"block range {sorted(M.elements[v] for v in vals)} is not in the support family")
        env.update(zip(vars_, vals))
    if k is not None and width(phi, [b for b, _ in blocks]) > k:
        raise SupportLogicError(f"formula uses more than {k} blocks")
    world = World(M)
    ctx = Context(world, world.atoms)
    n = len(M)

    def sat(f, env):
        if isinstance(f, SQF):
            return holds(f.formula, ctx, env)
        if isinstance(f, SNot):
            return not sat(f.body, env)
        if isinstance(f, SAnd):
            return all(sat(p, env) for p in f.parts)
        if isinstance(f, SOr):
            return any(sat(p, env) for p in f.parts)
        for t in sequences(I, n, len(f.block)):
            e = dict(env)
            e.update(zip(f.block, t))
            if sat(f.body, e):
                return True
        return False

    for f in _qf_parts(phi):
        if not is_quantifier_free(f):
            raise SupportLogicError("atomic parts must be quantifier free")
    return sat(phi, env)


def _qf_parts(phi):
    if isinstance(phi, SQF):
        yield phi.formula
    elif isinstance(phi, SNot):
        yield from _qf_parts(phi.body)
    elif isinstance(phi, (SAnd, SOr)):
        for p in phi.parts:
            yield from _qf_parts(p)
    else:
        yield from _qf_parts(phi.body)


# -- the game ------------------------------------------------------------------------------


@dataclass
class GameResult:
    equivalent: bool
    family: PartialMapFamily | None
    formula: object = None
    rounds: int = 0

    def __iter__(self):
        yield self.equivalent
        yield self.family if self.equivalent else self.formula


def _initial(M1, M2, I1, I2, k):
    from .maps import all_partial_isomorphisms

    top = max((len(A) for A in I1.maximal), default=0) * k
    out = []
    for f in all_partial_isomorphisms(M1, M2, top):
        if I1.union_of([a for a, _ in f], k) and I2.union_of([b for _, b in f], k):
            out.append(f)
    return out


def _survivors(F: set, M1, M2, I1, I2, k):
    fam = PartialMapFamily(F, M1, M2)
    inv = fam.inverse_family()
    fwd = extension_cover(fam, I1, k - 1)
    back = extension_cover(inv, I2, k - 1)
    max1, max2 = I1.maximal, I2.maximal
    keep = set()
    for f in F:
        ok = True
        for U in I1.subsets_in_union([a for a, _ in f], k - 1):
            have = fwd.get(restrict(f, U), ())
            if any(A not in have for A in max1):
                ok = False
                break
        if ok:
            g = tuple(sorted((b, a) for a, b in f))
            for V in I2.subsets_in_union([b for b, _ in g], k - 1):
                have = back.get(restrict(g, V), ())
                if any(B not in have for B in max2):
                    ok = False
                    break
        if ok:
            keep.add(f)
    return keep


def support_game_equiv(M1: Structure, M2: Structure, I1: SupportFamily, I2: SupportFamily, k: int, depth: int | None = None) -> GameResult:
    """Decide agreement on all L_{k,alpha} sentences (alpha <= depth, or all alpha).

    Computes the approximants F_0 > F_1 > ... of the greatest family with the
    back-and-forth property; the structures agree iff the empty map survives.
    On failure a distinguishing sentence is extracted from the refutation.
    """
    if M1.vocab != M2.vocab:
        raise ValueError("structures have different vocabularies")
    if k < 1:
        raise ValueError("k must be at least 1")
    levels = [set(_initial(M1, M2, I1, I2, k))]
    rounds = 0
    while depth is None or rounds < depth:
        nxt = _survivors(levels[-1], M1, M2, I1, I2, k)
        rounds += 1
        if nxt == levels[-1]:
            break
        levels.append(nxt)
        if () not in nxt:
            break
    final = levels[-1]
    if () in final:
        return GameResult(True, PartialMapFamily(final, M1, M2), None, rounds)
    formula = _Refuter(M1, M2, I1, I2, k, levels).sentence()
    return GameResult(False, None, formula, rounds)


class _Refuter:
    def __init__(self, M1, M2, I1, I2, k, levels):
        self.M1, self.M2, self.I1, self.I2, self.k = M1, M2, I1, I2, k
        self.levels = levels
        self.r1 = M1.indexed_relations()
        self.r2 = M2.indexed_relations()
        self.arity = dict(M1.vocab.predicates)
        self.fresh = 0

    def sentence(self):
        alpha = next(a for a, F in enumerate(self.levels) if () not in F)
        return self.dist(alpha, ())

    def _var(self):
        self.fresh += 1
        return f"y{self.fresh}"

    def _literal(self, triples):
        """A qf formula true of the left tuple and false of the right one, or None."""
        names = [v for v, _, _ in triples]
        left = [a for _, a, _ in triples]
        right = [b for _, _, b in triples]
        for i, j in itertools.combinations(range(len(triples)), 2):
            if (left[i] == left[j]) != (right[i] == right[j]):
                atom = Eq(Var(names[i]), Var(names[j]))
                return SQF(atom if left[i] == left[j] else Not(atom))
        for p, r in sorted(self.arity.items()):
            for idx in itertools.product(range(len(triples)), repeat=r):
                t1 = tuple(left[i] for i in idx) in self.r1[p]
                t2 = tuple(right[i] for i in idx) in self.r2[p]
                if t1 != t2:
                    atom = Rel(p, tuple(Var(names[i]) for i in idx))
                    return SQF(atom if t1 else Not(atom))
        return None

    def dist(self, alpha, triples):
        lit = self._literal(triples)
        if lit is not None:
            return lit
        f = tuple(sorted({(a, b) for _, a, b in triples}))
        if alpha == 0 or f in self.levels[alpha]:
            return None
        prev = alpha - 1
        M1, M2, I1, I2, k = self.M1, self.M2, self.I1, self.I2, self.k
        by_a = {}
        for v, a, b in triples:
            by_a.setdefault(a, (v, a, b))
        # forth
        for U in I1.subsets_in_union([a for a, _ in f], k - 1):
            kept = [by_a[a] for a in sorted(U)]
            for A in I1.maximal:
                block = tuple(self._var() for _ in A)
                parts = []
                ok = True
                for bs in sequences(I2, len(M2), len(A)):
                    new = kept + [(v, a, b) for v, a, b in zip(block, sorted(A), bs)]
                    d = self.dist(prev, new)
                    if d is None:
                        ok = False
                        break
                    parts.append(d)
                if ok:
                    return SExists(block, SAnd(tuple(dict.fromkeys(parts))))
        # back: a sentence true on the right; negate it
        by_b = {}
        for v, a, b in triples:
            by_b.setdefault(b, (v, a, b))
        for V in I2.subsets_in_union([b for _, b in f], k - 1):
            kept = [by_b[b] for b in sorted(V)]
            for B in I2.maximal:
                block = tuple(self._var() for _ in B)
                parts = []
                ok = True
                for as_ in sequences(I1, len(M1), len(B)):
                    new = kept + [(v, a, b) for v, a, b in zip(block, as_, sorted(B))]
                    d = self.dist(prev, new)
                    if d is None:
                        ok = False
                        break
                    parts.append(d)
                if ok:
                    return SForall(block, SOr(tuple(dict.fromkeys(parts))))
        return None


def truth():
    return SQF(Truth(True))
