"""Evaluation of formulas over a candidate stage.

Formulas are compiled once into nested closures ``fn(ctx, env) -> bool``; the
context carries the stage universe, the interpretation of tau over atom
handles, the dynamic constants, and the counting threshold.
"""
from __future__ import annotations

import math
from functools import lru_cache

from ..hfs import SetHandle, UniverseStore
from .formula import (
    And,
    App,
    Card,
    Const,
    CountQ,
    Dyn,
    Eq,
    Exists,
    Forall,
    Iff,
    Implies,
    In,
    IsAtom,
    Not,
    Or,
    Rel,
    Truth,
    Var,
    free_vars,
)
from .structure import Structure


class EvaluationError(ValueError):
    pass


class World:
    """A structure whose elements are interned as atoms of a fresh store.

    Atom handle i is element i of the structure.
    """

    def __init__(self, structure: Structure, store: UniverseStore | None = None):
        self.structure = structure
        self.store = store if store is not None else UniverseStore()
        if len(self.store):
            raise ValueError("World needs an empty store")
        self.atoms = tuple(self.store.intern_atom(e) for e in structure.elements)
        self.relations = structure.indexed_relations()
        ix = structure.index
        self.functions = {
            f: {tuple(ix[a] for a in args): ix[v] for args, v in table.items()}
            for f, table in structure.functions.items()
        }
        self.constants = {c: ix[e] for c, e in structure.constants.items()}

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)


class Context:
    __slots__ = ("world", "store", "universe", "universe_set", "members", "is_atom", "dyn", "hist", "threshold")

    def __init__(self, world: World, universe, dyn=(), hist=(), threshold=math.inf):
        self.world = world
        self.store = world.store
        self.universe = tuple(universe)
        self.universe_set = frozenset(self.universe)
        self.members = world.store.members
        self.is_atom = world.store.is_atom
        self.dyn = tuple(dyn)
        self.hist = tuple(hist)
        self.threshold = threshold


def context_for(cand, t_fun=None) -> Context:
    """Build an evaluation context from a candidate-like object."""
    world = cand.world
    threshold = math.inf if t_fun is None else t_fun(world.n_atoms)
    return Context(world, cand.universe, cand.c, getattr(cand, "history", ()) or (), threshold)


def _compile_term(t):
    if isinstance(t, Var):
        name = t.name

        def var(ctx, env):
            return env[name]

        return var
    if isinstance(t, Const):
        name = t.name
        return lambda ctx, env: ctx.world.constants[name]
    if isinstance(t, App):
        fn = t.fn
        args = [_compile_term(a) for a in t.args]

        def app(ctx, env):
            vals = tuple(a(ctx, env) for a in args)
            if any(v is None or not ctx.is_atom(v) for v in vals):
                return None
            return ctx.world.functions[fn].get(vals)

        return app
    raise TypeError(f"not a term: {t!r}")


@lru_cache(maxsize=4096)
def compile_formula(f):
    """Compile a formula into ``fn(ctx, env) -> bool``."""
    if isinstance(f, Truth):
        v = f.value
        return lambda ctx, env: v
    if isinstance(f, Rel):
        pred = f.pred
        simple = all(isinstance(a, Var) for a in f.args)
        if simple:
            names = tuple(a.name for a in f.args)

            def rel_vars(ctx, env):
                vals = tuple(env[n] for n in names)
                return vals in ctx.world.relations[pred]

            # non-atoms never appear in relation tuples, so membership suffices
            return rel_vars
        args = [_compile_term(a) for a in f.args]

        def rel(ctx, env):
            vals = tuple(a(ctx, env) for a in args)
            if any(v is None for v in vals):
                return False
            return vals in ctx.world.relations[pred]

        return rel
    if isinstance(f, Eq):
        if isinstance(f.left, Var) and isinstance(f.right, Var):
            a, b = f.left.name, f.right.name
            return lambda ctx, env: env[a] == env[b]
        lt, rt = _compile_term(f.left), _compile_term(f.right)

        def eq(ctx, env):
            x, y = lt(ctx, env), rt(ctx, env)
            return x is not None and x == y

        return eq
    if isinstance(f, In):
        lt, rt = _compile_term(f.left), _compile_term(f.right)

        def member(ctx, env):
            x, y = lt(ctx, env), rt(ctx, env)
            if x is None or y is None:
                return False
            return x in ctx.members(y)

        return member
    if isinstance(f, IsAtom):
        tt = _compile_term(f.term)

        def is_atom(ctx, env):
            x = tt(ctx, env)
            return x is not None and ctx.is_atom(x)

        return is_atom
    if isinstance(f, Dyn):
        tt = _compile_term(f.term)
        idx, hist = f.index, f.history

        def dyn(ctx, env):
            vals = ctx.hist if hist else ctx.dyn
            if idx >= len(vals):
                if hist and not vals:
                    return False
                raise EvaluationError(f"unknown dynamic predicate {'HP' if hist else 'DP'}{idx}")
            c = vals[idx]
            x = tt(ctx, env)
            return c is not None and x == c

        return dyn
    if isinstance(f, Not):
        b = compile_formula(f.body)
        return lambda ctx, env: not b(ctx, env)
    if isinstance(f, And):
        l, r = compile_formula(f.left), compile_formula(f.right)
        return lambda ctx, env: l(ctx, env) and r(ctx, env)
    if isinstance(f, Or):
        l, r = compile_formula(f.left), compile_formula(f.right)
        return lambda ctx, env: l(ctx, env) or r(ctx, env)
    if isinstance(f, Implies):
        l, r = compile_formula(f.left), compile_formula(f.right)
        return lambda ctx, env: (not l(ctx, env)) or r(ctx, env)
    if isinstance(f, Iff):
        l, r = compile_formula(f.left), compile_formula(f.right)
        return lambda ctx, env: l(ctx, env) == r(ctx, env)
    if isinstance(f, (Exists, Forall, CountQ, Card)):
        x = f.var
        body = compile_formula(f.body)
        want = isinstance(f, Exists)

        if isinstance(f, (Exists, Forall)):

            def quant(ctx, env):
                saved = env.get(x, _MISSING)
                try:
                    for h in ctx.universe:
                        env[x] = h
                        if body(ctx, env) == want:
                            return want
                    return not want
                finally:
                    _restore(env, x, saved)

            return quant

        counting = isinstance(f, CountQ)
        size = None if counting else f.size

        def count(ctx, env):
            saved = env.get(x, _MISSING)
            limit = ctx.threshold if counting else size
            n = 0
            try:
                for h in ctx.universe:
                    env[x] = h
                    if body(ctx, env):
                        n += 1
                        if n > limit:
                            return counting
            finally:
                _restore(env, x, saved)
            return False if counting else n == size

        return count
    raise TypeError(f"not a formula: {f!r}")


_MISSING = object()


def _restore(env, x, saved):
    if saved is _MISSING:
        env.pop(x, None)
    else:
        env[x] = saved


def _check_assignment(f, ctx: Context, a: dict):
    missing = free_vars(f) - set(a)
    if missing:
        raise EvaluationError(f"unassigned free variables {sorted(missing)}")
    for v, h in a.items():
        if h not in ctx.universe_set:
            raise EvaluationError(f"dangling handle {h!r} for variable {v}")


def holds(f, ctx: Context, a: dict | None = None) -> bool:
    a = dict(a or {})
    _check_assignment(f, ctx, a)
    return compile_formula(f)(ctx, a)


def evaluate(f, cand, a: dict | None = None, t_fun=None) -> bool:
    """Truth of ``f`` in the stage ``cand`` under assignment ``a``.

    Quantifiers range over the stage universe; ``Qt x phi`` holds iff
    ``t_fun(#urelements) < #{b : phi(b)}``.
    """
    return holds(f, context_for(cand, t_fun), a)


def defined_set_members(psi, xvar: str, params, values, ctx: Context) -> list[SetHandle]:
    if len(params) != len(values):
        raise EvaluationError(f"expected {len(params)} parameters, got {len(values)}")
    fn = compile_formula(psi)
    env = dict(zip(params, values))
    out = []
    for h in ctx.universe:
        env[xvar] = h
        if fn(ctx, env):
            out.append(h)
    return out


def defined_subset(psi, cand, b=(), xvar: str = "x", params=None, t_fun=None) -> SetHandle:
    """Intern {a in universe : psi(a, b)}; ``params`` name the parameter variables."""
    ctx = context_for(cand, t_fun)
    if params is None:
        params = tuple(sorted(free_vars(psi) - {xvar}))
    b = tuple(b)
    if len(b) != len(params):
        raise EvaluationError(f"arity mismatch: {len(params)} parameters, {len(b)} values")
    for h in b:
        if h not in ctx.universe_set:
            raise EvaluationError(f"dangling handle {h!r}")
    return ctx.store.intern_set(defined_set_members(psi, xvar, params, b, ctx))
