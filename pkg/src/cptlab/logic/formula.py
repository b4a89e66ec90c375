"""Formula syntax trees for first-order logic over tau + {in} + dynamic predicates.

Terms are variables, constants, or applications of (partial) function symbols.
Dynamic predicates ``DP<i>(x)`` read the current value of the i-th dynamic
constant, ``HP<i>(x)`` the previous one.  ``atom(x)`` holds of urelements.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Union

Dialect = str  # "fo" | "card" | "card_T"
DIALECTS = ("fo", "card", "card_T")


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class App:
    fn: str
    args: tuple

    def __str__(self):
        return f"{self.fn}({','.join(map(str, self.args))})"


Term = Union[Var, Const, App]


@dataclass(frozen=True)
class Truth:
    value: bool


@dataclass(frozen=True)
class Rel:
    pred: str
    args: tuple


@dataclass(frozen=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True)
class In:
    left: Term
    right: Term


@dataclass(frozen=True)
class IsAtom:
    term: Term


@dataclass(frozen=True)
class Dyn:
    """DP<index>(term), or HP<index>(term) when history is set."""

    index: int
    term: Term
    history: bool = False


@dataclass(frozen=True)
class Not:
    body: Formula


@dataclass(frozen=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff:
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists:
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall:
    var: str
    body: Formula


@dataclass(frozen=True)
class CountQ:
    """Qt x body: more than t(|urelements|) witnesses."""

    var: str
    body: Formula


@dataclass(frozen=True)
class Card:
    """card{x : body} = size, with a literal natural size."""

    var: str
    body: Formula
    size: int


Formula = Union[Truth, Rel, Eq, In, IsAtom, Dyn, Not, And, Or, Implies, Iff, Exists, Forall, CountQ, Card]

ATOMIC = (Truth, Rel, Eq, In, IsAtom, Dyn)
BINARY = (And, Or, Implies, Iff)
BINDERS = (Exists, Forall, CountQ, Card)


def conj(*fs: Formula) -> Formula:
    if not fs:
        return Truth(True)
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(*fs: Formula) -> Formula:
    if not fs:
        return Truth(False)
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


def term_vars(t: Term) -> frozenset[str]:
    if isinstance(t, Var):
        return frozenset((t.name,))
    if isinstance(t, App):
        return frozenset().union(*(term_vars(a) for a in t.args))
    return frozenset()


def subformulas(f: Formula):
    yield f
    if isinstance(f, Not):
        yield from subformulas(f.body)
    elif isinstance(f, BINARY):
        yield from subformulas(f.left)
        yield from subformulas(f.right)
    elif isinstance(f, BINDERS):
        yield from subformulas(f.body)


@lru_cache(maxsize=None)
def free_vars(f: Formula) -> frozenset[str]:
    if isinstance(f, Truth):
        return frozenset()
    if isinstance(f, Rel):
        return frozenset().union(*(term_vars(a) for a in f.args))
    if isinstance(f, (Eq, In)):
        return term_vars(f.left) | term_vars(f.right)
    if isinstance(f, (IsAtom, Dyn)):
        return term_vars(f.term)
    if isinstance(f, Not):
        return free_vars(f.body)
    if isinstance(f, BINARY):
        return free_vars(f.left) | free_vars(f.right)
    if isinstance(f, BINDERS):
        return free_vars(f.body) - {f.var}
    raise TypeError(f"not a formula: {f!r}")


def quantifier_depth(f: Formula) -> int:
    """Nesting depth; Qt and cardinality atoms count as one quantifier each."""
    if isinstance(f, ATOMIC):
        return 0
    if isinstance(f, Not):
        return quantifier_depth(f.body)
    if isinstance(f, BINARY):
        return max(quantifier_depth(f.left), quantifier_depth(f.right))
    return 1 + quantifier_depth(f.body)


def max_subformula_free_vars(f: Formula) -> int:
    return max(len(free_vars(g)) for g in subformulas(f))


def uses_counting(f: Formula) -> bool:
    return any(isinstance(g, (CountQ, Card)) for g in subformulas(f))


def dynamic_indices(f: Formula) -> set[int]:
    return {g.index for g in subformulas(f) if isinstance(g, Dyn)}


def is_quantifier_free(f: Formula) -> bool:
    return quantifier_depth(f) == 0


def rename_bound(f: Formula, suffix: str = "_") -> Formula:
    """Alpha-rename every bound variable by appending a suffix."""

    def term(t, env):
        if isinstance(t, Var):
            return Var(env.get(t.name, t.name))
        if isinstance(t, App):
            return App(t.fn, tuple(term(a, env) for a in t.args))
        return t

    def go(g, env):
        if isinstance(g, Truth):
            return g
        if isinstance(g, Rel):
            return Rel(g.pred, tuple(term(a, env) for a in g.args))
        if isinstance(g, (Eq, In)):
            return type(g)(term(g.left, env), term(g.right, env))
        if isinstance(g, IsAtom):
            return IsAtom(term(g.term, env))
        if isinstance(g, Dyn):
            return Dyn(g.index, term(g.term, env), g.history)
        if isinstance(g, Not):
            return Not(go(g.body, env))
        if isinstance(g, BINARY):
            return type(g)(go(g.left, env), go(g.right, env))
        new = g.var + suffix
        inner = {**env, g.var: new}
        if isinstance(g, Card):
            return Card(new, go(g.body, inner), g.size)
        return type(g)(new, go(g.body, inner))

    return go(f, {})


# -- printing ---------------------------------------------------------------

_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4}
_OPS = {Iff: "<->", Implies: "->", Or: "|", And: "&"}


def to_text(f: Formula) -> str:
    return _show(f, 0)


def _show(f: Formula, ctx: int) -> str:
    if isinstance(f, Truth):
        return "true" if f.value else "false"
    if isinstance(f, Rel):
        return f"{f.pred}({','.join(map(str, f.args))})"
    if isinstance(f, Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, In):
        return f"{f.left} in {f.right}"
    if isinstance(f, IsAtom):
        return f"atom({f.term})"
    if isinstance(f, Dyn):
        return f"{'HP' if f.history else 'DP'}{f.index}({f.term})"
    if isinstance(f, Not):
        return "!" + _show(f.body, 5)
    if isinstance(f, BINARY):
        p = _PREC[type(f)]
        # right-nested for ->, left-nested for the associative ones
        if isinstance(f, (Implies, Iff)):
            s = f"{_show(f.left, p + 1)} {_OPS[type(f)]} {_show(f.right, p)}"
        else:
            s = f"{_show(f.left, p)} {_OPS[type(f)]} {_show(f.right, p + 1)}"
        return f"({s})" if p < ctx else s
    if isinstance(f, Exists):
        return f"exists {f.var} ({_show(f.body, 0)})"
    if isinstance(f, Forall):
        return f"forall {f.var} ({_show(f.body, 0)})"
    if isinstance(f, CountQ):
        return f"Qt {f.var} ({_show(f.body, 0)})"
    if isinstance(f, Card):
        return f"card{{{f.var} : {_show(f.body, 0)}}} = {f.size}"
    raise TypeError(f"not a formula: {f!r}")
