"""Inductive schemes, candidates, the successor step, and stopping semantics.

A run starts from the atoms of M and repeatedly applies the successor: each
psi contributes the family of subsets it defines (with every parameter tuple
from the current universe), and a family larger than the time bound is
replaced by the empty family.  The dynamic constants are the sets defined by
the phi formulas.
"""
from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .hfs import SetHandle
from .logic.evaluate import EvaluationError, World, context_for, defined_set_members, holds
from .logic.formula import (
    dynamic_indices,
    free_vars,
    quantifier_depth,
    to_text,
    uses_counting,
)
from .logic.parser import parse_formula
from .logic.structure import Structure, Vocabulary

ITERATION_CAP = 2**16


class SchemeError(ValueError):
    pass


# -- timing functions ---------------------------------------------------------


def _ceil_root(n: int, b: int) -> int:
    """Least integer m with m**b >= n."""
    if n <= 0:
        return 0
    m = int(round(n ** (1.0 / b)))
    while m**b < n:
        m += 1
    while m > 0 and (m - 1) ** b >= n:
        m -= 1
    return m


@dataclass(frozen=True)
class TimingFunction:
    """n -> ceil(n^q), a constant, or infinity."""

    kind: str = "poly"
    q: Fraction = Fraction(1)

    def __post_init__(self):
        if self.kind not in ("poly", "constant", "infinity"):
            raise ValueError(f"unknown timing kind {self.kind!r}")
        object.__setattr__(self, "q", Fraction(self.q))
        if self.kind == "poly" and self.q <= 0:
            raise ValueError("polynomial exponent must be positive")
        if self.kind == "constant" and self.q < 0:
            raise ValueError("constant bound must be nonnegative")

    @classmethod
    def poly(cls, q) -> TimingFunction:
        return cls("poly", Fraction(q))

    @classmethod
    def constant(cls, c) -> TimingFunction:
        return cls("constant", Fraction(c))

    @classmethod
    def infinity(cls) -> TimingFunction:
        return cls("infinity", Fraction(0))

    @property
    def infinite(self) -> bool:
        return self.kind == "infinity"

    def __call__(self, n: int):
        if self.kind == "infinity":
            return math.inf
        if self.kind == "constant":
            return math.ceil(self.q)
        a, b = self.q.numerator, self.q.denominator
        return _ceil_root(n**a, b)

    def __str__(self):
        if self.kind == "infinity":
            return "infinity"
        return f"{'poly' if self.kind == 'poly' else 'const'} {self.q}"

    @classmethod
    def parse(cls, text: str) -> TimingFunction:
        """Accepts ``poly 2``, ``poly 1/2``, ``f2``, ``const 2``, ``infinity``."""
        s = text.strip()
        if s in ("infinity", "inf", "oo"):
            return cls.infinity()
        m = re.fullmatch(r"f(\d+(?:/\d+)?)", s)
        if m:
            return cls.poly(Fraction(m.group(1)))
        kind, _, arg = s.partition(" ")
        try:
            if kind == "poly":
                return cls.poly(Fraction(arg.strip()))
            if kind in ("const", "constant"):
                return cls.constant(Fraction(arg.strip()))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"bad timing function {text!r}") from exc
        raise ValueError(f"bad timing function {text!r}")


# -- schemes ------------------------------------------------------------------


@dataclass(frozen=True)
class Psi:
    formula: object
    var: str = "x"
    params: tuple[str, ...] = ()


@dataclass(frozen=True)
class InductiveScheme:
    psi: tuple[Psi, ...] = ()
    phi: tuple[tuple[object, str], ...] = ()
    dialect: str = "fo"
    standard: bool = False
    name: str = "scheme"
    chi: object = None

    def __post_init__(self):
        object.__setattr__(self, "psi", tuple(p if isinstance(p, Psi) else Psi(*p) for p in self.psi))
        object.__setattr__(self, "phi", tuple(p if isinstance(p, tuple) else (p, "x") for p in self.phi))
        m1 = len(self.phi)
        for p in self.psi:
            extra = free_vars(p.formula) - {p.var} - set(p.params)
            if extra:
                raise SchemeError(f"psi has undeclared free variables {sorted(extra)}")
            if p.var in p.params or len(set(p.params)) != len(p.params):
                raise SchemeError("psi variables must be distinct")
        for f, x in self.phi:
            extra = free_vars(f) - {x}
            if extra:
                raise SchemeError(f"phi has undeclared free variables {sorted(extra)}")
        for f in self.formulas():
            bad = {i for i in dynamic_indices(f) if i >= m1}
            if bad:
                raise SchemeError(f"unknown dynamic predicate index {sorted(bad)} (m1={m1})")
            if uses_counting(f) and self.dialect == "fo":
                raise SchemeError("counting construct in a first order scheme")
        if self.dialect == "card" and not self.standard:
            raise SchemeError("dialect card requires a standard scheme")

    @property
    def m0(self) -> int:
        return len(self.psi)

    @property
    def m1(self) -> int:
        return len(self.phi)

    @property
    def pure(self) -> bool:
        return self.m1 == 0

    def formulas(self):
        yield from (p.formula for p in self.psi)
        yield from (f for f, _ in self.phi)


def metrics(u: InductiveScheme) -> tuple[int, int]:
    """(m_qd, m_fv): max quantifier depth and max parameter count."""
    qd = max((quantifier_depth(f) for f in u.formulas()), default=0)
    fv = max((len(p.params) for p in u.psi), default=0)
    return qd, fv


# -- candidates ---------------------------------------------------------------


@dataclass(frozen=True)
class Candidate:
    universe: frozenset
    c: tuple = ()
    history: tuple = ()
    world: World = field(default=None, compare=False, repr=False)

    @property
    def size(self) -> int:
        return len(self.universe)

    def sorted_universe(self) -> tuple[SetHandle, ...]:
        return tuple(sorted(self.universe))


def initial_candidate(M: Structure, u: InductiveScheme | None = None, world: World | None = None) -> Candidate:
    world = world if world is not None else World(M)
    m1 = u.m1 if u is not None else 0
    return Candidate(frozenset(world.atoms), (None,) * m1, (), world)


@dataclass
class StepInfo:
    family_sizes: list[int]
    overflow: list[bool]
    new_sets: list[int]


def _step(cand: Candidate, u: InductiveScheme, t_fun) -> tuple[Candidate, StepInfo]:
    ctx = context_for(_sorted(cand), t_fun)
    store = cand.world.store
    bound = t_fun(cand.world.n_atoms)
    added: set[SetHandle] = set()
    sizes, over, new = [], [], []
    for p in u.psi:
        fam: set[SetHandle] = set()
        for b in itertools.product(ctx.universe, repeat=len(p.params)):
            fam.add(store.intern_set(defined_set_members(p.formula, p.var, p.params, b, ctx)))
            if len(fam) > bound:
                break
        if len(fam) > bound:
            sizes.append(len(fam))
            over.append(True)
            new.append(0)
            continue
        sizes.append(len(fam))
        over.append(False)
        fresh = fam - cand.universe
        new.append(len(fresh - added))
        added |= fresh
    c = tuple(store.intern_set(defined_set_members(f, x, (), (), ctx)) for f, x in u.phi)
    nxt = Candidate(cand.universe | added, c, cand.c, cand.world)
    return nxt, StepInfo(sizes, over, new)


def _sorted(cand: Candidate):
    # contexts iterate the universe in handle order, which keeps runs deterministic
    return _View(cand.sorted_universe(), cand.c, cand.history, cand.world)


@dataclass(frozen=True)
class _View:
    universe: tuple
    c: tuple
    history: tuple
    world: World


def successor(cand: Candidate, u: InductiveScheme, t_fun, M: Structure | None = None) -> Candidate:
    """The successor stage; ``M`` is accepted but unused, the candidate carries its structure."""
    if len(cand.c) != u.m1:
        raise SchemeError(f"candidate has {len(cand.c)} constants, scheme needs {u.m1}")
    return _step(cand, u, t_fun)[0]


def stages(M: Structure, u: InductiveScheme, t_fun, n: int) -> list[Candidate]:
    cand = initial_candidate(M, u)
    out = [cand]
    for _ in range(n):
        cand = successor(cand, u, t_fun)
        out.append(cand)
    return out


def check_standard(u: InductiveScheme, M: Structure, t_max: int, t_fun=None) -> bool:
    """Verify {s : s < t} is contained in N_t for all t <= t_max."""
    t_fun = t_fun if t_fun is not None else TimingFunction.infinity()
    cand = initial_candidate(M, u)
    for t in range(t_max + 1):
        store = cand.world.store
        h = store.lookup_set(())
        naturals = []
        for _ in range(t):
            if h is None:
                return False
            naturals.append(h)
            h = store.lookup_set(naturals)
        if not set(naturals) <= cand.universe:
            return False
        if t < t_max:
            cand = successor(cand, u, t_fun)
    return True


# -- runs and verdicts --------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    value: bool | None
    stop_time: float
    stop_reason: str  # halted | budget | never

    def __post_init__(self):
        if (self.value is None) != (self.stop_reason != "halted"):
            raise ValueError("verdict is undefined exactly when the run did not halt")

    @property
    def label(self) -> str:
        return {True: "true", False: "false", None: "undefined"}[self.value]

    def line(self) -> str:
        t = "inf" if self.stop_time == math.inf else int(self.stop_time)
        return f"verdict: {self.label} stop_t={t} reason={self.stop_reason}"


@dataclass
class StageTrace:
    stages: list[dict] = field(default_factory=list)

    def add(self, t: int, cand: Candidate, new_sets):
        store = cand.world.store
        self.stages.append(
            {
                "t": t,
                "universe_size": cand.size,
                "new_sets": list(new_sets),
                "c": [None if h is None else store.format(h) for h in cand.c],
                "cost": cand.size + t,
            }
        )

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s) + "\n" for s in self.stages)

    @property
    def sizes(self) -> list[int]:
        return [s["universe_size"] for s in self.stages]


def _c_halt(cand: Candidate, u: InductiveScheme) -> bool:
    if u.m1 < 2:
        return False
    a, b = cand.c[0], cand.c[1]
    return a is not None and a == b


def run(M: Structure, u: InductiveScheme, t_fun, variant: int = 2, chi=None, cap: int = ITERATION_CAP):
    """Iterate stages until the stopping time of the chosen variant.

    Returns (Verdict, StageTrace).  Budget stops give an undefined verdict;
    hitting the iteration cap or a provably stationary run gives reason=never.
    """
    if variant not in (1, 2, 3, 4):
        raise SchemeError(f"unknown variant {variant}")
    if variant in (3, 4) and not u.standard:
        raise SchemeError(f"variant {variant} requires a standard scheme")
    chi = chi if chi is not None else u.chi
    if chi is None:
        raise SchemeError("no sentence chi given")
    if free_vars(chi):
        raise SchemeError(f"chi is not a sentence: free {sorted(free_vars(chi))}")
    trace = StageTrace()
    cand = initial_candidate(M, u)
    bound = t_fun(cand.world.n_atoms)
    new_sets = [0] * u.m0

    def halt(t):
        value = holds(chi, context_for(_sorted(cand), t_fun))
        return Verdict(value, t, "halted"), trace

    for t in range(cap + 1):
        trace.add(t, cand, new_sets)
        halted = _c_halt(cand, u) and (variant != 1 or t >= 2)
        if variant == 1:
            if halted:
                return halt(t)
            nxt, info = _step(cand, u, t_fun)
        else:
            nxt, info = _step(cand, u, t_fun)
            if variant == 2:
                over = nxt.size + t + 1 > bound
            elif variant == 3:
                over = nxt.size > bound
            else:
                over = any(info.overflow)
            if over:
                return Verdict(None, t, "budget"), trace
            if halted:
                return halt(t)
        if nxt == cand:
            # stationary: the state repeats forever
            if variant == 1 and _c_halt(cand, u):
                trace.add(2, cand, [0] * u.m0)
                return halt(2)
            if variant == 2 and bound != math.inf:
                t_stop = max(t + 1, int(bound) - cand.size)
                while cand.size + t_stop + 1 <= bound:
                    t_stop += 1
                return Verdict(None, t_stop, "budget"), trace
            return Verdict(None, math.inf, "never"), trace
        cand, new_sets = nxt, info.new_sets
    return Verdict(None, math.inf, "never"), trace


# -- scheme files ---------------------------------------------------------------

_PSI = re.compile(r"psi\s*\(\s*(\w+)\s*(?:;\s*([\w\s,]*))?\)\s*:=\s*(.+)")
_PHI = re.compile(r"phi\s*\(\s*(\w+)\s*\)\s*:=\s*(.+)")
_CHI = re.compile(r"chi\s*:=\s*(.+)")


def parse_scheme(text: str, vocab: Vocabulary) -> InductiveScheme:
    """Parse the scheme file format.

    Lines: ``scheme <name>``, ``dialect fo|card|card_T``, ``standard yes|no``,
    ``psi(x; y1,y2) := <formula>``, ``phi(x) := <formula>``, ``chi := <sentence>``.
    A trailing backslash continues a line.
    """
    name, dialect, standard = "scheme", "fo", False
    raw_psi, raw_phi, raw_chi = [], [], None
    lines = _logical_lines(text)
    for lineno, line in lines:
        try:
            if line.startswith("scheme"):
                name = line[len("scheme"):].strip() or name
            elif line.startswith("dialect"):
                dialect = line.split()[1]
            elif line.startswith("standard"):
                flag = line.split()[1]
                if flag not in ("yes", "no"):
                    raise SchemeError(f"standard must be yes or no, got {flag!r}")
                standard = flag == "yes"
            elif m := _PSI.fullmatch(line):
                params = tuple(p.strip() for p in (m.group(2) or "").split(",") if p.strip())
                raw_psi.append((lineno, m.group(3), m.group(1), params))
            elif m := _PHI.fullmatch(line):
                raw_phi.append((lineno, m.group(2), m.group(1)))
            elif m := _CHI.fullmatch(line):
                raw_chi = (lineno, m.group(1))
            else:
                raise SchemeError(f"unrecognized line {line!r}")
        except IndexError as exc:
            raise SchemeError(f"line {lineno}: incomplete directive") from exc

    def parse(lineno, src):
        try:
            return parse_formula(src, vocab, dialect)
        except ValueError as exc:
            raise SchemeError(f"line {lineno}: {exc}") from exc

    psi = tuple(Psi(parse(ln, src), x, params) for ln, src, x, params in raw_psi)
    phi = tuple((parse(ln, src), x) for ln, src, x in raw_phi)
    chi = parse(*raw_chi) if raw_chi else None
    return InductiveScheme(psi, phi, dialect, standard, name, chi)


def _logical_lines(text: str):
    out, buf, start = [], "", 0
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not buf:
            start = lineno
        if line.endswith("\\"):
            buf += line[:-1] + " "
            continue
        buf += line
        if buf.strip():
            out.append((start, " ".join(buf.split())))
        buf = ""
    if buf.strip():
        out.append((start, " ".join(buf.split())))
    return out


def load_scheme(path, vocab: Vocabulary) -> InductiveScheme:
    return parse_scheme(Path(path).read_text(), vocab)


def dump_scheme(u: InductiveScheme) -> str:
    lines = [f"scheme {u.name}", f"dialect {u.dialect}", f"standard {'yes' if u.standard else 'no'}"]
    for p in u.psi:
        params = f"; {','.join(p.params)}" if p.params else ""
        lines.append(f"psi({p.var}{params}) := {to_text(p.formula)}")
    for f, x in u.phi:
        lines.append(f"phi({x}) := {to_text(f)}")
    if u.chi is not None:
        lines.append(f"chi := {to_text(u.chi)}")
    return "\n".join(lines) + "\n"


__all__ = [
    "Candidate",
    "EvaluationError",
    "ITERATION_CAP",
    "InductiveScheme",
    "Psi",
    "SchemeError",
    "StageTrace",
    "TimingFunction",
    "Verdict",
    "check_standard",
    "dump_scheme",
    "initial_candidate",
    "load_scheme",
    "metrics",
    "parse_scheme",
    "run",
    "stages",
    "successor",
]
