"""Vocabularies and finite relational structures, plus the model file format.

Model file::

    model C5
    elements a b c d e
    rel E/2: (a,b) (b,a) (b,c) ...
    fun f: a->b c->d
    const o = a
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path

RESERVED = frozenset({"in", "atom", "true", "false", "forall", "exists", "Qt", "card"})


class ModelFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Vocabulary:
    predicates: tuple[tuple[str, int], ...] = ()
    functions: tuple[tuple[str, int], ...] = ()
    constants: tuple[str, ...] = ()

    def __post_init__(self):
        names = [p for p, _ in self.predicates] + [f for f, _ in self.functions] + list(self.constants)
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate symbol names in vocabulary: {names}")
        bad = [n for n in names if n in RESERVED or re.fullmatch(r"[DH]P\d+", n)]
        if bad:
            raise ValueError(f"reserved symbol names: {bad}")

    @classmethod
    def of(cls, predicates=None, functions=None, constants=()) -> Vocabulary:
        return cls(
            tuple(sorted((predicates or {}).items())),
            tuple(sorted((functions or {}).items())),
            tuple(sorted(constants)),
        )

    @property
    def predicate_arity(self) -> dict[str, int]:
        return dict(self.predicates)

    @property
    def function_arity(self) -> dict[str, int]:
        return dict(self.functions)

    @property
    def relational(self) -> bool:
        return not self.functions and not self.constants


@dataclass(frozen=True)
class Structure:
    """A finite structure; relations hold tuples of element names."""

    vocab: Vocabulary
    elements: tuple[str, ...]
    relations: dict[str, frozenset[tuple[str, ...]]] = field(default_factory=dict, hash=False)
    functions: dict[str, dict[tuple[str, ...], str]] = field(default_factory=dict, hash=False)
    constants: dict[str, str] = field(default_factory=dict, hash=False)
    name: str = "M"

    def __post_init__(self):
        els = set(self.elements)
        if len(els) != len(self.elements):
            raise ValueError("duplicate element names")
        arity = self.vocab.predicate_arity
        rels = dict(self.relations)
        for p in arity:
            rels.setdefault(p, frozenset())
        for p, tuples in rels.items():
            if p not in arity:
                raise ValueError(f"relation {p!r} not in vocabulary")
            for t in tuples:
                if len(t) != arity[p] or not set(t) <= els:
                    raise ValueError(f"bad tuple {t} for {p}/{arity[p]}")
        object.__setattr__(self, "relations", {p: frozenset(v) for p, v in rels.items()})
        farity = self.vocab.function_arity
        funs = {f: dict(self.functions.get(f, {})) for f in farity}
        for f, table in funs.items():
            for args, val in table.items():
                if len(args) != farity[f] or not set(args) <= els or val not in els:
                    raise ValueError(f"bad entry {args}->{val} for function {f}")
        object.__setattr__(self, "functions", funs)
        for c in self.vocab.constants:
            if self.constants.get(c) not in els:
                raise ValueError(f"constant {c!r} not interpreted by an element")

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def index(self) -> dict[str, int]:
        return {e: i for i, e in enumerate(self.elements)}

    def indexed_relations(self) -> dict[str, frozenset[tuple[int, ...]]]:
        """Relations over element indices 0..n-1."""
        ix = self.index
        return {p: frozenset(tuple(ix[e] for e in t) for t in ts) for p, ts in self.relations.items()}

    def holds(self, pred: str, *args: str) -> bool:
        return tuple(args) in self.relations[pred]

    def to_text(self) -> str:
        lines = [f"model {self.name}", "elements " + " ".join(self.elements)]
        for p, ar in self.vocab.predicates:
            tuples = sorted(self.relations[p], key=lambda t: [self.index[e] for e in t])
            body = " ".join("(" + ",".join(t) + ")" for t in tuples)
            lines.append(f"rel {p}/{ar}: {body}".rstrip())
        for f, ar in self.vocab.functions:
            entries = sorted(self.functions[f].items())
            body = " ".join(",".join(a) + "->" + v for a, v in entries)
            lines.append(f"fun {f}/{ar}: {body}".rstrip())
        for c in self.vocab.constants:
            lines.append(f"const {c} = {self.constants[c]}")
        return "\n".join(lines) + "\n"


def graph(n: int, edges, name: str = "G", prefix: str = "v") -> Structure:
    """Undirected loopless graph on v0..v{n-1} with binary predicate E."""
    els = tuple(f"{prefix}{i}" for i in range(n))
    tuples = set()
    for a, b in edges:
        if a == b:
            raise ValueError("loops are not allowed in a graph")
        tuples.add((els[a], els[b]))
        tuples.add((els[b], els[a]))
    return Structure(Vocabulary.of({"E": 2}), els, {"E": frozenset(tuples)}, name=name)


def cycle(n: int, name: str | None = None) -> Structure:
    return graph(n, [(i, (i + 1) % n) for i in range(n)], name=name or f"C{n}")


def unary(n: int, members, name: str = "U", pred: str = "P") -> Structure:
    """([n], P) with P given by element indices."""
    els = tuple(f"e{i}" for i in range(n))
    return Structure(Vocabulary.of({pred: 1}), els, {pred: frozenset((els[i],) for i in members)}, name=name)


_TUPLE = re.compile(r"\(([^()]*)\)")


def parse_structure(text: str) -> Structure:
    name = "M"
    elements: list[str] | None = None
    preds: dict[str, int] = {}
    rels: dict[str, set] = {}
    funs: dict[str, dict] = {}
    fun_ar: dict[str, int] = {}
    consts: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if head == "model":
                name = rest or name
            elif head == "elements":
                elements = rest.split()
            elif head == "rel":
                sym, _, body = rest.partition(":")
                sym = sym.strip()
                ar = None
                if "/" in sym:
                    sym, ar_s = sym.split("/")
                    ar = int(ar_s)
                tuples = [tuple(x.strip() for x in m.split(",") if x.strip()) for m in _TUPLE.findall(body)]
                if ar is None:
                    if not tuples:
                        raise ModelFormatError("empty relation needs an explicit arity (rel P/1:)")
                    ar = len(tuples[0])
                preds[sym] = ar
                rels[sym] = set(tuples)
            elif head == "fun":
                sym, _, body = rest.partition(":")
                sym = sym.strip().split("/")[0]
                table = {}
                for entry in body.split():
                    args, _, val = entry.partition("->")
                    table[tuple(a for a in args.split(",") if a)] = val
                ars = {len(a) for a in table}
                if len(ars) > 1:
                    raise ModelFormatError(f"inconsistent arity for function {sym}")
                fun_ar[sym] = ars.pop() if ars else 1
                funs[sym] = table
            elif head == "const":
                c, _, val = rest.partition("=")
                consts[c.strip()] = val.strip()
            else:
                raise ModelFormatError(f"unknown directive {head!r}")
        except (ValueError, IndexError) as exc:
            raise ModelFormatError(f"line {lineno}: {exc}") from exc
    if elements is None:
        raise ModelFormatError("missing 'elements' line")
    vocab = Vocabulary.of(preds, fun_ar, consts)
    try:
        return Structure(vocab, tuple(elements), {p: frozenset(t) for p, t in rels.items()}, funs, consts, name=name)
    except ValueError as exc:
        raise ModelFormatError(str(exc)) from exc


def load_structure(path) -> Structure:
    return parse_structure(Path(path).read_text())


def is_partial_isomorphism(src: Structure, dst: Structure, pairs, rels1=None, rels2=None) -> bool:
    """Check that pairs (i, j) define a partial isomorphism src -> dst.

    Pairs are element indices or element names.
    """
    rels1 = rels1 if rels1 is not None else src.indexed_relations()
    rels2 = rels2 if rels2 is not None else dst.indexed_relations()
    ix1, ix2 = src.index, dst.index
    m = {ix1.get(a, a): ix2.get(b, b) for a, b in pairs}
    if len(set(m.values())) != len(m):
        return False
    dom = list(m)
    for p, ar in src.vocab.predicates:
        r1, r2 = rels1[p], rels2[p]
        for t in itertools.product(dom, repeat=ar):
            if (t in r1) != (tuple(m[x] for x in t) in r2):
                return False
    return True
