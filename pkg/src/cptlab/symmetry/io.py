"""Text formats for systems and witness families.

A system file::

    system C5
    model c5.model
    I: size<=1                  # or: I: explicit {v0,v1} {v2}
    F: all-partial-autos max-dom<=3   # or: F: explicit, followed by map lines
    map v0->v1 v1->v2
    k=3 s=1
    timing poly 1

A witness file names two system files and the family H::

    witness
    left c5.system
    right c5b.system
    H: all-partial-isos max-dom<=3    # or: H: explicit, with map lines
    strength ks
"""
from __future__ import annotations

import re
from pathlib import Path

from ..logic.structure import Structure, load_structure
from ..scheme import TimingFunction
from .maps import PartialMapFamily, SupportFamily
from .system import KSystem
from .witness import STRENGTHS, WitnessFamily


class SystemFormatError(ValueError):
    pass


_SET = re.compile(r"\{([^{}]*)\}")
_MAXDOM = re.compile(r"max-dom\s*<=\s*(\d+)")


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _parse_map(body: str, M1: Structure, M2: Structure, lineno: int):
    ix1, ix2 = M1.index, M2.index
    pairs = []
    for entry in body.split():
        a, sep, b = entry.partition("->")
        if not sep or a not in ix1 or b not in ix2:
            raise SystemFormatError(f"line {lineno}: bad map entry {entry!r}")
        pairs.append((ix1[a], ix2[b]))
    if len({a for a, _ in pairs}) != len(pairs):
        raise SystemFormatError(f"line {lineno}: map is not a function")
    return tuple(sorted(pairs))


def parse_system(text: str, base: Path | str = ".", model: Structure | None = None) -> KSystem:
    base = Path(base)
    M = model
    I_spec = F_spec = None
    maps = []
    params = {}
    timing = TimingFunction.poly(1)
    for lineno, line in _lines(text):
        head = line.split()[0]
        if head == "system":
            continue
        if head == "model":
            if M is None:
                M = load_structure(base / line.split(None, 1)[1])
        elif line.startswith("I:"):
            I_spec = (lineno, line[2:].strip())
        elif line.startswith("F:"):
            F_spec = (lineno, line[2:].strip())
        elif head == "map":
            maps.append((lineno, line[3:].strip()))
        elif head == "timing":
            try:
                timing = TimingFunction.parse(line.split(None, 1)[1])
            except (ValueError, IndexError) as exc:
                raise SystemFormatError(f"line {lineno}: {exc}") from exc
        elif "=" in line:
            for item in line.split():
                key, _, val = item.partition("=")
                if key not in ("k", "s") or not val.isdigit():
                    raise SystemFormatError(f"line {lineno}: bad parameter {item!r}")
                params[key] = int(val)
        else:
            raise SystemFormatError(f"line {lineno}: unrecognized line {line!r}")
    if M is None:
        raise SystemFormatError("missing model line")
    if I_spec is None or F_spec is None:
        raise SystemFormatError("system needs both I: and F: lines")
    if "k" not in params or "s" not in params:
        raise SystemFormatError("system needs k=.. and s=..")
    I = _parse_support(I_spec, M)
    lineno, spec = F_spec
    if spec.startswith("all-partial-autos"):
        m = _MAXDOM.search(spec)
        if not m:
            raise SystemFormatError(f"line {lineno}: expected max-dom<=d")
        F = PartialMapFamily.all_partial_automorphisms(M, int(m.group(1)))
    elif spec == "explicit":
        F = PartialMapFamily([_parse_map(b, M, M, ln) for ln, b in maps], M, M)
    else:
        raise SystemFormatError(f"line {lineno}: unknown F specification {spec!r}")
    return KSystem(M, I, F, params["k"], params["s"], timing)


def _parse_support(spec, M: Structure) -> SupportFamily:
    lineno, text = spec
    n = len(M)
    m = re.fullmatch(r"size\s*<=\s*(\d+)", text)
    if m:
        return SupportFamily.by_size(n, int(m.group(1)))
    if text.startswith("explicit"):
        ix = M.index
        sets = []
        for body in _SET.findall(text):
            names = [x.strip() for x in body.split(",") if x.strip()]
            bad = [x for x in names if x not in ix]
            if bad:
                raise SystemFormatError(f"line {lineno}: unknown elements {bad}")
            sets.append(frozenset(ix[x] for x in names))
        return SupportFamily.explicit(n, sets)
    raise SystemFormatError(f"line {lineno}: unknown I specification {text!r}")


def load_system(path) -> KSystem:
    path = Path(path)
    return parse_system(path.read_text(), path.parent)


def dump_system(Y: KSystem, model_ref: str = "model.model") -> str:
    M = Y.M
    lines = [f"system {M.name}", f"model {model_ref}"]
    if Y.I.kind == "size":
        lines.append(f"I: size<={Y.I.q}")
    else:
        sets = " ".join("{" + ",".join(M.elements[a] for a in sorted(A)) + "}" for A in sorted(Y.I.maximal, key=sorted))
        lines.append(f"I: explicit {sets}")
    if Y.F.complete_upto is not None:
        lines.append(f"F: all-partial-autos max-dom<={Y.F.complete_upto}")
    else:
        lines.append("F: explicit")
        for f in Y.F:
            lines.append("map " + " ".join(f"{M.elements[a]}->{M.elements[b]}" for a, b in f))
    lines.append(f"k={Y.k} s={Y.s}")
    lines.append(f"timing {Y.t_fun}")
    return "\n".join(lines) + "\n"


def parse_witness(text: str, base: Path | str = "."):
    """Returns (WitnessFamily, Y1, Y2)."""
    base = Path(base)
    left = right = H_spec = None
    maps = []
    strength = "ks"
    for lineno, line in _lines(text):
        head, _, rest = line.partition(" ")
        if head == "witness":
            continue
        if head == "left":
            left = load_system(base / rest.strip())
        elif head == "right":
            right = load_system(base / rest.strip())
        elif line.startswith("H:"):
            H_spec = (lineno, line[2:].strip())
        elif head == "map":
            maps.append((lineno, rest.strip()))
        elif head == "strength":
            strength = rest.strip()
            if strength not in STRENGTHS:
                raise SystemFormatError(f"line {lineno}: strength must be one of {STRENGTHS}")
        else:
            raise SystemFormatError(f"line {lineno}: unrecognized line {line!r}")
    if left is None or right is None or H_spec is None:
        raise SystemFormatError("witness needs left, right and H: lines")
    lineno, spec = H_spec
    M1, M2 = left.M, right.M
    if spec.startswith("all-partial-isos"):
        m = _MAXDOM.search(spec)
        if not m:
            raise SystemFormatError(f"line {lineno}: expected max-dom<=d")
        H = PartialMapFamily.all_partial_isomorphisms(M1, M2, int(m.group(1)))
    elif spec == "explicit":
        H = PartialMapFamily([_parse_map(b, M1, M2, ln) for ln, b in maps], M1, M2)
    else:
        raise SystemFormatError(f"line {lineno}: unknown H specification {spec!r}")
    return WitnessFamily(H, strength), left, right


def load_witness(path):
    path = Path(path)
    return parse_witness(path.read_text(), path.parent)
