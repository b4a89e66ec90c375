"""Random structures, randomness and quantifier elimination checks, canonical systems and experiments."""
from __future__ import annotations

import itertools
import math
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .logic.structure import Structure, Vocabulary, graph, unary
from .scheme import InductiveScheme, TimingFunction, parse_scheme
from .symmetry.maps import PartialMapFamily, SupportFamily, all_partial_isomorphisms
from .symmetry.report import Report
from .symmetry.system import KSystem, check_dichotomy, check_k_system, check_super, qf_type
from .symmetry.witness import WitnessFamily, check_witness, transfer_verdict


class PreconditionError(ValueError):
    pass


# -- generation ------------------------------------------------------------------------


def gen_random(n: int, vocab: Vocabulary, probs, seed: int, name: str | None = None) -> Structure:
    """Each tuple of each predicate included independently with its probability."""
    if vocab.functions or vocab.constants:
        raise PreconditionError("random structures need a purely relational vocabulary")
    if not isinstance(probs, dict):
        probs = {p: probs for p, _ in vocab.predicates}
    rng = random.Random(seed)
    els = tuple(f"v{i}" for i in range(n))
    rels = {}
    for p, r in vocab.predicates:
        pr = probs[p]
        rels[p] = frozenset(t for t in itertools.product(els, repeat=r) if rng.random() < pr)
    return Structure(vocab, els, rels, name=name or f"R{n}_{seed}")


def gen_random_graph(n: int, p: float, seed: int) -> Structure:
    """G(n, p): each unordered pair an edge independently."""
    rng = random.Random(seed)
    edges = [(a, b) for a, b in itertools.combinations(range(n), 2) if rng.random() < p]
    return graph(n, edges, name=f"G{n}_{seed}")


def paley(q: int) -> Structure:
    """Paley graph on Z_q, q a prime with q = 1 mod 4."""
    if q < 5 or q % 4 != 1 or any(q % d == 0 for d in range(2, int(q**0.5) + 1)):
        raise ValueError(f"Paley graphs need a prime q = 1 mod 4, got {q}")
    squares = {x * x % q for x in range(1, q)}
    edges = [(a, b) for a, b in itertools.combinations(range(q), 2) if (a - b) % q in squares]
    return graph(q, edges, name=f"Paley{q}")


def relabel(M: Structure, seed: int) -> Structure:
    """An isomorphic copy with elements permuted by a seeded shuffle."""
    rng = random.Random(seed)
    perm = list(M.elements)
    rng.shuffle(perm)
    pi = dict(zip(M.elements, perm))
    rels = {p: frozenset(tuple(pi[x] for x in t) for t in ts) for p, ts in M.relations.items()}
    funs = {f: {tuple(pi[x] for x in a): pi[v] for a, v in tab.items()} for f, tab in M.functions.items()}
    consts = {c: pi[e] for c, e in M.constants.items()}
    return Structure(M.vocab, M.elements, rels, funs, consts, name=f"{M.name}~{seed}")


# -- randomness ---------------------------------------------------------------------------


def _undirected(M: Structure) -> set:
    """Binary predicates that are symmetric and irreflexive."""
    out = set()
    for p, r in M.vocab.predicates:
        ts = M.relations[p]
        if r == 2 and all(a != b and (b, a) in ts for a, b in ts):
            out.add(p)
    return out


def _atoms_over(M: Structure, A: tuple, undirected: set) -> list:
    """Atomic formulas in x over A, as (pred, tuple of positions with None for x)."""
    atoms = []
    slots = list(A) + [None]
    for p, r in M.vocab.predicates:
        if p in undirected:
            atoms.extend((p, (a, None)) for a in A)
            continue
        for t in itertools.product(slots, repeat=r):
            if None in t:
                atoms.append((p, t))
    return atoms


def check_random(M: Structure, k: int, s_fun) -> Report:
    """Every consistent qf 1-type over each A with |A| < k has at least s(|M|) realizers.

    A symmetric irreflexive binary predicate is read as an undirected graph
    relation, so E(x, x) and the order of arguments carry no information.
    """
    if M.vocab.functions:
        raise PreconditionError("check_random needs a purely relational vocabulary")
    s_fun = s_fun if callable(s_fun) else TimingFunction.constant(s_fun)
    need = s_fun(len(M))
    rels = M.indexed_relations()
    und = _undirected(M)
    n = len(M)
    worst = None
    failures = 0
    checked = 0
    for size in range(min(k, n + 1)):
        for A in itertools.combinations(range(n), size):
            atoms = _atoms_over(M, A, und)
            counts = Counter()
            for b in range(n):
                if b in A:
                    continue
                counts[tuple(tuple(b if x is None else x for x in t) in rels[p] for p, t in atoms)] += 1
            for tp in itertools.product((False, True), repeat=len(atoms)):
                checked += 1
                c = counts.get(tp, 0)
                if worst is None or c < worst[2]:
                    worst = (A, tp, c)
                if c < need:
                    failures += 1
    rep = Report(f"({s_fun}, {k})-randomness")
    w = None
    if worst is not None:
        w = {"A": [M.elements[a] for a in worst[0]], "type": list(worst[1]), "count": worst[2]}
    rep.add("random", failures == 0, w if failures else None)
    rep.data.update({"types_checked": checked, "failures": failures, "needed": need, "worst": w})
    return rep


def check_qe(M: Structure, k: int, with_counting: bool = False) -> Report:
    """k-elimination of quantifiers (and optionally of counting) by exhaustive extension search."""
    rels = M.indexed_relations()
    arity = dict(M.vocab.predicates)
    n = len(M)
    buckets: dict = {}

    def bucket(t):
        if t not in buckets:
            buckets[t] = Counter(qf_type(t + (b,), rels, arity) for b in range(n) if b not in t)
        return buckets[t]

    bad = None
    checked = 0
    for f in all_partial_isomorphisms(M, M, max(k - 1, 0)):
        checked += 1
        src = tuple(a for a, _ in f)
        dst = tuple(b for _, b in f)
        b0, b1 = bucket(src), bucket(dst)
        if with_counting:
            ok = b0 == b1
        else:
            ok = set(b0) <= set(b1)
        if not ok:
            missing = next((t for t in b0 if t not in b1 or (with_counting and b0[t] != b1[t])), None)
            bad = {"map": [(M.elements[a], M.elements[b]) for a, b in f], "type": repr(missing)}
            break
    rep = Report(f"{k}-elimination of quantifiers" + (" and counting" if with_counting else ""))
    rep.add("qe", bad is None, bad)
    rep.data["maps_checked"] = checked
    return rep


# -- canonical systems -----------------------------------------------------------------------


def claim_constants(M: Structure, k: int, s: int, t_fun, s_fun=None) -> dict:
    """The numeric side conditions 3s <= k and 2^(2^s |tau|) < t(M) < s(M) - s."""
    n = len(M)
    tau = len(M.vocab.predicates)
    t = t_fun(n)
    out = {"3s<=k": 3 * s <= k, "lower": 2 ** ((2**s) * tau), "t": t}
    if s_fun is not None:
        sv = s_fun(n)
        out["upper"] = sv - s
        out["t-window"] = out["lower"] < t < sv - s
    return out


def canonical_system(M: Structure, q: int, k: int, t_fun, s: int | None = None, *, strict: bool = False, s_fun=None, check: bool = True) -> KSystem:
    """I = sets of size <= q, F = all partial automorphisms on <= qk points."""
    q_eff = max(q, 1)  # clause (A) needs every singleton
    s = s if s is not None else max(k // 3, 1)
    if check:
        rep = check_qe(M, q_eff * k)
        if not rep.passed:
            raise PreconditionError(f"structure lacks {q_eff * k}-elimination of quantifiers: {rep.get('qe').witness}")
    if strict:
        cc = claim_constants(M, k, s, t_fun, s_fun)
        if not cc["3s<=k"] or not cc.get("t-window", True):
            raise PreconditionError(f"numeric side conditions fail: {cc}")
    I = SupportFamily.by_size(len(M), q_eff)
    F = PartialMapFamily.all_partial_automorphisms(M, q_eff * k)
    return KSystem(M, I, F, k, s, t_fun)


def canonical_witness(M1: Structure, M2: Structure, q: int, k: int, strength: str = "ks", check: bool = True) -> WitnessFamily:
    """All partial isomorphisms M1 -> M2 on <= qk points."""
    q_eff = max(q, 1)
    if M1.vocab != M2.vocab:
        raise PreconditionError("structures have different vocabularies")
    if check:
        for M in (M1, M2):
            rep = check_qe(M, q_eff * k)
            if not rep.passed:
                raise PreconditionError(f"{M.name} lacks {q_eff * k}-elimination of quantifiers")
    H = PartialMapFamily.all_partial_isomorphisms(M1, M2, q_eff * k)
    return WitnessFamily(H, strength)


# -- scheme battery ----------------------------------------------------------------------------


@dataclass
class BatteryEntry:
    scheme: InductiveScheme
    variant: int = 2
    cap: int = 64

    @property
    def name(self) -> str:
        return self.scheme.name


def _meta(text: str, key: str, default):
    for line in text.splitlines():
        line = line.strip()
        if line.startswith(f"# {key}:"):
            return type(default)(line.split(":", 1)[1].strip())
    return default


def parse_battery_entry(text: str, vocab: Vocabulary) -> BatteryEntry:
    """A scheme file with optional ``# variant: N`` and ``# cap: N`` header comments."""
    return BatteryEntry(parse_scheme(text, vocab), _meta(text, "variant", 2), _meta(text, "cap", 64))


def load_battery(kind: str, vocab: Vocabulary, counting: bool = False, directory=None) -> list[BatteryEntry]:
    """Fixture battery for a vocabulary kind (``graph`` or ``unary``).

    Files named ``count_*`` use the cardinality quantifier and are included
    only with ``counting``.
    """
    if directory is not None:
        files = sorted(Path(directory).glob("*.scheme"))
        texts = [(f.name, f.read_text()) for f in files]
    else:
        root = resources.files("cptlab") / "fixtures" / "battery" / kind
        texts = sorted((f.name, f.read_text()) for f in root.iterdir() if f.name.endswith(".scheme"))
    out = []
    for fname, text in texts:
        if fname.startswith("count_") and not counting:
            continue
        out.append(parse_battery_entry(text, vocab))
    return out


# -- experiments --------------------------------------------------------------------------------


def _system_report(Y: KSystem, counting: bool) -> Report:
    if counting:
        return check_super(Y)
    rep = check_k_system(Y)
    rep.extend(check_dichotomy(Y))
    return rep


def _transfer_entry(args):
    wr, M1, M2, entry, t_fun, k, s = args
    return transfer_verdict(wr, M1, M2, entry.scheme, None, t_fun, t_fun, entry.variant, k=k, s=s, cap=entry.cap)


def experiment_transfer(M1, M2, battery, t_fun, q: int = 1, k: int = 3, s: int = 1, counting: bool = False, title=None, jobs: int = 1) -> Report:
    """Canonical systems and witness for M1, M2, then every battery scheme on both sides."""
    if M1.vocab != M2.vocab:
        raise PreconditionError("structures have different vocabularies")
    rep = Report(title or f"transfer {M1.name} vs {M2.name}")
    Y1 = canonical_system(M1, q, k, t_fun, s)
    Y2 = canonical_system(M2, q, k, t_fun, s)
    r1, r2 = _system_report(Y1, counting), _system_report(Y2, counting)
    rep.add("system1", r1.passed, [c.clause for c in r1.failures()] or None)
    rep.add("system2", r2.passed, [c.clause for c in r2.failures()] or None)
    W = canonical_witness(M1, M2, q, k, "super" if counting else "ks")
    wr = check_witness(W, Y1, Y2, systems=(r1, r2))
    rep.add("witness", wr.passed, [c.clause for c in wr.failures()] or None)
    cc = claim_constants(M1, k, s, t_fun)
    rep.data["constants"] = cc
    entries = [e for e in battery if counting or e.scheme.dialect == "fo"]
    jobs_args = [(wr, M1, M2, e, t_fun, k, s) for e in entries]
    if jobs > 1 and len(entries) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_transfer_entry, jobs_args))
    else:
        results = [_transfer_entry(a) for a in jobs_args]
    verdicts = []
    for entry, res in zip(entries, results):
        rep.add(f"transfer:{entry.name}", res.ok, None if res.ok else res.to_dict())
        verdicts.append(res.to_dict())
    rep.data["verdicts"] = verdicts
    return rep


def _thresholds(n: int, sizes, t_fun):
    need = 2 * math.log2(max(t_fun(n), 1))
    for p in sizes:
        if p < need or n - p < need:
            raise PreconditionError(f"|P|={p} or its complement below 2 log2 t(n) = {need:g}")


def _battery(battery, vocab, counting):
    return battery if battery is not None else load_battery("unary", vocab, counting)


def experiment_unary(n: int, p1: int, p2: int, t_fun, battery=None, counting: bool = False, q: int = 1, k: int = 3, s: int = 1, jobs: int = 1) -> Report:
    """([n], P1) against ([n], P2) with |P1| = p1, |P2| = p2."""
    _thresholds(n, (p1, p2), t_fun)
    M1, M2 = unary(n, range(p1), name=f"U{n}_{p1}"), unary(n, range(p2), name=f"U{n}_{p2}")
    return experiment_transfer(M1, M2, _battery(battery, M1.vocab, counting), t_fun, q, k, s, counting, f"unary n={n} |P|={p1},{p2}", jobs)


def experiment_majority(n: int, t_fun, battery=None, counting: bool = False, q: int = 1, k: int = 3, s: int = 1, jobs: int = 1) -> Report:
    """|P| = n/2 against |P| = n/2 - 1: the majority answers differ, the battery must not separate them."""
    if n % 2:
        raise PreconditionError("majority experiment needs an even n")
    p1, p2 = n // 2, n // 2 - 1
    _thresholds(n, (p1, p2), t_fun)
    rep = experiment_unary(n, p1, p2, t_fun, battery, counting, q, k, s, jobs)
    rep.title = f"majority n={n} |P|={p1},{p2}"
    rep.add("majority-differs", (2 * p1 >= n) != (2 * p2 >= n))
    return rep
