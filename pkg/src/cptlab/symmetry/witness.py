"""Witness families of partial isomorphisms between two systems, and verdict transfer."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..logic.formula import max_subformula_free_vars
from ..scheme import InductiveScheme, Verdict, metrics, run
from .maps import PartialMapFamily, composition_violation, dom, extension_cover, is_partial_iso, one_point_extension, ran, restrict
from .report import Report
from .system import (
    KSystem,
    _Orbit,
    base_tuples,
    check_dichotomy,
    check_k_system,
    check_super,
    definable_equivalences,
    equivalence_family,
    outcome,
    super_bases,
)

STRENGTHS = ("k", "ks", "super")


@dataclass
class WitnessFamily:
    H: PartialMapFamily
    strength: str = "ks"

    def __post_init__(self):
        if self.strength not in STRENGTHS:
            raise ValueError(f"strength must be one of {STRENGTHS}, got {self.strength!r}")

    def __len__(self) -> int:
        return len(self.H)


def _extension_clause(H: PartialMapFamily, I, k: int):
    """Every restriction of some g to U in I[k-1] extends to cover each member of I."""
    if not H.maps:
        return False, "family is empty"
    fast = one_point_extension(H, I, k - 1)
    if fast is not None:
        return fast
    cover = extension_cover(H, I, k - 1)
    maxi = I.maximal
    seen = set()
    for g in H:
        for U in I.subsets_in_union(dom(g), k - 1):
            r = restrict(g, U)
            if r in seen:
                continue
            seen.add(r)
            have = cover.get(r, ())
            for A in maxi:
                if A not in have:
                    return False, {"map": g, "kept": sorted(U), "new": sorted(A)}
    return True, None


class _OrbitCache:
    def __init__(self, Y: KSystem):
        self.Y = Y
        self.orbits: dict = {}
        self.signatures: dict = {}

    def orbit(self, h):
        if h not in self.orbits:
            self.orbits[h] = _Orbit(self.Y, h)
        return self.orbits[h]

    def signature(self, h) -> dict:
        """Type set -> (working u's, beta2) for the type-definable equivalences on H_h."""
        o = self.orbit(h)
        key = (len(h), o.H)
        if key not in self.signatures:
            sig = {}
            for S, rel in definable_equivalences(o):
                res = outcome(self.Y, o, rel)
                sig[S] = (frozenset(res["beta1"]), res["beta2"])
            self.signatures[key] = (frozenset(o.pair_types.values()), sig)
        return self.signatures[key]


def _strength_clause(H: PartialMapFamily, Y1: KSystem, Y2: KSystem):
    """Each g keeps the (beta) alternatives chosen for h and g o h."""
    c1, c2 = _OrbitCache(Y1), _OrbitCache(Y2)
    pairs = 0
    seen = set()
    for h in base_tuples(Y1):
        U = frozenset(h)
        _, sig1 = c1.signature(h)
        for g in H.covering(U):
            d = dict(g)
            h2 = tuple(d[a] for a in h)
            key = (c1.orbit(h).H, c2.orbit(h2).H)
            if key in seen:
                continue
            seen.add(key)
            pairs += 1
            realized2, sig2 = c2.signature(h2)
            for S, s1 in sig1.items():
                s2 = sig2.get(frozenset(S & realized2))
                if s2 != s1:
                    return False, {"h": h, "g": g, "left": _sig(s1), "right": _sig(s2)}, pairs
    return True, None, pairs


def _sig(s):
    if s is None:
        return None
    return {"beta1": sorted(s[0]), "beta2": s[1]}


def _super_clause(H: PartialMapFamily, Y1: KSystem, Y2: KSystem):
    """Each g keeps the class counts of E_Y(A, h), truncated at the thresholds."""
    cache1: dict = {}
    cache2: dict = {}

    def counts(Y, cache, A, h):
        key = (A, h)
        if key not in cache:
            orbit, fam = equivalence_family(Y, A, h)
            cache[key] = (frozenset(orbit.pair_types.values()), {S: len(P) for S, P in fam.items()})
        return cache[key]

    t1, t2 = Y1.threshold, Y2.threshold
    pairs = 0
    for A1, h1 in super_bases(Y1):
        _, n1 = counts(Y1, cache1, A1, h1)
        for g in H.covering(frozenset(h1) | A1):
            d = dict(g)
            A2 = frozenset(d[a] for a in A1)
            h2 = tuple(d[a] for a in h1)
            realized2, n2 = counts(Y2, cache2, A2, h2)
            pairs += 1
            for S, a in n1.items():
                b = n2.get(frozenset(S & realized2))
                if b is None or not (a == b or (a > t1 and b > t2)):
                    return False, {"A": sorted(A1), "h": h1, "g": g, "classes": (a, b)}, pairs
    return True, None, pairs


def check_witness(W: WitnessFamily, Y1: KSystem, Y2: KSystem, systems: tuple | None = None) -> Report:
    """Clauses (a)-(g) and the strength clauses for the witness family.

    ``systems`` may carry already computed (report1, report2) for clause (a).
    """
    H = W.H
    rep = Report(f"witness clauses, strength={W.strength}")
    if systems is None:
        if W.strength == "super":
            r1, r2 = check_super(Y1), check_super(Y2)
        else:
            r1, r2 = check_k_system(Y1), check_k_system(Y2)
            if W.strength == "ks":
                r1.extend(check_dichotomy(Y1))
                r2.extend(check_dichotomy(Y2))
    else:
        r1, r2 = systems
    rep.add("a", r1.passed and r2.passed, None if r1.passed and r2.passed else {"Y1": [r.clause for r in r1.failures()], "Y2": [r.clause for r in r2.failures()]})
    if Y1.k != Y2.k or Y1.M.vocab != Y2.M.vocab:
        rep.add("a.params", False, {"k": (Y1.k, Y2.k), "same_vocabulary": Y1.M.vocab == Y2.M.vocab})
    rel1, rel2 = Y1.relations, Y2.relations
    bad = next((g for g in H if not is_partial_iso(g, rel1, rel2, Y1.arity)), None)
    rep.add("b", bad is None, bad)
    k = Y1.k
    bad = next((g for g in H if not (Y1.I.union_of(dom(g), k) and Y2.I.union_of(ran(g), k))), None)
    rep.add("c", bad is None, bad)
    isos = bad is None and rep.get("b").passed
    v = composition_violation(H, Y1.F, H, partial_isos=isos)
    rep.add("d", v is None, None if v is None else {"g": v[0], "f1": v[1]})
    v = composition_violation(Y2.F, H, H, partial_isos=isos)
    rep.add("e", v is None, None if v is None else {"f2": v[0], "g": v[1]})
    ok, w = _extension_clause(H, Y1.I, k)
    rep.add("f", ok, w)
    ok, w = _extension_clause(H.inverse_family(), Y2.I, k)
    rep.add("g", ok, w)
    if W.strength == "ks":
        ok, w, n = _strength_clause(H, Y1, Y2)
        rep.add("iii", ok, w)
        rep.data["orbit_pairs"] = n
    elif W.strength == "super":
        ok, w, n = _super_clause(H, Y1, Y2)
        rep.add("iii", ok, w)
        rep.data["super_pairs"] = n
    return rep


# -- verdict transfer ------------------------------------------------------------------


@dataclass
class TransferResult:
    scheme: str
    left: Verdict
    right: Verdict
    predicted_equal: bool
    status: str  # "equal", "allowed-undefined" or "mismatch"
    notes: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status != "mismatch"

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "left": self.left.line(),
            "right": self.right.line(),
            "predicted": "equal unless one side is undefined earlier",
            "status": self.status,
        }


class TransferError(ValueError):
    pass


def compare_verdicts(v1: Verdict, v2: Verdict) -> str:
    if v1.value is not None and v2.value is not None:
        return "equal" if v1.value == v2.value else "mismatch"
    if v1.value is None and v2.value is None:
        return "equal"
    und, dfd = (v1, v2) if v1.value is None else (v2, v1)
    if und.stop_time is not None and dfd.stop_time is not None and und.stop_time < dfd.stop_time:
        return "allowed-undefined"
    return "mismatch"


def transfer_verdict(report: Report, M1, M2, u: InductiveScheme, chi=None, t1=None, t2=None, variant: int = 2, k=None, s=None, cap=None) -> TransferResult:
    """Run u on both structures and compare against the transfer prediction."""
    if not report.passed:
        raise TransferError("witness report does not pass")
    if k is not None:
        chi = chi if chi is not None else u.chi
        if chi is not None and max_subformula_free_vars(chi) > k:
            raise TransferError(f"chi has a subformula with more than {k} free variables")
        _, fv = metrics(u)
        worst = max((max_subformula_free_vars(f) for f in u.formulas()), default=0)
        if worst > k or (s is not None and fv > s):
            raise TransferError(f"scheme exceeds the bounds k={k}, s={s}")
    kw = {} if cap is None else {"cap": cap}
    v1, _ = run(M1, u, t1, variant, chi, **kw)
    v2, _ = run(M2, u, t2 if t2 is not None else t1, variant, chi, **kw)
    status = compare_verdicts(v1, v2)
    return TransferResult(u.name or "scheme", v1, v2, True, status)
