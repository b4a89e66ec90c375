"""Acceptance criteria, one test per criterion, each recording a pass/fail line."""
from __future__ import annotations

import itertools
import os
import subprocess
import sys
import time
from pathlib import Path

import pytest

from conftest import record
from helpers import trace_digest
from oracles import (
    brute_extension,
    brute_random,
    fo2_depth2_invariant,
    graphs_upto_iso,
    native_universe,
    oracle_stages,
    unary_upto_iso,
)

from cptlab.logic.structure import cycle, graph
from cptlab.models import (
    canonical_system,
    canonical_witness,
    check_random,
    experiment_majority,
    experiment_transfer,
    experiment_unary,
    gen_random_graph,
    load_battery,
    paley,
    relabel,
)
from cptlab.scheme import TimingFunction, check_standard, metrics, parse_scheme, run, stages
from cptlab.symmetry import (
    SupportFamily,
    check_dichotomy,
    check_k_system,
    check_lifting,
    check_super,
    check_witness,
    full_successor,
    preservation_check,
    support_game_equiv,
    support_logic_sat,
    true_successor,
    zero_lifting,
)
from cptlab.symmetry.support_logic import depth, width

TESTS = Path(__file__).parent
GRAPH_T = TimingFunction.poly(2)
UNARY_T = TimingFunction.constant(2)


def _verdict_summary(rep) -> str:
    return ", ".join(f"{v['scheme']}={v['status']}" for v in rep.data["verdicts"])


@pytest.fixture(scope="module")
def paley_pair():
    return relabel(paley(17), 1), relabel(paley(17), 2)


# 1 -----------------------------------------------------------------------------------------


def test_c01_successor_determinism():
    start = time.perf_counter()
    here = trace_digest(range(100))
    again = trace_digest(range(100))
    env = dict(os.environ, PYTHONHASHSEED="12345")
    out = subprocess.run([sys.executable, str(TESTS / "helpers.py"), "100"], capture_output=True, text=True, env=env, check=True)
    other = out.stdout.strip().strip('"')
    elapsed = time.perf_counter() - start
    ok = here == again == other and elapsed < 10
    record("1 successor determinism", ok, f"100 pairs, 3 runs (one in a fresh interpreter), {elapsed:.1f}s")
    assert ok


# 2 -----------------------------------------------------------------------------------------


def test_c02_stage_oracle():
    start = time.perf_counter()
    compared = 0
    mismatches = []
    for kind, structures in (("unary", unary_upto_iso(4)), ("graph", graphs_upto_iso(4))):
        for entry in load_battery(kind, structures[0].vocab, counting=True):
            u = entry.scheme
            if metrics(u)[1] > 1:
                continue
            for t_fun in (TimingFunction.poly(1), TimingFunction.poly(2), TimingFunction.infinity()):
                for M in structures:
                    got = [native_universe(c) for c in stages(M, u, t_fun, 2)]
                    want = oracle_stages(M, u, t_fun(len(M)), 2)
                    compared += 1
                    if got != want:
                        mismatches.append((u.name, M.name, str(t_fun)))
    elapsed = time.perf_counter() - start
    ok = not mismatches and elapsed < 60
    record("2 stage oracle", ok, f"{compared} (scheme, structure, timing) triples, {len(mismatches)} mismatches, {elapsed:.1f}s")
    assert ok, mismatches[:5]


# 3 -----------------------------------------------------------------------------------------

CASCADE = """
scheme singleton_cascade
standard yes
psi(x; y) := x = y
phi(x) := atom(x)
phi(x) := atom(x) & exists y (x in y)
chi := exists y (!atom(y))
"""

# the same cascade with a von Neumann clock, which makes it standard in fact
CLOCKED = CASCADE.replace("standard yes", "standard yes\npsi(x; y) := !atom(y) & (x in y | x = y)")


def test_c03_budget_exactness():
    M = graph(4, [(0, 1)])
    u = parse_scheme(CASCADE, M.vocab)
    sizes = [c.size for c in stages(M, u, TimingFunction.infinity(), 1)]
    v_f1, trace = run(M, u, TimingFunction.poly(1), 3)
    v_inf, _ = run(M, u, TimingFunction.infinity(), 3)
    v2_f1, _ = run(M, u, TimingFunction.poly(1), 2)
    clocked = parse_scheme(CLOCKED, M.vocab)
    c_f1, _ = run(M, clocked, TimingFunction.poly(1), 3)
    c_inf, _ = run(M, clocked, TimingFunction.infinity(), 3)
    ok = (
        sizes == [4, 8]
        and v_f1.value is None
        and v_f1.stop_reason == "budget"
        and v_f1.stop_time == 0
        and trace.sizes == [4]
        and v_inf.stop_reason == "halted"
        and v_inf.value is True
        and v2_f1.stop_reason == "budget"
        and check_standard(clocked, M, 3)
        and (c_f1.stop_reason, c_f1.stop_time) == ("budget", 0)
        and c_inf.stop_reason == "halted"
    )
    record("3 budget exactness", ok, f"sizes {sizes}; f1 ({v_f1.line()}); infinity ({v_inf.line()}); clocked f1 ({c_f1.line()})")
    assert ok


# 4 -----------------------------------------------------------------------------------------


def _canonical_reports(M, super_: bool):
    Y = canonical_system(M, 1, 3, GRAPH_T)
    if super_:
        return Y, check_super(Y)
    rep = check_k_system(Y)
    rep.extend(check_dichotomy(Y, "definable"))
    return Y, rep


def _criterion4(M, super_: bool, label: str):
    start = time.perf_counter()
    rnd = check_random(M, 3, 3)
    oracle_rnd = brute_random(M, 3, 3)
    Y, rep = _canonical_reports(M, super_)
    elapsed = time.perf_counter() - start
    ok = rnd.passed and oracle_rnd and rep.passed and elapsed < 300
    failed = [c.clause for c in rep.failures()]
    record(label, ok, f"{M.name}: random={rnd.passed} (oracle {oracle_rnd}), {len(rep.results)} clauses, failed {failed or 'none'}, {elapsed:.0f}s")
    return ok


def test_c04_canonical_system(paley_pair):
    assert _criterion4(paley_pair[0], False, "4 canonical k-system (Paley(17) substitute)")


LITERAL_SEEDS = 300


def _literal_samples():
    return [s for s in range(LITERAL_SEEDS) if brute_random(gen_random_graph(17, 0.5, s), 3, 3)]


@pytest.mark.xfail(strict=True, reason="G(17,1/2) samples are essentially never (3,3)-random")
def test_c04_literal_random_sample():
    found = _literal_samples()
    record("4/5/9 literal G(17,1/2) sample", bool(found), f"{len(found)} of {LITERAL_SEEDS} seeds pass check_random(k=3, s=3)")
    assert found


# 5 -----------------------------------------------------------------------------------------


def _criterion5(M1, M2, counting: bool, label: str):
    start = time.perf_counter()
    battery = load_battery("graph", M1.vocab, counting=counting)
    k, s = 3, 1
    in_bounds = all(metrics(e.scheme)[1] <= s for e in battery)
    rep = experiment_transfer(M1, M2, battery, GRAPH_T, q=1, k=k, s=s, counting=counting, jobs=min(4, os.cpu_count() or 1))
    elapsed = time.perf_counter() - start
    mismatches = [v for v in rep.data["verdicts"] if v["status"] == "mismatch"]
    ok = rep.passed and in_bounds and not mismatches and len(rep.data["verdicts"]) >= 5
    record(label, ok, f"witness={rep.get('witness').passed}; {_verdict_summary(rep)}; {elapsed:.0f}s")
    return ok


def test_c05_witness_transfer(paley_pair):
    assert _criterion5(*paley_pair, False, "5 witness + transfer (Paley(17) substitute)")


def test_c05_witness_direct(paley_pair):
    M1, M2 = paley_pair
    assert brute_extension(M1, 3) and brute_extension(M2, 3)
    Y1 = canonical_system(M1, 1, 3, GRAPH_T)
    Y2 = canonical_system(M2, 1, 3, GRAPH_T)
    W = canonical_witness(M1, M2, 1, 3, "k")
    rep = check_witness(W, Y1, Y2)
    assert rep.passed, [c.clause for c in rep.failures()]


# 6 / 7 ---------------------------------------------------------------------------------------


def _criterion6(counting: bool, label: str):
    rep = experiment_unary(8, 3, 4, UNARY_T, counting=counting)
    ok = rep.passed and all(v["status"] != "mismatch" for v in rep.data["verdicts"])
    record(label, ok, _verdict_summary(rep))
    return ok


def _criterion7(counting: bool, label: str):
    rep = experiment_majority(8, UNARY_T, counting=counting)
    ok = rep.passed and rep.get("majority-differs").passed
    record(label, ok, _verdict_summary(rep))
    return ok


def test_c06_unary():
    assert _criterion6(False, "6 unary n=8 |P|=3,4")


def test_c07_majority():
    assert _criterion7(False, "7 majority n=8 |P|=4,3")


# 8 -----------------------------------------------------------------------------------------


def test_c08_lifting_laws():
    start = time.perf_counter()
    M = cycle(5)
    Y = canonical_system(M, 1, 3, TimingFunction.poly(1))
    u = load_battery("graph", M.vocab)
    singleton = next(e.scheme for e in u if e.name == "singleton")
    Z0 = zero_lifting(Y)
    full = full_successor(Z0)
    true1 = true_successor(Z0, singleton)
    true2 = true_successor(true1, singleton)
    checks = {
        "zero": check_lifting(Z0).passed,
        "full": check_lifting(full).passed,
        "true1": check_lifting(true1).passed,
        "true2": check_lifting(true2).passed,
        "preserve0": preservation_check(Z0).passed,
        "preserve_full": preservation_check(full).passed,
        "preserve_true2": preservation_check(true2).passed,
    }
    elapsed = time.perf_counter() - start
    ok = all(checks.values()) and elapsed < 120
    record("8 lifting laws (C5)", ok, f"{checks}, |full|={full.N.size}, {elapsed:.0f}s")
    assert ok


# 9 -----------------------------------------------------------------------------------------


def test_c09_counting(paley_pair):
    results = {
        "4": _criterion4(paley_pair[0], True, "9/4 canonical super system (Paley(17) substitute)"),
        "5": _criterion5(*paley_pair, True, "9/5 super witness + transfer with count_probe"),
        "6": _criterion6(True, "9/6 unary with super systems and count_probe"),
        "7": _criterion7(True, "9/7 majority with super systems and count_probe"),
    }
    record("9 counting variant", all(results.values()), str(results))
    assert all(results.values())


# 10 ----------------------------------------------------------------------------------------


def test_c10_support_game():
    start = time.perf_counter()
    gs = graphs_upto_iso(5)
    inv = {G.name: fo2_depth2_invariant(G) for G in gs}
    wrong, bad_formula, separated = [], [], 0
    pairs = list(itertools.combinations_with_replacement(gs, 2))
    for G1, G2 in pairs:
        I1, I2 = SupportFamily.by_size(len(G1), 1), SupportFamily.by_size(len(G2), 1)
        res = support_game_equiv(G1, G2, I1, I2, 2, depth=2)
        if res.equivalent != (inv[G1.name] == inv[G2.name]):
            wrong.append((G1.name, G2.name))
        if not res.equivalent:
            separated += 1
            phi = res.formula
            if not (depth(phi) <= 2 and width(phi) <= 2 and support_logic_sat(G1, I1, phi) and not support_logic_sat(G2, I2, phi)):
                bad_formula.append((G1.name, G2.name))
    elapsed = time.perf_counter() - start
    ok = not wrong and not bad_formula and elapsed < 300
    record("10 support game soundness", ok, f"{len(pairs)} pairs, {separated} separated, {len(wrong)} wrong, {len(bad_formula)} bad formulas, {elapsed:.0f}s")
    assert ok
