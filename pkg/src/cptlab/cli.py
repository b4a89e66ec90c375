"""Command line entry point: ``cptlab <subcommand> ...``.

Exit status is 0 when every reported clause passes, 1 on a failed check or
an input error, and 2 on usage errors or missing files.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .logic.parser import parse_formula
from .logic.structure import Vocabulary, load_structure
from .models import (
    PreconditionError,
    check_random,
    experiment_majority,
    experiment_transfer,
    experiment_unary,
    gen_random,
    gen_random_graph,
    load_battery,
)
from .scheme import SchemeError, TimingFunction, load_scheme, run
from .symmetry.io import load_system, load_witness
from .symmetry.lifting import check_lifting, full_successor, preservation_check, true_successor, zero_lifting
from .symmetry.maps import SupportFamily
from .symmetry.report import Report
from .symmetry.support_logic import support_game_equiv, to_str
from .symmetry.system import check_dichotomy, check_k_system, check_super
from .symmetry.witness import check_witness


class _Missing(Exception):
    pass


def _path(p: str) -> Path:
    path = Path(p)
    if not path.exists():
        raise _Missing(p)
    return path


def _timing(text: str) -> TimingFunction:
    return TimingFunction.parse(text)


def _emit(rep: Report, out) -> None:
    out.write(rep.to_jsonl())


def cmd_run(args, out) -> int:
    M = load_structure(_path(args.model))
    u = load_scheme(_path(args.scheme), M.vocab)
    chi = parse_formula(args.chi, M.vocab, u.dialect) if args.chi else None
    verdict, trace = run(M, u, _timing(args.timing), args.variant, chi, cap=args.cap)
    if args.trace_out:
        Path(args.trace_out).write_text(trace.to_jsonl())
    out.write(verdict.line() + "\n")
    return 0


def cmd_check_system(args, out) -> int:
    Y = load_system(_path(args.system))
    if args.super:
        rep = check_super(Y, dichotomy=args.dichotomy_mode == "definable")
        if args.dichotomy_mode == "exhaustive":
            rep.extend(check_dichotomy(Y, "exhaustive"))
    else:
        rep = check_k_system(Y)
        rep.extend(check_dichotomy(Y, args.dichotomy_mode))
    _emit(rep, out)
    return 0 if rep.passed else 1


def cmd_check_witness(args, out) -> int:
    W, Y1, Y2 = load_witness(_path(args.witness))
    if args.strength:
        W.strength = args.strength
    rep = check_witness(W, Y1, Y2)
    _emit(rep, out)
    return 0 if rep.passed else 1


def cmd_check_lifting(args, out) -> int:
    Y = load_system(_path(args.system))
    u = load_scheme(_path(args.scheme), Y.M.vocab) if args.scheme else None
    Z = zero_lifting(Y, u)
    rep = Report("lifting")
    rep.extend(check_lifting(Z), "0:")
    for step in range(1, args.steps + 1):
        Z = true_successor(Z, u) if u is not None else full_successor(Z)
        rep.extend(check_lifting(Z), f"{step}:")
    if args.preservation:
        rep.extend(preservation_check(Z), "preservation:")
    _emit(rep, out)
    return 0 if rep.passed else 1


def _vocab(text: str) -> Vocabulary:
    preds = {}
    for item in text.split(","):
        name, _, ar = item.strip().partition("/")
        preds[name] = int(ar or 1)
    return Vocabulary.of(preds)


def cmd_gen_random(args, out) -> int:
    if args.vocab == "graph":
        M = gen_random_graph(args.n, args.prob, args.seed)
    else:
        M = gen_random(args.n, _vocab(args.vocab), args.prob, args.seed)
    text = M.to_text()
    if args.out:
        Path(args.out).write_text(text)
    else:
        out.write(text)
    if args.check_k:
        rep = check_random(M, args.check_k, _timing(args.check_s))
        (sys.stderr if not args.out else out).write(rep.to_jsonl())
        return 0 if rep.passed else 1
    return 0


def cmd_experiment(args, out) -> int:
    t_fun = _timing(args.timing)
    if args.name == "unary":
        rep = experiment_unary(args.n, args.p1, args.p2, t_fun, counting=args.counting, jobs=args.jobs)
    elif args.name == "majority":
        rep = experiment_majority(args.n, t_fun, counting=args.counting, jobs=args.jobs)
    else:
        if not args.left or not args.right:
            raise PreconditionError("transfer needs --left and --right models")
        M1, M2 = load_structure(_path(args.left)), load_structure(_path(args.right))
        if M1.vocab != M2.vocab:
            raise PreconditionError("structures have different vocabularies")
        if args.battery in ("graph", "unary"):
            battery = load_battery(args.battery, M1.vocab, args.counting)
        else:
            battery = load_battery("", M1.vocab, args.counting, directory=_path(args.battery))
        rep = experiment_transfer(M1, M2, battery, t_fun, counting=args.counting, jobs=args.jobs)
    _emit(rep, out)
    for v in sorted(rep.data.get("verdicts", []), key=lambda d: d["scheme"]):
        out.write(json.dumps(v, sort_keys=True) + "\n")
    return 0 if rep.passed else 1


def cmd_game(args, out) -> int:
    M1, M2 = load_structure(_path(args.left)), load_structure(_path(args.right))
    I1 = SupportFamily.by_size(len(M1), args.q)
    I2 = SupportFamily.by_size(len(M2), args.q)
    res = support_game_equiv(M1, M2, I1, I2, args.k, args.depth)
    line = {"equivalent": res.equivalent, "rounds": res.rounds}
    if res.equivalent:
        line["family_size"] = len(res.family)
    else:
        line["formula"] = to_str(res.formula) if res.formula is not None else None
    out.write(json.dumps(line, sort_keys=True) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cptlab", description="Inductive schemes over hereditarily finite sets and their symmetry systems.")
    p.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for independent battery runs")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scheme on a model and print the verdict")
    r.add_argument("model")
    r.add_argument("scheme")
    r.add_argument("--variant", type=int, choices=(1, 2, 3, 4), default=2)
    r.add_argument("--timing", default="poly 1")
    r.add_argument("--chi", default=None, help="sentence overriding the scheme's chi")
    r.add_argument("--trace-out", default=None)
    r.add_argument("--cap", type=int, default=2**16, help="iteration cap")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check-system", help="check a system file")
    c.add_argument("system")
    c.add_argument("--super", action="store_true")
    c.add_argument("--dichotomy-mode", choices=("definable", "exhaustive"), default="definable")
    c.set_defaults(func=cmd_check_system)

    w = sub.add_parser("check-witness", help="check a witness file")
    w.add_argument("witness")
    w.add_argument("--strength", choices=("k", "ks", "super"), default=None)
    w.set_defaults(func=cmd_check_witness)

    li = sub.add_parser("check-lifting", help="check the 0-lifting of a system and its successors")
    li.add_argument("system")
    li.add_argument("--scheme", default=None, help="use true successors of this scheme instead of full successors")
    li.add_argument("--steps", type=int, default=1)
    li.add_argument("--preservation", action="store_true")
    li.set_defaults(func=cmd_check_lifting)

    g = sub.add_parser("gen-random", help="generate a random structure")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--prob", type=float, default=0.5)
    g.add_argument("--vocab", default="graph", help="'graph' or a list like P/1,E/2")
    g.add_argument("--out", default=None)
    g.add_argument("--check-k", type=int, default=None, help="also run the randomness check with this k")
    g.add_argument("--check-s", default="const 3")
    g.set_defaults(func=cmd_gen_random)

    e = sub.add_parser("experiment", help="prepackaged transfer experiments")
    e.add_argument("name", choices=("unary", "majority", "transfer"))
    e.add_argument("--n", type=int, default=8)
    e.add_argument("--p1", type=int, default=3)
    e.add_argument("--p2", type=int, default=4)
    e.add_argument("--timing", default="const 2")
    e.add_argument("--counting", action="store_true", help="super systems and cardinality schemes")
    e.add_argument("--left", default=None)
    e.add_argument("--right", default=None)
    e.add_argument("--battery", default="graph", help="'graph', 'unary' or a directory of scheme files")
    e.set_defaults(func=cmd_experiment)

    gm = sub.add_parser("game", help="decide block-logic equivalence by the support game")
    gm.add_argument("left")
    gm.add_argument("right")
    gm.add_argument("--k", type=int, default=2)
    gm.add_argument("--q", type=int, default=1, help="supports are the sets of size <= q")
    gm.add_argument("--depth", type=int, default=None)
    gm.set_defaults(func=cmd_game)
    return p


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except _Missing as exc:
        sys.stderr.write(f"cptlab: no such file: {exc}\n")
        return 2
    except (ValueError, SchemeError, PreconditionError) as exc:
        sys.stderr.write(f"cptlab: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
