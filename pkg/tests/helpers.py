"""Shared generators for the test suite."""
from __future__ import annotations

import hashlib
import json
import random

from cptlab.logic.structure import Vocabulary
from cptlab.models import gen_random
from cptlab.scheme import TimingFunction, parse_scheme, run

VOCAB = Vocabulary.of({"P": 1, "E": 2})

PSI = [
    "psi(x; y) := x = y",
    "psi(x; y) := x != y & atom(x)",
    "psi(x; y) := atom(y) & E(x, y)",
    "psi(x; y) := x in y | P(x)",
    "psi(x) := atom(x) & P(x)",
    "psi(x) := exists z (x in z)",
    "psi(x; y) := !atom(x) & forall z (z in x -> z in y)",
]
PHI = [
    "phi(x) := atom(x)",
    "phi(x) := atom(x) & exists y (x in y)",
    "phi(x) := P(x) | !atom(x)",
    "phi(x) := atom(x) & (P(x) | DP0(x))",
    "phi(x) := HP1(x) | (atom(x) & exists y (E(x, y)))",
]
CHI = [
    "exists x (!atom(x) & exists y (y in x))",
    "forall x (atom(x) -> P(x))",
    "exists x exists y (E(x, y) & !P(x))",
]
TIMINGS = ["poly 1", "poly 2", "const 6", "infinity"]


def random_pair(seed: int):
    rng = random.Random(seed)
    n = rng.randint(1, 5)
    M = gen_random(n, VOCAB, {"P": 0.5, "E": 0.3}, seed)
    lines = [f"scheme r{seed}"]
    lines += rng.sample(PSI, rng.randint(1, 3))
    lines += [PHI[0], PHI[1]] if rng.random() < 0.5 else rng.sample(PHI[:3], 2)
    if rng.random() < 0.3:
        lines.append(PHI[3])
        lines.append(PHI[4])
    lines.append("chi := " + rng.choice(CHI))
    u = parse_scheme("\n".join(lines), VOCAB)
    t_fun = TimingFunction.parse(rng.choice(TIMINGS))
    variant = rng.choice((1, 2))
    return M, u, t_fun, variant


def trace_digest(seeds) -> str:
    h = hashlib.sha256()
    for seed in seeds:
        M, u, t_fun, variant = random_pair(seed)
        verdict, trace = run(M, u, t_fun, variant, cap=8)
        h.update(verdict.line().encode())
        h.update(trace.to_jsonl().encode())
    return h.hexdigest()


if __name__ == "__main__":
    import sys

    print(json.dumps(trace_digest(range(int(sys.argv[1])))))
