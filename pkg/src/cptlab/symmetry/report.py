"""Clause-by-clause check reports, emitted as line-delimited JSON."""
from __future__ import annotations

import json
from dataclasses import dataclass, field


@dataclass
class ClauseResult:
    clause: str
    passed: bool
    witness: object = None
    note: str = ""

    def to_dict(self) -> dict:
        d = {"clause": self.clause, "pass": self.passed, "witness": _jsonable(self.witness)}
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class Report:
    title: str = ""
    results: list[ClauseResult] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def add(self, clause: str, passed: bool, witness=None, note: str = "") -> ClauseResult:
        r = ClauseResult(clause, bool(passed), witness, note)
        self.results.append(r)
        return r

    def extend(self, other: Report, prefix: str = "") -> None:
        for r in other.results:
            self.results.append(ClauseResult(prefix + r.clause, r.passed, r.witness, r.note))

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def get(self, clause: str) -> ClauseResult:
        for r in self.results:
            if r.clause == clause:
                return r
        raise KeyError(clause)

    def failures(self) -> list[ClauseResult]:
        return [r for r in self.results if not r.passed]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict(), sort_keys=True) + "\n" for r in self.results)

    def __str__(self) -> str:
        lines = [self.title] if self.title else []
        for r in self.results:
            lines.append(f"  [{'pass' if r.passed else 'FAIL'}] {r.clause}" + (f": {r.witness}" if not r.passed else ""))
        return "\n".join(lines)


def _jsonable(x):
    if x is None or isinstance(x, (bool, int, float, str)):
        return x
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = [_jsonable(v) for v in x]
        if isinstance(x, (set, frozenset)):
            items.sort(key=repr)
        return items
    return repr(x)
