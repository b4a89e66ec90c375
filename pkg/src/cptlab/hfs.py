"""Interned store of urelements and hereditarily finite sets.

Every object is represented by an integer handle.  Atoms (urelements) carry
no members and are never equal to the empty set.  Sets are stored as the
sorted tuple of their member handles, so interning the same collection twice
returns the same handle and handle equality is extensional equality.
"""
from __future__ import annotations

from collections.abc import Iterable

SetHandle = int


class StoreError(ValueError):
    pass


class UniverseStore:
    """Append-only table of atoms and sets.

    Members of a set are always handles interned earlier, which keeps the
    membership graph well founded.
    """

    def __init__(self) -> None:
        self._names: list[str | None] = []
        self._members: list[tuple[SetHandle, ...] | None] = []
        self._member_sets: list[frozenset[SetHandle]] = []
        self._rank: list[int] = []
        self._atom_index: dict[str, SetHandle] = {}
        self._table: dict[tuple[SetHandle, ...], SetHandle] = {}

    def __len__(self) -> int:
        return len(self._members)

    def _key(self, h: SetHandle) -> tuple[int, int]:
        # atoms before sets, then by id
        return (0 if self._members[h] is None else 1, h)

    def intern_atom(self, name: str) -> SetHandle:
        if name in self._atom_index:
            raise StoreError(f"duplicate atom name {name!r}")
        h = len(self._members)
        self._names.append(name)
        self._members.append(None)
        self._member_sets.append(frozenset())
        self._rank.append(0)
        self._atom_index[name] = h
        return h

    def intern_set(self, members: Iterable[SetHandle]) -> SetHandle:
        uniq = set(members)
        n = len(self._members)
        for m in uniq:
            if not isinstance(m, int) or not 0 <= m < n:
                raise StoreError(f"unknown member handle {m!r}")
        key = tuple(sorted(uniq, key=self._key))
        h = self._table.get(key)
        if h is not None:
            return h
        h = n
        self._names.append(None)
        self._members.append(key)
        self._member_sets.append(frozenset(key))
        self._rank.append(1 + max((self._rank[m] for m in key), default=-1))
        self._table[key] = h
        return h

    def lookup_set(self, members: Iterable[SetHandle]) -> SetHandle | None:
        """Handle of an already interned set, or None."""
        key = tuple(sorted(set(members), key=self._key))
        return self._table.get(key)

    def atom(self, name: str) -> SetHandle:
        return self._atom_index[name]

    def atom_name(self, h: SetHandle) -> str:
        name = self._names[h]
        if name is None:
            raise StoreError(f"handle {h} is a set, not an atom")
        return name

    def has(self, h: SetHandle) -> bool:
        return isinstance(h, int) and 0 <= h < len(self._members)

    def is_atom(self, h: SetHandle) -> bool:
        return self._members[h] is None

    def members(self, h: SetHandle) -> frozenset[SetHandle]:
        return self._member_sets[h]

    def member_list(self, h: SetHandle) -> tuple[SetHandle, ...]:
        """Members in canonical order (empty tuple for atoms)."""
        return self._members[h] or ()

    def rank(self, h: SetHandle) -> int:
        # the empty set gets 1 + max(()) = 1 + (-1) = 0
        return self._rank[h]

    def transitive_closure(self, h: SetHandle) -> frozenset[SetHandle]:
        seen: set[SetHandle] = set()
        stack = list(self.member_list(h))
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            stack.extend(self.member_list(x))
        return frozenset(seen)

    def is_transitive(self, universe: Iterable[SetHandle]) -> bool:
        u = set(universe)
        return all(self._member_sets[h] <= u for h in u)

    def von_neumann(self, s: int) -> SetHandle:
        """The natural number s as {0, ..., s-1}."""
        h = self.intern_set(())
        stages = [h]
        for _ in range(s):
            h = self.intern_set(stages)
            stages.append(h)
        return stages[s]

    def format(self, h: SetHandle) -> str:
        """Nested-brace rendering over atom names, members in canonical order."""
        members = self._members[h]
        if members is None:
            return self._names[h]  # type: ignore[return-value]
        return "{" + ",".join(self.format(m) for m in members) + "}"

    def import_from(self, other: UniverseStore, h: SetHandle) -> SetHandle:
        """Re-intern a handle of another store (atoms matched by name)."""
        if other.is_atom(h):
            return self.atom(other.atom_name(h))
        return self.intern_set(self.import_from(other, m) for m in other.member_list(h))
