"""Finite collections of dyadic intervals."""

from __future__ import annotations

from functools import cached_property
from typing import Iterable, Iterator

from .dyadic import DyadicInterval, HaarlabError


class EmptyCollectionError(HaarlabError):
    pass


class IntervalCollection:
    """An immutable finite set of dyadic intervals, iterated in (level, index) order."""

    def __init__(self, intervals: Iterable[DyadicInterval] = ()):
        items = frozenset(intervals)
        for item in items:
            if not isinstance(item, DyadicInterval):
                raise HaarlabError(f"not a DyadicInterval: {item!r}")
        self._set = items
        self._sorted = tuple(sorted(items))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "IntervalCollection":
        return cls(DyadicInterval(m, k) for m, k in pairs)

    def __iter__(self) -> Iterator[DyadicInterval]:
        return iter(self._sorted)

    def __len__(self) -> int:
        return len(self._sorted)

    def __bool__(self) -> bool:
        return bool(self._sorted)

    def __contains__(self, item) -> bool:
        return item in self._set

    def __eq__(self, other) -> bool:
        if isinstance(other, IntervalCollection):
            return self._set == other._set
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self._set)

    def __repr__(self) -> str:
        if len(self) <= 6:
            inner = ", ".join(f"({I.level},{I.index})" for I in self)
            return f"IntervalCollection([{inner}])"
        return f"IntervalCollection(<{len(self)} intervals, max_level={self.max_level}>)"

    def __or__(self, other: "IntervalCollection") -> "IntervalCollection":
        return IntervalCollection(self._set | other._set)

    def __sub__(self, other) -> "IntervalCollection":
        other_set = other._set if isinstance(other, IntervalCollection) else frozenset(other)
        return IntervalCollection(self._set - other_set)

    def __le__(self, other: "IntervalCollection") -> bool:
        return self._set <= other._set

    @property
    def intervals(self) -> tuple[DyadicInterval, ...]:
        return self._sorted

    @property
    def max_level(self) -> int:
        if not self._sorted:
            raise EmptyCollectionError("empty collection has no max level")
        return self._sorted[-1].level

    @cached_property
    def measure_units(self) -> dict[DyadicInterval, int]:
        """Measure of each member in units of ``2**-max_level``."""
        top = self.max_level
        return {I: 1 << (top - I.level) for I in self._sorted}

    @cached_property
    def parent_map(self) -> dict[DyadicInterval, DyadicInterval | None]:
        """Smallest member strictly containing each member (None for maximal members)."""
        parents: dict[DyadicInterval, DyadicInterval | None] = {}
        members = self._set
        for J in self._sorted:
            parent = None
            idx = J.index
            for level in range(J.level - 1, -1, -1):
                idx >>= 1
                cand = DyadicInterval(level, idx)
                if cand in members:
                    parent = cand
                    break
            parents[J] = parent
        return parents

    @cached_property
    def children_map(self) -> dict[DyadicInterval, tuple[DyadicInterval, ...]]:
        """Maximal members strictly inside each member, in (level, index) order."""
        children: dict[DyadicInterval, list[DyadicInterval]] = {I: [] for I in self._sorted}
        for J, parent in self.parent_map.items():
            if parent is not None:
                children[parent].append(J)
        return {I: tuple(c) for I, c in children.items()}

    @cached_property
    def depth_map(self) -> dict[DyadicInterval, int]:
        """Number of members strictly containing each member (its generation index)."""
        depth: dict[DyadicInterval, int] = {}
        parents = self.parent_map
        for J in self._sorted:  # parents precede children in level order
            parent = parents[J]
            depth[J] = 0 if parent is None else depth[parent] + 1
        return depth

    def restrict(self, interval: DyadicInterval) -> "IntervalCollection":
        """``I ∩ E``: the members contained in ``interval``."""
        return IntervalCollection(J for J in self._sorted if interval.contains(J))

    def strict_ancestors(self, J: DyadicInterval) -> list[DyadicInterval]:
        """Members strictly containing ``J``, innermost first."""
        chain = []
        parent = self.parent_map[J] if J in self._set else None
        if J not in self._set:
            idx = J.index
            for level in range(J.level - 1, -1, -1):
                idx >>= 1
                cand = DyadicInterval(level, idx)
                if cand in self._set:
                    parent = cand
                    break
        while parent is not None:
            chain.append(parent)
            parent = self.parent_map[parent]
        return chain


def full_grid(n: int) -> IntervalCollection:
    """All dyadic intervals of measure at least ``2**-n``."""
    if n < 0:
        raise HaarlabError("n must be non-negative")
    return IntervalCollection(DyadicInterval(m, k) for m in range(n + 1) for k in range(1 << m))
