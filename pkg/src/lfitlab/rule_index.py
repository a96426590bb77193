"""Indexing of the finite rule-body space, partitioned by body length.

Within length ``l`` the bodies are ordered by variable subset (ascending index
tuples, lexicographic) and then by negation mask, counted in binary with the
subset's lowest variable as least significant bit.  So for ``n = 3``::

    l=1: v0, ¬v0, v1, ¬v1, v2, ¬v2
    l=2: v0∧v1, ¬v0∧v1, v0∧¬v1, ¬v0∧¬v1, v0∧v2, ...

The ordering only has to be fixed: labels and decoding share it.
"""

from __future__ import annotations

from functools import cached_property
from itertools import combinations
from math import comb

from lfitlab.logic import Body, LogicError


class RuleIndexError(LogicError, IndexError):
    pass


def body_count(n: int, l: int) -> int:
    """Number of bodies of length exactly ``l`` over ``n`` variables."""
    if n < 0 or not 0 <= l <= n:
        raise RuleIndexError(f"body length {l} not in 0..{n}")
    return comb(n, l) << l


def _subset_rank(n: int, members: list[int]) -> int:
    l = len(members)
    rank, prev = 0, -1
    for j, c in enumerate(members):
        for x in range(prev + 1, c):
            rank += comb(n - 1 - x, l - 1 - j)
        prev = c
    return rank


def _subset_unrank(n: int, l: int, rank: int) -> list[int]:
    out: list[int] = []
    x = 0
    for j in range(l):
        while True:
            block = comb(n - 1 - x, l - 1 - j)
            if rank < block:
                break
            rank -= block
            x += 1
        out.append(x)
        x += 1
    return out


def body_at(n: int, l: int, idx: int) -> Body:
    count = body_count(n, l)
    if not 0 <= idx < count:
        raise RuleIndexError(f"index {idx} out of range for n={n}, l={l} (size {count})")
    subset = _subset_unrank(n, l, idx >> l)
    negmask = idx & ((1 << l) - 1)
    pos = neg = 0
    for j, var in enumerate(subset):
        if negmask >> j & 1:
            neg |= 1 << var
        else:
            pos |= 1 << var
    return Body(pos, neg)


def index_of(body: Body, n: int) -> tuple[int, int]:
    """Inverse of :func:`body_at`: ``(length, position)`` of ``body``."""
    if not body.width_ok(n):
        raise RuleIndexError(f"body {body} wider than n={n}")
    members = [i for i in range(n) if body.mask >> i & 1]
    negmask = 0
    for j, var in enumerate(members):
        if body.neg >> var & 1:
            negmask |= 1 << j
    l = len(members)
    return l, (_subset_rank(n, members) << l) | negmask


class RuleIndexTable:
    """Materialised per-length body tables for a fixed ``n``."""

    def __init__(self, n: int):
        if n < 0:
            raise RuleIndexError("n must be non-negative")
        self.n = n

    @cached_property
    def tables(self) -> tuple[tuple[Body, ...], ...]:
        out = []
        for l in range(self.n + 1):
            row = []
            for subset in combinations(range(self.n), l):
                for negmask in range(1 << l):
                    pos = neg = 0
                    for j, var in enumerate(subset):
                        if negmask >> j & 1:
                            neg |= 1 << var
                        else:
                            pos |= 1 << var
                    row.append(Body(pos, neg))
            out.append(tuple(row))
        return tuple(out)

    @cached_property
    def _positions(self) -> dict[Body, tuple[int, int]]:
        return {b: (l, i) for l, row in enumerate(self.tables) for i, b in enumerate(row)}

    def widths(self) -> list[int]:
        """Head widths including the trailing no-rule node."""
        return [body_count(self.n, l) + 1 for l in range(self.n + 1)]

    def body_at(self, l: int, idx: int) -> Body:
        try:
            if l < 0 or idx < 0:
                raise IndexError
            return self.tables[l][idx]
        except IndexError:
            raise RuleIndexError(f"no body at (l={l}, idx={idx}) for n={self.n}") from None

    def index_of(self, body: Body) -> tuple[int, int]:
        try:
            return self._positions[body]
        except KeyError:
            raise RuleIndexError(f"body {body} not representable for n={self.n}") from None

    def all_bodies(self) -> list[Body]:
        return [b for row in self.tables for b in row]

    def __len__(self) -> int:
        return 3**self.n
