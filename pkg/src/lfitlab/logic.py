"""Propositional state-transition programs and their synchronous semantics.

States are integer bitmasks: bit ``i`` is set when variable ``i`` of the
Herbrand base is true.  A rule body is a pair of disjoint masks (positive and
negative literals), which makes matching two AND operations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

ENUMERATION_CAP = 20


class LogicError(ValueError):
    """Invalid logic-core value or mismatched operands."""


class EnumerationTooLarge(LogicError):
    pass


class Lit(IntEnum):
    ABSENT = 0
    POS = 1
    NEG = -1


@dataclass(frozen=True)
class HerbrandBase:
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if any(not isinstance(x, str) or not x for x in names):
            raise LogicError("variable names must be non-empty strings")
        if len(set(names)) != len(names):
            raise LogicError(f"duplicate variable names in {names}")

    @classmethod
    def of_size(cls, n: int, prefix: str = "v") -> HerbrandBase:
        return cls(tuple(f"{prefix}{i}" for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise LogicError(f"unknown variable {name!r}") from None

    def check_state(self, state: int) -> int:
        if state < 0 or state >> self.n:
            raise LogicError(f"state {state:#b} has bits outside width {self.n}")
        return state

    def format_state(self, state: int) -> str:
        """Render a state as the set of true variable names, e.g. ``{q,r}``."""
        return "{" + ",".join(x for i, x in enumerate(self.names) if state >> i & 1) + "}"

    def __len__(self) -> int:
        return self.n


@dataclass(frozen=True, order=True)
class Body:
    """Conjunction of literals; ``pos`` and ``neg`` are disjoint variable masks."""

    pos: int = 0
    neg: int = 0

    def __post_init__(self) -> None:
        if self.pos < 0 or self.neg < 0:
            raise LogicError("body masks must be non-negative")
        if self.pos & self.neg:
            raise LogicError("a variable cannot be both positive and negative in one body")

    @classmethod
    def from_ternary(cls, vec: Sequence[int]) -> Body:
        pos = neg = 0
        for i, x in enumerate(vec):
            if x == Lit.POS:
                pos |= 1 << i
            elif x == Lit.NEG:
                neg |= 1 << i
            elif x != Lit.ABSENT:
                raise LogicError(f"ternary entry must be -1, 0 or 1, got {x!r}")
        return cls(pos, neg)

    @classmethod
    def of(cls, pos: Iterable[int] = (), neg: Iterable[int] = ()) -> Body:
        p = n = 0
        for i in pos:
            p |= 1 << i
        for i in neg:
            n |= 1 << i
        return cls(p, n)

    def to_ternary(self, n: int) -> tuple[Lit, ...]:
        return tuple(
            Lit.POS if self.pos >> i & 1 else Lit.NEG if self.neg >> i & 1 else Lit.ABSENT
            for i in range(n)
        )

    @property
    def mask(self) -> int:
        return self.pos | self.neg

    @property
    def length(self) -> int:
        return self.mask.bit_count()

    def width_ok(self, n: int) -> bool:
        return not (self.mask >> n)

    def matches(self, state: int) -> bool:
        return (state & self.pos) == self.pos and not (state & self.neg)

    def generalizes(self, other: Body) -> bool:
        """True when every literal of ``self`` also occurs in ``other``."""
        return (self.pos & ~other.pos) == 0 and (self.neg & ~other.neg) == 0

    def literals(self) -> Iterator[tuple[int, bool]]:
        """Yield ``(variable, positive)`` in ascending variable order."""
        m = self.mask
        while m:
            low = m & -m
            i = low.bit_length() - 1
            yield i, bool(self.pos & low)
            m ^= low

    def permuted(self, forward: Sequence[int]) -> Body:
        """Move the literal on variable ``i`` to position ``forward[i]``."""
        pos = neg = 0
        for i, positive in self.literals():
            if positive:
                pos |= 1 << forward[i]
            else:
                neg |= 1 << forward[i]
        return Body(pos, neg)

    def render(self, base: HerbrandBase, conj: str = " ∧ ", neg: str = "¬") -> str:
        if not self.mask:
            return "⊤"
        return conj.join(("" if p else neg) + base.names[i] for i, p in self.literals())


@dataclass(frozen=True, order=True)
class Rule:
    head: int
    body: Body = field(default_factory=Body)

    def __post_init__(self) -> None:
        if self.head < 0:
            raise LogicError("rule head must be a variable index")

    @property
    def positives(self) -> int:
        return self.body.pos

    @property
    def negatives(self) -> int:
        return self.body.neg

    def fires(self, state: int) -> bool:
        return self.body.matches(state)

    def render(self, base: HerbrandBase) -> str:
        head = base.names[self.head]
        if not self.body.mask:
            return f"{head}."
        return f"{head} ← {self.body.render(base)}"


@dataclass(frozen=True)
class LogicProgram:
    base: HerbrandBase
    rules: frozenset[Rule] = frozenset()

    def __post_init__(self) -> None:
        rules = frozenset(self.rules)
        object.__setattr__(self, "rules", rules)
        n = self.base.n
        for r in rules:
            if r.head >= n or not r.body.width_ok(n):
                raise LogicError(f"rule {r} refers to a variable outside the base of size {n}")

    @property
    def n(self) -> int:
        return self.base.n

    def sorted_rules(self) -> list[Rule]:
        """Rules ordered by head, then body length, then literal masks."""
        from lfitlab.rule_index import index_of

        return sorted(self.rules, key=lambda r: (r.head, index_of(r.body, self.n), r.body))

    def rules_for(self, head: int) -> frozenset[Body]:
        return frozenset(r.body for r in self.rules if r.head == head)

    def without(self, *rules: Rule) -> LogicProgram:
        return LogicProgram(self.base, self.rules - set(rules))

    def __len__(self) -> int:
        return len(self.rules)

    def __str__(self) -> str:
        return "\n".join(r.render(self.base) for r in self.sorted_rules())


class TransitionSet(Mapping[int, int]):
    """Deterministic partial map from source states to successor states."""

    __slots__ = ("base", "_pairs")

    def __init__(self, base: HerbrandBase, pairs: Mapping[int, int] | Iterable[tuple[int, int]] = ()):
        self.base = base
        items = pairs.items() if isinstance(pairs, Mapping) else pairs
        d: dict[int, int] = {}
        for src, dst in items:
            src, dst = int(src), int(dst)
            base.check_state(src)
            base.check_state(dst)
            if src in d and d[src] != dst:
                raise LogicError(f"source state {src:#b} has two successors")
            d[src] = dst
        self._pairs = MappingProxyType(d)

    @classmethod
    def _trusted(cls, base: HerbrandBase, d: dict[int, int]) -> TransitionSet:
        obj = cls.__new__(cls)
        obj.base = base
        obj._pairs = MappingProxyType(d)
        return obj

    @property
    def n(self) -> int:
        return self.base.n

    def __getitem__(self, src: int) -> int:
        return self._pairs[src]

    def __iter__(self) -> Iterator[int]:
        return iter(self._pairs)

    def __len__(self) -> int:
        return len(self._pairs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TransitionSet):
            return NotImplemented
        return self.base == other.base and dict(self._pairs) == dict(other._pairs)

    def __hash__(self) -> int:
        return hash((self.base, frozenset(self._pairs.items())))

    def __repr__(self) -> str:
        return f"TransitionSet(n={self.n}, pairs={len(self)})"

    def restrict(self, sources: Iterable[int]) -> TransitionSet:
        return TransitionSet._trusted(self.base, {s: self._pairs[s] for s in sources})

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Sources and targets as aligned int64 arrays, sorted by source."""
        src = np.fromiter(sorted(self._pairs), dtype=np.int64, count=len(self._pairs))
        dst = np.fromiter((self._pairs[s] for s in src.tolist()), dtype=np.int64, count=len(src))
        return src, dst


@dataclass(frozen=True)
class LabeledTransitions:
    """Observed states of width ``n`` each paired with one successor bit."""

    n: int
    items: frozenset[tuple[int, int]] = frozenset()

    def __post_init__(self) -> None:
        items = frozenset((int(s), int(b)) for s, b in self.items)
        object.__setattr__(self, "items", items)
        seen = set()
        for s, b in items:
            if b not in (0, 1):
                raise LogicError(f"label must be 0 or 1, got {b}")
            if s < 0 or s >> self.n:
                raise LogicError(f"state {s:#b} has bits outside width {self.n}")
            if s in seen:
                raise LogicError(f"state {s:#b} appears with both labels")
            seen.add(s)

    @classmethod
    def from_mapping(cls, n: int, labels: Mapping[int, int]) -> LabeledTransitions:
        return cls(n, frozenset(labels.items()))

    def as_dict(self) -> dict[int, int]:
        return dict(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self.items))


def _check_enumerable(n: int, cap: int) -> None:
    if n > cap:
        raise EnumerationTooLarge(f"2^{n} states exceeds the enumeration cap of 2^{cap}")


def tp_step(program: LogicProgram, state: int) -> int:
    """One synchronous step: the set of heads whose bodies hold in ``state``."""
    program.base.check_state(state)
    out = 0
    for r in program.rules:
        if r.body.matches(state):
            out |= 1 << r.head
    return out


def successor_array(program: LogicProgram, states: np.ndarray) -> np.ndarray:
    """Vectorised ``tp_step`` over an int64 array of states."""
    out = np.zeros(states.shape, dtype=np.int64)
    for r in program.rules:
        pos, neg = r.body.pos, r.body.neg
        fired = ((states & pos) == pos) & ((states & neg) == 0)
        out |= fired.astype(np.int64) << r.head
    return out


def all_successors(program: LogicProgram, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """``out[s]`` is the successor of state ``s`` for every state of the base."""
    _check_enumerable(program.n, cap)
    return successor_array(program, np.arange(1 << program.n, dtype=np.int64))


def full_transitions(program: LogicProgram, cap: int = ENUMERATION_CAP) -> TransitionSet:
    succ = all_successors(program, cap)
    return TransitionSet._trusted(program.base, dict(enumerate(succ.tolist())))


def project(transitions: TransitionSet, v: int) -> LabeledTransitions:
    """Per-variable view: each source paired with whether ``v`` is on next."""
    if not 0 <= v < transitions.n:
        raise LogicError(f"variable index {v} out of range for n={transitions.n}")
    return LabeledTransitions(
        transitions.n, frozenset((s, t >> v & 1) for s, t in transitions.items())
    )


def subsumes(r1: Rule, r2: Rule) -> bool:
    """``r1`` is at least as general as ``r2`` (same head, literal sets included)."""
    return r1.head == r2.head and r1.body.generalizes(r2.body)


def drop_subsumed(rules: Iterable[Rule]) -> frozenset[Rule]:
    """Keep only rules not strictly subsumed by another rule in the collection."""
    rules = set(rules)
    by_head: dict[int, list[Rule]] = {}
    for r in rules:
        by_head.setdefault(r.head, []).append(r)
    keep = set()
    for group in by_head.values():
        group.sort(key=lambda r: r.body.length)
        kept: list[Rule] = []
        for r in group:
            if not any(k.body.generalizes(r.body) for k in kept):
                kept.append(r)
        keep.update(kept)
    return frozenset(keep)


def program_mse(p: LogicProgram, q: LogicProgram, cap: int = ENUMERATION_CAP) -> float:
    """Mean squared successor-bit difference over every state and variable."""
    if p.base != q.base:
        raise LogicError("programs are over different Herbrand bases")
    n = p.n
    if n == 0:
        return 0.0
    diff = all_successors(p, cap) ^ all_successors(q, cap)
    flipped = int(sum(int(np.count_nonzero(diff >> i & 1)) for i in range(n)))
    return flipped / ((1 << n) * n)
