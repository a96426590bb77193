"""Exhaustive symbolic learner of minimal rules from labeled transitions.

Consistency of every body over ``n`` variables is computed at once with a
ternary zeta transform: the number of observed states a body matches equals
the sum, over its absent positions, of the counts for both literal signs.
Consistency is upward closed under specialisation, so a consistent body is
minimal exactly when dropping any single literal makes it inconsistent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from lfitlab.logic import (
    Body,
    LabeledTransitions,
    LogicError,
    LogicProgram,
    Rule,
    TransitionSet,
    project,
)
from lfitlab.rule_index import RuleIndexTable

BRUTE_FORCE_CAP = 12

# Ternary digit per variable: 0 absent, 1 positive, 2 negative.
ABSENT, POSITIVE, NEGATIVE = 0, 1, 2


class BruteForceCapExceeded(LogicError):
    pass


@dataclass(frozen=True)
class TargetVectors:
    """One 0/1 vector per body length; the last entry is the no-rule node."""

    vectors: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        for vec in self.vectors:
            vec.setflags(write=False)
            rules = vec[:-1]
            if vec[-1] != (0 if rules.any() else 1):
                raise LogicError("no-rule node must be set exactly when no rule of that length is")

    @property
    def n(self) -> int:
        return len(self.vectors) - 1

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TargetVectors):
            return NotImplemented
        return len(self.vectors) == len(other.vectors) and all(
            np.array_equal(a, b) for a, b in zip(self.vectors, other.vectors)
        )

    def __hash__(self) -> int:
        return hash(tuple(v.tobytes() for v in self.vectors))

    def concatenated(self) -> np.ndarray:
        return np.concatenate(self.vectors)


def consistent(body: Body, labeled: LabeledTransitions) -> bool:
    """No observed state matched by ``body`` has label 0."""
    if not body.width_ok(labeled.n):
        raise LogicError(f"body wider than n={labeled.n}")
    return all(bit == 1 for state, bit in labeled.items if body.matches(state))


def _match_counts(n: int, states: Iterable[int]) -> np.ndarray:
    """``out[d0, ..., d_{n-1}]`` = number of ``states`` matched by that body."""
    counts = np.zeros((3,) * n, dtype=np.int64)
    for s in states:
        idx = tuple(POSITIVE if s >> i & 1 else NEGATIVE for i in range(n))
        counts[idx] += 1
    for axis in range(n):
        sl_abs = [slice(None)] * n
        sl_pos = [slice(None)] * n
        sl_neg = [slice(None)] * n
        sl_abs[axis], sl_pos[axis], sl_neg[axis] = ABSENT, POSITIVE, NEGATIVE
        counts[tuple(sl_abs)] = counts[tuple(sl_pos)] + counts[tuple(sl_neg)]
    return counts


def _digits_to_body(digits: Iterable[int]) -> Body:
    pos = neg = 0
    for i, d in enumerate(digits):
        if d == POSITIVE:
            pos |= 1 << i
        elif d == NEGATIVE:
            neg |= 1 << i
    return Body(pos, neg)


def learn_minimal(labeled: LabeledTransitions, cap: int = BRUTE_FORCE_CAP) -> frozenset[Body]:
    """All minimal consistent bodies that match at least one observed state."""
    n = labeled.n
    if n > cap:
        raise BruteForceCapExceeded(f"n={n} exceeds the brute-force cap of {cap}")
    if not labeled.items:
        return frozenset()
    negatives = [s for s, b in labeled.items if b == 0]
    positives = [s for s, b in labeled.items if b == 1]
    if not positives:
        return frozenset()
    ok = _match_counts(n, negatives) == 0
    live = _match_counts(n, positives) > 0
    minimal = ok & live
    for axis in range(n):
        parent = np.take(ok, [ABSENT], axis=axis)
        has_literal = np.arange(3).reshape([3 if a == axis else 1 for a in range(n)]) != ABSENT
        minimal &= ~(has_literal & parent)
    return frozenset(_digits_to_body(d) for d in zip(*np.nonzero(minimal)))


def learn_program(transitions: TransitionSet, cap: int = BRUTE_FORCE_CAP) -> LogicProgram:
    rules = set()
    for v in range(transitions.n):
        rules.update(Rule(v, b) for b in learn_minimal(project(transitions, v), cap))
    return LogicProgram(transitions.base, frozenset(rules))


def targets_from_rules(bodies: Iterable[Body], table: RuleIndexTable) -> TargetVectors:
    vecs = [np.zeros(w, dtype=np.uint8) for w in table.widths()]
    for b in bodies:
        l, i = table.index_of(b)
        vecs[l][i] = 1
    for v in vecs:
        if not v[:-1].any():
            v[-1] = 1
    return TargetVectors(tuple(vecs))


def bodies_from_targets(targets: TargetVectors, table: RuleIndexTable) -> frozenset[Body]:
    return frozenset(
        table.body_at(l, int(i))
        for l, vec in enumerate(targets.vectors)
        for i in np.flatnonzero(vec[:-1])
    )
