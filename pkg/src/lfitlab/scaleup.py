"""Apply a fixed-width predictor to wider systems through variable subsets.

For a target ``v`` every size-``n`` subset containing ``v`` is tried.  The
transitions are projected onto the subset; when two sources collapse onto the
same projected state with different ``v`` bits, the subset cannot explain
``v`` and is skipped.  Bodies predicted on the surviving subsets are mapped
back to the original variables and unioned.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterator, Sequence

import numpy as np

from lfitlab.logic import (
    Body,
    HerbrandBase,
    LabeledTransitions,
    LogicError,
    LogicProgram,
    Rule,
    TransitionSet,
    drop_subsumed,
)
from lfitlab.pipeline import Predictor


@dataclass(frozen=True)
class SubsetMapping:
    """``members[k]`` is the original variable placed at position ``k``."""

    members: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(set(self.members)) != len(self.members):
            raise LogicError(f"subset members must be distinct: {self.members}")

    @classmethod
    def for_target(cls, subset: Sequence[int], v: int) -> SubsetMapping:
        """Rotate the ascending subset so that ``v`` lands on position 0."""
        ordered = sorted(subset)
        if v not in ordered:
            raise LogicError(f"variable {v} is not in subset {ordered}")
        k = ordered.index(v)
        return cls(tuple(ordered[k:] + ordered[:k]))

    @property
    def n(self) -> int:
        return len(self.members)

    @property
    def target(self) -> int:
        return self.members[0]

    def project_states(self, states: np.ndarray) -> np.ndarray:
        out = np.zeros_like(states)
        for k, var in enumerate(self.members):
            out |= (states >> var & 1) << k
        return out

    def restore(self, rule: Rule) -> Rule:
        pos = neg = 0
        for k, positive in rule.body.literals():
            if positive:
                pos |= 1 << self.members[k]
            else:
                neg |= 1 << self.members[k]
        return Rule(self.members[rule.head], Body(pos, neg))


@dataclass(frozen=True)
class BodyBound:
    n: int
    exceeds: bool

    def __str__(self) -> str:
        return f"exceeds({self.n})" if self.exceeds else "bounded"


class _Arrays:
    def __init__(self, transitions: TransitionSet):
        self.src, self.dst = transitions.arrays()


def _project(arrays: _Arrays, mapping: SubsetMapping, v: int) -> LabeledTransitions | None:
    proj = mapping.project_states(arrays.src)
    bits = arrays.dst >> v & 1
    size = 1 << mapping.n
    seen = np.bincount(proj, minlength=size)
    ones = np.bincount(proj, weights=bits, minlength=size).astype(np.int64)
    if np.any((ones != 0) & (ones != seen)):
        return None
    observed = np.flatnonzero(seen)
    return LabeledTransitions(mapping.n, frozenset(zip(observed.tolist(), (ones[observed] > 0).astype(int).tolist())))


def project_subset(transitions: TransitionSet, mapping: SubsetMapping, v: int) -> LabeledTransitions | None:
    """Labeled transitions of ``v`` over the subset, or ``None`` when inconsistent."""
    if v not in mapping.members:
        raise LogicError(f"variable {v} is not in subset {mapping.members}")
    return _project(_Arrays(transitions), mapping, v)


def subsets_for(v: int, size: int, n_vars: int) -> Iterator[SubsetMapping]:
    """All size-``size`` subsets containing ``v``, in lexicographic order."""
    others = [i for i in range(n_vars) if i != v]
    for rest in combinations(others, size - 1):
        yield SubsetMapping.for_target((v, *rest), v)


def decompose_predict(transitions: TransitionSet, base: HerbrandBase, predictor: Predictor) -> LogicProgram:
    if transitions.base != base:
        raise LogicError("transitions are over a different Herbrand base")
    n = predictor.n
    if n is None or n > base.n:
        raise LogicError(f"predictor width {n} must be set and at most |base| = {base.n}")
    arrays = _Arrays(transitions)
    rules: set[Rule] = set()
    for v in range(base.n):
        for mapping in subsets_for(v, n, base.n):
            labeled = _project(arrays, mapping, v)
            if labeled is None:
                continue
            rules.update(mapping.restore(Rule(0, b)) for b in predictor.bodies(labeled))
    return LogicProgram(base, drop_subsumed(rules))


def min_body_bound(transitions: TransitionSet, v: int, n: int) -> BodyBound:
    """``exceeds(n)`` when no size-``n`` subset containing ``v`` is consistent."""
    if not 0 <= v < transitions.n:
        raise LogicError(f"variable index {v} out of range")
    if n >= transitions.n:
        return BodyBound(n, False)
    arrays = _Arrays(transitions)
    for mapping in subsets_for(v, n, transitions.n):
        if _project(arrays, mapping, v) is not None:
            return BodyBound(n, False)
    return BodyBound(n, True)
