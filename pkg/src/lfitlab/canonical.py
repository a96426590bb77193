"""Variable renaming so the variable being learned sits at position 0.

Per-variable inputs are permuted before they reach a learner and the learned
bodies are mapped back with the inverse permutation afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Sequence

from lfitlab.logic import (
    HerbrandBase,
    LabeledTransitions,
    LogicError,
    LogicProgram,
    Rule,
    TransitionSet,
    project,
)


@dataclass(frozen=True)
class VarPermutation:
    """``forward[i]`` is the new position of variable ``i``."""

    forward: tuple[int, ...]

    def __post_init__(self) -> None:
        fwd = tuple(int(x) for x in self.forward)
        object.__setattr__(self, "forward", fwd)
        if sorted(fwd) != list(range(len(fwd))):
            raise LogicError(f"{fwd} is not a permutation of 0..{len(fwd) - 1}")

    @classmethod
    def identity(cls, n: int) -> VarPermutation:
        return cls(tuple(range(n)))

    @classmethod
    def from_order(cls, order: Sequence[int]) -> VarPermutation:
        """Permutation placing variable ``order[k]`` at position ``k``."""
        fwd = [0] * len(order)
        for k, var in enumerate(order):
            fwd[var] = k
        return cls(tuple(fwd))

    @property
    def n(self) -> int:
        return len(self.forward)

    def inverse(self) -> VarPermutation:
        inv = [0] * self.n
        for i, j in enumerate(self.forward):
            inv[j] = i
        return VarPermutation(tuple(inv))

    def compose(self, then: VarPermutation) -> VarPermutation:
        """Apply ``self`` first, then ``then``."""
        return VarPermutation(tuple(then.forward[j] for j in self.forward))

    def apply_state(self, state: int) -> int:
        out = 0
        for i, j in enumerate(self.forward):
            if state >> i & 1:
                out |= 1 << j
        return out

    def apply_rule(self, rule: Rule) -> Rule:
        return Rule(self.forward[rule.head], rule.body.permuted(self.forward))


@dataclass(frozen=True)
class CanonicalExample:
    labeled: LabeledTransitions
    omega: VarPermutation
    target: int

    head = 0


def rotation_for(v: int, n: int) -> VarPermutation:
    if not 0 <= v < n:
        raise LogicError(f"variable index {v} out of range for n={n}")
    return VarPermutation(tuple((i - v) % n for i in range(n)))


def permute_labeled(labeled: LabeledTransitions, omega: VarPermutation) -> LabeledTransitions:
    if labeled.n != omega.n:
        raise LogicError(f"width mismatch: labeled set has n={labeled.n}, permutation n={omega.n}")
    return LabeledTransitions(
        labeled.n, frozenset((omega.apply_state(s), b) for s, b in labeled.items)
    )


def permute_rules(rules: Iterable[Rule], omega: VarPermutation) -> frozenset[Rule]:
    return frozenset(omega.apply_rule(r) for r in rules)


def unpermute_rules(rules: Iterable[Rule], omega: VarPermutation) -> frozenset[Rule]:
    return permute_rules(rules, omega.inverse())


def rename_program(program: LogicProgram, omega: VarPermutation) -> LogicProgram:
    """The same dynamics with variable ``i`` moved to position ``forward[i]``."""
    names = [""] * program.n
    for i, j in enumerate(omega.forward):
        names[j] = program.base.names[i]
    return LogicProgram(HerbrandBase(tuple(names)), permute_rules(program.rules, omega))


def _encoding(labeled: LabeledTransitions) -> tuple[int, ...]:
    return tuple(sorted(2 * s + b for s, b in labeled.items))


def strong_omega(labeled: LabeledTransitions, v: int) -> VarPermutation:
    """Among orderings with ``v`` first, the one minimising the sorted token encoding.

    Exhaustive over the ``(n-1)!`` tail orderings; ties go to the
    lexicographically smallest ordering.
    """
    n = labeled.n
    rest = [i for i in range(n) if i != v]
    best_key = best = None
    for tail in permutations(rest):
        omega = VarPermutation.from_order((v, *tail))
        key = _encoding(permute_labeled(labeled, omega))
        if best_key is None or key < best_key:
            best_key, best = key, omega
    assert best is not None
    return best


def canonical_example(transitions: TransitionSet, v: int, strong: bool = False) -> CanonicalExample:
    labeled = project(transitions, v)
    omega = strong_omega(labeled, v) if strong else rotation_for(v, transitions.n)
    return CanonicalExample(permute_labeled(labeled, omega), omega, v)
