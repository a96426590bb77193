"""Token encoding of labeled transitions: ``id = 2 * state + bit``."""

from __future__ import annotations

from typing import Iterable

from lfitlab.logic import LabeledTransitions, LogicError


class EmptyInput(LogicError):
    pass


def tokenize(labeled: LabeledTransitions) -> tuple[int, ...]:
    """Sorted token ids; ordering is irrelevant to the model but keeps keys canonical."""
    if not labeled.items:
        raise EmptyInput("cannot tokenize an empty set of transitions")
    return tuple(sorted(2 * s + b for s, b in labeled.items))


def detokenize(tokens: Iterable[int], n: int) -> LabeledTransitions:
    return LabeledTransitions(n, frozenset((t >> 1, t & 1) for t in tokens))


def vocab_size(n: int) -> int:
    return 1 << (n + 1)
