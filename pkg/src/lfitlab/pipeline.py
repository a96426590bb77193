"""Per-variable predictors and the loop that turns them into whole programs."""

from __future__ import annotations

from typing import Protocol

from lfitlab.canonical import canonical_example, unpermute_rules
from lfitlab.logic import Body, LabeledTransitions, LogicError, LogicProgram, Rule, TransitionSet
from lfitlab.symbolic import BRUTE_FORCE_CAP, learn_minimal
from lfitlab.tokens import EmptyInput, tokenize


class Predictor(Protocol):
    """Maps a canonical labeled set (target at position 0) to rule bodies for head 0."""

    n: int | None

    def bodies(self, labeled: LabeledTransitions) -> frozenset[Body]: ...


class SymbolicPredictor:
    def __init__(self, n: int | None = None, cap: int = BRUTE_FORCE_CAP):
        self.n = n
        self.cap = cap

    def bodies(self, labeled: LabeledTransitions) -> frozenset[Body]:
        return learn_minimal(labeled, self.cap)


class NeuralPredictor:
    def __init__(self, model, threshold: float = 0.5):
        from lfitlab.rule_index import RuleIndexTable

        self.model = model
        self.n = model.n
        self.threshold = threshold
        self.table = RuleIndexTable(model.n)

    def bodies(self, labeled: LabeledTransitions) -> frozenset[Body]:
        from lfitlab.neural.decode import decode
        from lfitlab.neural.model import forward_all

        return decode(forward_all(self.model, tokenize(labeled)), self.table, self.threshold)


def predict_program(predictor: Predictor, transitions: TransitionSet, strong: bool = False) -> LogicProgram:
    """Canonicalise each variable, predict its bodies, and map them back."""
    if not len(transitions):
        raise EmptyInput("no transitions to learn from")
    if predictor.n is not None and predictor.n != transitions.n:
        raise LogicError(f"predictor handles n={predictor.n}, transitions have n={transitions.n}")
    rules: set[Rule] = set()
    for v in range(transitions.n):
        ex = canonical_example(transitions, v, strong=strong)
        canon = {Rule(0, b) for b in predictor.bodies(ex.labeled)}
        rules |= unpermute_rules(canon, ex.omega)
    return LogicProgram(transitions.base, frozenset(rules))
