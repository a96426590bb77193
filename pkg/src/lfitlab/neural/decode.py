from __future__ import annotations

from typing import Sequence

import numpy as np

from lfitlab.logic import Body, Rule, drop_subsumed
from lfitlab.rule_index import RuleIndexTable

DEFAULT_THRESHOLD = 0.5


def decode(outputs: Sequence[np.ndarray], table: RuleIndexTable, threshold: float = DEFAULT_THRESHOLD) -> frozenset[Body]:
    """Turn per-length head probabilities into a set of mutually non-subsuming bodies.

    A head stays silent when its no-rule node reaches the threshold and is at
    least as large as every rule probability; ties go to the no-rule node.
    """
    if len(outputs) != table.n + 1:
        raise ValueError(f"expected {table.n + 1} heads, got {len(outputs)}")
    emitted = []
    for l, probs in enumerate(outputs):
        probs = np.asarray(probs)
        rules, none = probs[:-1], probs[-1]
        if none >= threshold and (rules.size == 0 or none >= rules.max()):
            continue
        emitted += [table.body_at(l, int(i)) for i in np.flatnonzero(rules >= threshold)]
    return frozenset(r.body for r in drop_subsumed(Rule(0, b) for b in emitted))
