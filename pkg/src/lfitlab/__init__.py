"""Learning normal logic programs from Boolean state transitions."""

from lfitlab.canonical import VarPermutation, canonical_example, permute_labeled, rotation_for, unpermute_rules
from lfitlab.logic import (
    Body,
    HerbrandBase,
    LabeledTransitions,
    LogicError,
    LogicProgram,
    Rule,
    TransitionSet,
    full_transitions,
    program_mse,
    project,
    subsumes,
    tp_step,
)
from lfitlab.rule_index import RuleIndexTable, body_at, body_count, index_of
from lfitlab.symbolic import consistent, learn_minimal, learn_program, targets_from_rules

__version__ = "0.1.0"
