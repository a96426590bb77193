"""Program-vs-program evaluation and the partial-observation protocol."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from lfitlab.logic import LogicError, LogicProgram, full_transitions, program_mse
from lfitlab.pipeline import Predictor, predict_program
from lfitlab.symbolic import BRUTE_FORCE_CAP, learn_program


@dataclass(frozen=True)
class EvalReport:
    name: str
    n: int
    max_body: int
    mse: float
    predicted_rules: int
    oracle_rules: int | None
    original_rules: int
    wall_time: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.mse <= 1.0:
            raise LogicError(f"mse {self.mse} outside [0, 1]")

    def as_dict(self) -> dict:
        return asdict(self)


def max_body_length(program: LogicProgram) -> int:
    return max((r.body.length for r in program.rules), default=0)


def run_eval(
    original: LogicProgram,
    predicted: LogicProgram,
    name: str = "",
    wall_time: float | None = None,
) -> EvalReport:
    mse = program_mse(original, predicted)
    oracle = None
    if original.n <= BRUTE_FORCE_CAP:
        oracle = len(learn_program(full_transitions(original)))
    return EvalReport(
        name=name,
        n=original.n,
        max_body=max_body_length(original),
        mse=mse,
        predicted_rules=len(predicted),
        oracle_rules=oracle,
        original_rules=len(original),
        wall_time=wall_time,
    )


def holdout_experiment(
    program: LogicProgram,
    given: int,
    rng: np.random.Generator,
    predictor: Predictor,
) -> float:
    """Learn from ``given`` uniformly chosen source states, score on all of them."""
    total = 1 << program.n
    if not 0 < given <= total:
        raise LogicError(f"given must lie in 1..{total}, got {given}")
    full = full_transitions(program)
    sources = rng.choice(total, size=given, replace=False)
    partial = full.restrict(int(s) for s in sources)
    return program_mse(program, predict_program(predictor, partial))


def holdout_mean(
    program: LogicProgram,
    given: int,
    trials: int,
    predictor: Predictor,
    seed: int = 0,
) -> float:
    rng = np.random.default_rng(seed)
    return float(np.mean([holdout_experiment(program, given, rng, predictor) for _ in range(trials)]))


def reports_to_text(reports: Sequence[EvalReport]) -> str:
    lines = [f"{'system':<16}{'n':>4}{'b':>4}{'mse':>9}{'pred':>6}{'oracle':>8}{'orig':>6}"]
    for r in reports:
        oracle = "-" if r.oracle_rules is None else str(r.oracle_rules)
        lines.append(
            f"{r.name:<16}{r.n:>4}{r.max_body:>4}{r.mse:>9.3f}{r.predicted_rules:>6}{oracle:>8}{r.original_rules:>6}"
        )
    return "\n".join(lines) + "\n"


def reports_to_csv(reports: Sequence[EvalReport]) -> str:
    buf = io.StringIO()
    fields = list(EvalReport.__dataclass_fields__)
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.as_dict())
    return buf.getvalue()


def reports_to_json(reports: Sequence[EvalReport]) -> str:
    return json.dumps([r.as_dict() for r in reports], indent=2) + "\n"

