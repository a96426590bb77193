"""Training corpora: per-variable canonical inputs labeled by the symbolic learner."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from lfitlab.canonical import canonical_example
from lfitlab.logic import (
    ENUMERATION_CAP,
    HerbrandBase,
    LabeledTransitions,
    LogicError,
    TransitionSet,
)
from lfitlab.rule_index import RuleIndexTable
from lfitlab.symbolic import TargetVectors, learn_minimal, targets_from_rules
from lfitlab.tokens import detokenize, tokenize

MAGIC = b"DLF2"
FORMAT_VERSION = 1
MODES = ("sampled", "exhaustive-complete", "exhaustive-partial")
COMPLETE_BUDGET_N = 4
PARTIAL_BUDGET_N = 3


class DatasetError(LogicError):
    pass


class BudgetExceeded(DatasetError):
    pass


class VersionMismatch(DatasetError):
    pass


class CorruptRecord(DatasetError):
    pass


@dataclass(frozen=True)
class TrainingExample:
    tokens: tuple[int, ...]
    targets: TargetVectors
    n: int

    def __post_init__(self) -> None:
        if len(self.tokens) > 1 << self.n:
            raise DatasetError("more tokens than states")
        if any(not 0 <= t < 1 << (self.n + 1) for t in self.tokens):
            raise DatasetError("token id out of range")
        if self.targets.n != self.n:
            raise DatasetError("targets built for a different n")


@dataclass(frozen=True)
class DatasetManifest:
    n: int
    count: int
    mode: str
    seed: int | None
    version: int = FORMAT_VERSION

    def to_json(self) -> dict:
        return {"n": self.n, "mode": self.mode, "seed": self.seed, "count": self.count, "version": self.version}


@lru_cache(maxsize=None)
def _table(n: int) -> RuleIndexTable:
    return RuleIndexTable(n)


@lru_cache(maxsize=1 << 16)
def label_tokens(tokens: tuple[int, ...], n: int) -> TargetVectors:
    """Oracle targets for a (sorted) token tuple."""
    return targets_from_rules(learn_minimal(detokenize(tokens, n)), _table(n))


def make_example(labeled: LabeledTransitions) -> TrainingExample:
    tokens = tokenize(labeled)
    return TrainingExample(tokens, label_tokens(tokens, labeled.n), labeled.n)


def random_system(n: int, rng: np.random.Generator) -> TransitionSet:
    """Every state maps to an independently uniform successor."""
    if n > ENUMERATION_CAP:
        raise BudgetExceeded(f"n={n} exceeds the enumeration cap")
    succ = rng.integers(0, 1 << n, size=1 << n)
    return TransitionSet._trusted(HerbrandBase.of_size(n), dict(enumerate(succ.tolist())))


def enumerate_complete_inputs(n: int) -> Iterator[LabeledTransitions]:
    """Every Boolean function of ``n`` inputs as a complete labeled set."""
    if n > COMPLETE_BUDGET_N:
        raise BudgetExceeded(f"2^(2^{n}) complete inputs is over budget (n <= {COMPLETE_BUDGET_N})")
    states = range(1 << n)
    for f in range(1 << (1 << n)):
        yield LabeledTransitions(n, frozenset((s, f >> s & 1) for s in states))


def enumerate_partial_inputs(n: int) -> Iterator[LabeledTransitions]:
    """Every non-empty labeled subset: each state is absent, 0 or 1."""
    if n > PARTIAL_BUDGET_N:
        raise BudgetExceeded(f"3^(2^{n}) partial inputs is over budget (n <= {PARTIAL_BUDGET_N})")
    for choice in product((None, 0, 1), repeat=1 << n):
        items = frozenset((s, b) for s, b in enumerate(choice) if b is not None)
        if items:
            yield LabeledTransitions(n, items)


def _dedup(examples: Iterable[TrainingExample]) -> list[TrainingExample]:
    seen: dict[tuple[int, ...], TrainingExample] = {}
    for ex in examples:
        prev = seen.get(ex.tokens)
        if prev is None:
            seen[ex.tokens] = ex
        elif prev.targets != ex.targets:
            raise DatasetError(f"identical inputs {ex.tokens} received different labels")
    return [seen[k] for k in sorted(seen)]


def build_training_set(
    mode: str,
    n: int,
    count: int | None = None,
    rng: np.random.Generator | None = None,
) -> list[TrainingExample]:
    """Deduplicated examples sorted by token encoding."""
    if mode == "sampled":
        if not count or count <= 0:
            raise DatasetError("sampled mode needs a positive system count")
        rng = rng if rng is not None else np.random.default_rng(0)

        def sampled() -> Iterator[TrainingExample]:
            for _ in range(count):
                system = random_system(n, rng)
                for v in range(n):
                    yield make_example(canonical_example(system, v).labeled)

        return _dedup(sampled())
    if mode == "exhaustive-complete":
        return _dedup(make_example(s) for s in enumerate_complete_inputs(n))
    if mode == "exhaustive-partial":
        return _dedup(make_example(s) for s in enumerate_partial_inputs(n))
    raise DatasetError(f"unknown mode {mode!r}; expected one of {MODES}")


def _manifest_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def write_dataset(path: str | Path, examples: list[TrainingExample], mode: str, seed: int | None) -> DatasetManifest:
    path = Path(path)
    if not examples:
        raise DatasetError("refusing to write an empty dataset")
    n = examples[0].n
    out = bytearray(MAGIC)
    out += struct.pack("<BB", FORMAT_VERSION, n)
    for ex in sorted(examples, key=lambda e: e.tokens):
        if ex.n != n:
            raise DatasetError("mixed widths in one dataset")
        out += struct.pack(f"<H{len(ex.tokens)}H", len(ex.tokens), *ex.tokens)
        for vec in ex.targets.vectors:
            out += np.packbits(vec, bitorder="little").tobytes()
    path.write_bytes(bytes(out))
    manifest = DatasetManifest(n=n, count=len(examples), mode=mode, seed=seed)
    _manifest_path(path).write_text(json.dumps(manifest.to_json(), indent=2) + "\n")
    return manifest


def read_dataset(path: str | Path) -> tuple[DatasetManifest, list[TrainingExample]]:
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 6 or data[:4] != MAGIC:
        raise CorruptRecord(f"{path}: not a dataset file")
    version, n = data[4], data[5]
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    widths = _table(n).widths()
    pos = 6
    examples = []
    while pos < len(data):
        if pos + 2 > len(data):
            raise CorruptRecord(f"{path}: truncated record header at byte {pos}")
        (k,) = struct.unpack_from("<H", data, pos)
        pos += 2
        need = 2 * k + sum((w + 7) // 8 for w in widths)
        if pos + need > len(data):
            raise CorruptRecord(f"{path}: truncated record at byte {pos - 2}")
        tokens = struct.unpack_from(f"<{k}H", data, pos)
        pos += 2 * k
        vecs = []
        for w in widths:
            nbytes = (w + 7) // 8
            bits = np.unpackbits(np.frombuffer(data, np.uint8, nbytes, pos), bitorder="little")
            vecs.append(bits[:w].copy())
            pos += nbytes
        try:
            examples.append(TrainingExample(tuple(tokens), TargetVectors(tuple(vecs)), n))
        except LogicError as e:
            raise CorruptRecord(f"{path}: invalid record: {e}") from None
    mpath = _manifest_path(path)
    if mpath.exists():
        meta = json.loads(mpath.read_text())
        manifest = DatasetManifest(
            n=meta["n"], count=meta["count"], mode=meta["mode"], seed=meta.get("seed"), version=meta["version"]
        )
        if manifest.version != version:
            raise VersionMismatch(f"{mpath}: manifest version {manifest.version} disagrees with file")
        if manifest.n != n or manifest.count != len(examples):
            raise CorruptRecord(f"{mpath}: manifest does not match {len(examples)} stored records")
    else:
        manifest = DatasetManifest(n=n, count=len(examples), mode="unknown", seed=None)
    return manifest, examples
