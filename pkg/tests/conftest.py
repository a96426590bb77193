import itertools

import numpy as np
import pytest

from lfitlab.logic import Body, HerbrandBase, LabeledTransitions, LogicProgram, Rule

P, Q, R = 0, 1, 2


def state(*names: str) -> int:
    """Bitmask of a System-1 style state given as variable names."""
    return sum(1 << "pqr".index(x) for x in names)


def parse_eq_set(text: str) -> LabeledTransitions:
    """Parse ``"(pqr,1) (pq,1) (ε,0)"`` style sets over p, q, r (or v0 v1 v2)."""
    items = set()
    for chunk in text.replace(")", "").split("("):
        chunk = chunk.strip().strip(",").strip()
        if not chunk:
            continue
        st, bit = (x.strip() for x in chunk.split(","))
        st = st.replace("v_0", "p").replace("v_1", "q").replace("v_2", "r").replace(" ", "")
        items.add((0 if st == "ε" else state(*st), int(bit)))
    return LabeledTransitions(3, frozenset(items))


@pytest.fixture
def base3():
    return HerbrandBase(("p", "q", "r"))


@pytest.fixture
def system1(base3):
    return LogicProgram(base3, {Rule(P, Body.of([Q])), Rule(Q, Body.of([P, R])), Rule(R, Body.of([], [P]))})


@pytest.fixture
def system2(base3):
    return LogicProgram(base3, {Rule(Q, Body.of([P])), Rule(P, Body.of([Q, R])), Rule(R, Body.of([], [Q]))})


def all_ternary(n: int):
    return [Body.from_ternary(v) for v in itertools.product((0, 1, -1), repeat=n)]


def random_program(rng: np.random.Generator, n: int, max_rules: int = 6, names=None) -> LogicProgram:
    base = HerbrandBase(tuple(names) if names else tuple(f"x{i}" for i in range(n)))
    rules = set()
    for _ in range(int(rng.integers(0, max_rules + 1))):
        vec = rng.integers(-1, 2, size=n).tolist()
        rules.add(Rule(int(rng.integers(0, n)), Body.from_ternary(vec)))
    return LogicProgram(base, frozenset(rules))


# Acceptance reporting ----------------------------------------------------------

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one criterion verdict; the lines are repeated in the terminal summary."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda x: int(x.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


# Shared trained models ---------------------------------------------------------

N3_TRAIN = dict(epochs=400, batch_size=32, optimizer="adam", lr=1e-3, weight_decay=0.0, augment_partial=0.5, seed=0)


@pytest.fixture(scope="session")
def trained_n3():
    """The desk-scale n=3 model: 256 complete inputs with partial-input augmentation."""
    import time

    from lfitlab.dataset import build_training_set
    from lfitlab.neural import ModelConfig, TrainConfig, train

    t0 = time.perf_counter()
    result = train(build_training_set("exhaustive-complete", 3), TrainConfig(**N3_TRAIN), ModelConfig(n=3))
    return result, time.perf_counter() - t0
