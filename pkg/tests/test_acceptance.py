"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line (shown in the terminal summary and with
``-s``) before asserting, so a failing criterion still reports its measurement.
Run just this file with ``pytest tests/test_acceptance.py``.
"""

import itertools
import time
from math import comb

import numpy as np
import pytest
import torch

from conftest import P, Q, parse_eq_set, random_program
from lfitlab import fixtures
from lfitlab.canonical import VarPermutation, permute_labeled, unpermute_rules
from lfitlab.dataset import build_training_set, random_system
from lfitlab.evaluation import holdout_mean
from lfitlab.formats import emit_program, evaluate_expr, parse_bnet, parse_program, read_bnet
from lfitlab.logic import Body, Rule, full_transitions, program_mse, project
from lfitlab.neural import (
    ModelConfig,
    NeuralPredictor,
    RuleSetModel,
    TrainConfig,
    check_gradients,
    decode,
    evaluate,
    forward_all,
    train,
)
from lfitlab.neural.model import pad_tokens
from lfitlab.pipeline import SymbolicPredictor, predict_program
from lfitlab.rule_index import RuleIndexTable, body_at, body_count, index_of
from lfitlab.scaleup import decompose_predict, min_body_bound
from lfitlab.symbolic import bodies_from_targets, consistent, learn_program

S1_P = "(pqr, 1), (pq, 1), (p, 0), (ε, 0), (r, 0), (qr, 1), (pr, 0), (q, 1)"
S2_Q_CANON = "(v_0 v_1 v_2, 1), (v_0 v_1, 1), (v_0, 0), (ε, 0), (v_2, 0), (v_1 v_2, 1), (v_0 v_2, 0), (v_1, 1)"


def test_criterion_01_rule_space_bijection(acceptance):
    t0 = time.perf_counter()
    ok = True
    for n in (2, 3, 4):
        seen = set()
        for l in range(n + 1):
            ok &= body_count(n, l) == comb(n, l) * 2**l
            for i in range(body_count(n, l)):
                b = body_at(n, l, i)
                ok &= index_of(b, n) == (l, i) and b.length == l
                seen.add(b)
        ok &= len(seen) == 3**n
    ok &= body_count(3, 2) == 12
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 1.0
    acceptance(1, ok, f"index_of . body_at identity for n=2,3,4, count(3,2)={body_count(3, 2)}, {elapsed:.3f}s < 1s")
    assert ok


def test_criterion_02_published_fixtures(acceptance, system1, system2):
    s1p = project(full_transitions(system1), P)
    ok_a = s1p == parse_eq_set(S1_P)
    omega = VarPermutation((1, 0, 2))  # q -> v0, p -> v1, r -> v2
    ok_b = permute_labeled(project(full_transitions(system2), Q), omega) == parse_eq_set(S2_Q_CANON)
    ok_c = unpermute_rules({Rule(0, Body.of([1]))}, omega) == {Rule(Q, Body.of([P]))}
    ok = ok_a and ok_b and ok_c
    acceptance(2, ok, f"S1_p exact={ok_a}, permuted S2_q exact={ok_b}, unpermute gives q <- p: {ok_c}")
    assert ok


def _minimal_and_consistent(program, transitions) -> bool:
    for r in program.rules:
        labeled = project(transitions, r.head)
        if not consistent(r.body, labeled):
            return False
        lits = list(r.body.literals())
        for k in range(len(lits)):
            for keep in itertools.combinations(lits, k):
                general = Body.of([i for i, p in keep if p], [i for i, p in keep if not p])
                if consistent(general, labeled):
                    return False
    return True


def test_criterion_03_symbolic_completeness(acceptance):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    failures = 0
    for n, count in ((3, 500), (4, 100)):
        for _ in range(count):
            t = random_system(n, rng)
            learned = learn_program(t)
            if dict(full_transitions(learned)) != dict(t) or not _minimal_and_consistent(learned, t):
                failures += 1
    elapsed = time.perf_counter() - t0
    ok = failures == 0 and elapsed < 60
    acceptance(3, ok, f"600 random systems, {failures} with mse>0 or a non-minimal rule, {elapsed:.1f}s < 60s")
    assert ok


def test_criterion_04_gradient_check(acceptance):
    t0 = time.perf_counter()
    torch.manual_seed(0)
    model = RuleSetModel(ModelConfig(n=3))
    examples = build_training_set("exhaustive-complete", 3)
    rng = np.random.default_rng(0)
    batch = [examples[i] for i in rng.choice(len(examples), 8, replace=False)]
    probes = check_gradients(model, batch, per_type=100, eps=1e-3, seed=0)
    worst = max(p.rel_error for ps in probes.values() for p in ps)
    fewest = min(len(ps) for ps in probes.values())
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-4 and fewest >= 100 and elapsed < 300
    acceptance(
        4, ok,
        f"max rel error {worst:.2e} < 1e-4 over {len(probes)} layer types, >= {fewest} probes each, {elapsed:.0f}s < 300s",
    )
    assert ok


def test_criterion_05_set_invariance(acceptance):
    rng = np.random.default_rng(5)
    worst = 0.0
    for draw in range(20):
        torch.manual_seed(draw)
        model = RuleSetModel(ModelConfig(n=3)).eval()
        tokens = sorted(rng.choice(16, size=int(rng.integers(2, 9)), replace=False).tolist())
        with torch.no_grad():
            ref = torch.sigmoid(model(*pad_tokens([tokens])))
            for _ in range(20):
                perm = rng.permutation(tokens).tolist()
                worst = max(worst, torch.max(torch.abs(torch.sigmoid(model(*pad_tokens([perm]))) - ref)).item())
    ok = worst <= 1e-6
    acceptance(5, ok, f"20 draws x 20 reorderings, max output difference {worst:.1e} <= 1e-6")
    assert ok


def test_criterion_06_overfit_n2(acceptance):
    t0 = time.perf_counter()
    data = build_training_set("exhaustive-complete", 2)
    cfg = TrainConfig(epochs=300, batch_size=16, optimizer="adam", lr=1e-3, weight_decay=0.0, augment_partial=0.0)
    result = train(data, cfg, ModelConfig(n=2))
    bce = evaluate(result.model, data)
    table = RuleIndexTable(2)
    exact = sum(
        decode(forward_all(result.model, ex.tokens), table) == bodies_from_targets(ex.targets, table) for ex in data
    )
    elapsed = time.perf_counter() - t0
    ok = bce < 0.05 and exact >= 15 and elapsed < 600
    acceptance(6, ok, f"BCE {bce:.4f} < 0.05, {exact}/16 exact rule sets (>= 15), {elapsed:.0f}s < 600s")
    assert ok


@pytest.mark.slow
def test_criterion_07_end_to_end_n3(acceptance, trained_n3):
    result, train_time = trained_n3
    predictor = NeuralPredictor(result.model)
    scores = {}
    for name in fixtures.THREE_NODE:
        program = fixtures.load(name)
        scores[name] = program_mse(program, predict_program(predictor, full_transitions(program)))
    ok = all(v <= 0.1 for v in scores.values()) and train_time < 7200
    detail = ", ".join(f"{k} {v:.3f}" for k, v in scores.items())
    acceptance(7, ok, f"mse {detail} (each <= 0.1), training {train_time:.0f}s < 2h")
    assert ok


@pytest.mark.slow
def test_criterion_08_decomposition(acceptance):
    t0 = time.perf_counter()
    b3 = fixtures.load("five_node_b3")
    t = full_transitions(b3)
    mse = program_mse(b3, decompose_predict(t, t.base, SymbolicPredictor(3)))
    planted = fixtures.load("five_node")
    pt = full_transitions(planted)
    bounds = [str(min_body_bound(pt, v, 3)) for v in range(planted.n)]
    elapsed = time.perf_counter() - t0
    ok = mse == 0.0 and bounds[0] == "exceeds(3)" and elapsed < 30
    acceptance(8, ok, f"five_node_b3 mse {mse}, planted variable {bounds[0]}, others {set(bounds[1:])}, {elapsed:.1f}s < 30s")
    assert ok


@pytest.mark.slow
def test_criterion_09_holdout(acceptance, trained_n3):
    symbolic = SymbolicPredictor()
    ok = True
    parts = []
    for name in fixtures.THREE_NODE:
        program = fixtures.load(name)
        means = [holdout_mean(program, k, 50, symbolic, seed=k) for k in range(1, 9)]
        monotone = all(a >= b for a, b in zip(means, means[1:]))
        ok &= monotone and means[-1] == 0.0
        parts.append(f"{name} symbolic {means[0]:.3f}->{means[-1]:.3f} monotone={monotone}")
    neural = NeuralPredictor(trained_n3[0].model)
    for name in fixtures.THREE_NODE:
        m = holdout_mean(fixtures.load(name), 7, 50, neural, seed=7)
        ok &= m <= 0.15
        parts.append(f"{name} neural 7/8 {m:.3f}")
    acceptance(9, ok, "; ".join(parts) + " (neural <= 0.15)")
    assert ok


@pytest.mark.slow
def test_criterion_10_parsers(acceptance):
    rng = np.random.default_rng(10)
    round_trips = 0
    for _ in range(1000):
        program = random_program(rng, int(rng.integers(1, 7)), max_rules=8)
        round_trips += parse_program(emit_program(program, header=True)) == program
    truth_ok = True
    checked = []
    for name in fixtures.names():
        text = fixtures.text(name)
        base, factors = read_bnet(text)
        if base.n > 10:
            continue
        t = full_transitions(parse_bnet(text))
        for s in range(1 << base.n):
            env = {x: bool(s >> i & 1) for i, x in enumerate(base.names)}
            truth_ok &= t[s] == sum(evaluate_expr(factors[x], env) << i for i, x in enumerate(base.names))
        checked.append(name)
    t0 = time.perf_counter()
    big = full_transitions(fixtures.load("budding_yeast"))
    elapsed = time.perf_counter() - t0
    ok = round_trips == 1000 and truth_ok and len(big) == 1 << 18 and elapsed < 60
    acceptance(
        10, ok,
        f"{round_trips}/1000 round trips, truth tables agree on {len(checked)} fixtures (n <= 10): {truth_ok}, "
        f"n=18 enumeration of {len(big)} states in {elapsed:.1f}s < 60s",
    )
    assert ok
