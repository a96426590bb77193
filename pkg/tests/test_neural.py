import numpy as np
import pytest
import torch

from conftest import P, Q, R, parse_eq_set
from lfitlab.canonical import canonical_example
from lfitlab.dataset import CorruptRecord, build_training_set, make_example, random_system
from lfitlab.logic import Body, LabeledTransitions, LogicError, full_transitions
from lfitlab.neural import (
    ModelConfig,
    NeuralPredictor,
    RuleSetModel,
    TrainConfig,
    decode,
    forward,
    forward_all,
    load_checkpoint,
    loss_and_grads,
    save_checkpoint,
    train,
)
from lfitlab.neural.model import pad_tokens
from lfitlab.pipeline import SymbolicPredictor, predict_program
from lfitlab.rule_index import RuleIndexTable
from lfitlab.symbolic import learn_minimal, targets_from_rules
from lfitlab.tokens import EmptyInput, detokenize, tokenize, vocab_size

SMALL = dict(d_model=16, heads=2, inducing=4, ff_hidden=32)


def small_model(n, seed=0, **kw):
    torch.manual_seed(seed)
    return RuleSetModel(ModelConfig(n=n, **{**SMALL, **kw}))


def test_tokenize_examples():
    s1p = parse_eq_set("(pqr, 1), (pq, 1), (p, 0), (ε, 0), (r, 0), (qr, 1), (pr, 0), (q, 1)")
    assert tokenize(s1p) == (0, 2, 5, 7, 8, 10, 13, 15)
    assert detokenize(tokenize(s1p), 3) == s1p
    assert vocab_size(3) == 16
    with pytest.raises(EmptyInput):
        tokenize(LabeledTransitions(3))


def test_head_shapes():
    model = small_model(3)
    assert model.head_widths() == [2, 7, 13, 9]
    out = forward_all(model, (0, 3))
    assert [o.shape[0] for o in out] == [2, 7, 13, 9]
    assert forward(model, (0, 3), 2).shape == (13,)
    with pytest.raises(LogicError):
        forward(model, (0, 3), 4)
    with pytest.raises(LogicError):
        forward(model, (0, 99), 1)
    with pytest.raises(EmptyInput):
        forward(model, (), 1)


def test_permutation_invariance():
    rng = np.random.default_rng(0)
    for draw in range(5):
        model = small_model(3, seed=draw)
        model.eval()
        tokens = [0, 3, 5, 6, 9, 11, 12, 14]
        ref = torch.sigmoid(model(*pad_tokens([tokens])))
        for _ in range(5):
            perm = list(rng.permutation(tokens))
            got = torch.sigmoid(model(*pad_tokens([perm])))
            assert torch.max(torch.abs(got - ref)).item() < 1e-6


def test_padding_does_not_change_outputs():
    model = small_model(2)
    model.eval()
    a, b = (1, 2), (0, 3, 4, 7)
    alone = model(*pad_tokens([a]))
    batched = model(*pad_tokens([a, b]))
    assert torch.allclose(alone[0], batched[0], atol=1e-12)


def test_zero_heads_give_half():
    model = RuleSetModel(ModelConfig(n=2, **SMALL), zero_heads=True)
    for probs in forward_all(model, (0, 3, 5)):
        assert np.all(probs == 0.5)


def test_loss_gradient_of_duplicated_batch_equals_single():
    model = small_model(2)
    ex = make_example(detokenize((0, 3, 5, 6), 2))
    l1, g1 = loss_and_grads(model, [ex])
    l3, g3 = loss_and_grads(model, [ex, ex, ex])
    assert abs(l1 - l3) < 1e-12
    for name in g1:
        assert np.allclose(g1[name], g3[name], atol=1e-12)


def test_zero_lr_leaves_parameters_unchanged():
    data = build_training_set("exhaustive-complete", 2)
    model = small_model(2)
    before = {k: v.detach().clone() for k, v in model.state_dict().items()}
    train(data, TrainConfig(epochs=1, lr=0.0, batch_size=4), model=model)
    for k, v in model.state_dict().items():
        assert torch.equal(v, before[k])


def test_training_is_deterministic():
    data = build_training_set("exhaustive-complete", 2)
    cfg = TrainConfig(epochs=2, optimizer="adam", lr=1e-3, batch_size=4, seed=3)
    a = train(data, cfg, ModelConfig(n=2, **SMALL))
    b = train(data, cfg, ModelConfig(n=2, **SMALL))
    for (ka, va), (kb, vb) in zip(a.model.state_dict().items(), b.model.state_dict().items()):
        assert ka == kb and torch.equal(va, vb)
    assert a.history == b.history


def test_training_reduces_loss():
    data = build_training_set("exhaustive-complete", 2)
    cfg = TrainConfig(epochs=40, optimizer="adam", lr=3e-3, batch_size=8, augment_partial=0.0, val_fraction=0.25)
    result = train(data, cfg, ModelConfig(n=2, **SMALL))
    assert result.history[-1]["train_loss"] < result.history[0]["train_loss"]
    assert "val_loss" in result.history[-1]


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(optimizer="rmsprop")
    with pytest.raises(ValueError):
        TrainConfig(lr=-1)


def test_decode_examples():
    table = RuleIndexTable(3)
    silent = lambda w: np.r_[np.zeros(w), 1.0]
    heads = [silent(1), silent(6), silent(12), silent(8)]
    assert decode(heads, table) == frozenset()
    heads[1] = np.r_[[0, 0, 0.9, 0, 0, 0], 0.1]
    assert decode(heads, table) == {Body.of([Q])}
    # q & r is subsumed by q and disappears.
    heads[2] = np.r_[np.eye(12)[table.index_of(Body.of([Q, R]))[1]] * 0.8, 0.2]
    assert decode(heads, table) == {Body.of([Q])}
    # A tie between the no-rule node and the best rule keeps the head silent.
    heads[1] = np.r_[[0, 0, 0.7, 0, 0, 0], 0.7]
    assert decode(heads, table) == {Body.of([Q, R])}
    # Threshold reached by several entries.
    heads[1] = np.r_[[0.6, 0, 0, 0, 0.55, 0], 0.0]
    heads[2] = silent(12)
    assert decode(heads, table) == {Body.of([P]), Body.of([R])}
    assert decode(heads, table, threshold=0.58) == {Body.of([P])}
    with pytest.raises(ValueError):
        decode(heads[:2], table)


def test_decode_inverts_oracle_targets():
    table = RuleIndexTable(3)
    rng = np.random.default_rng(1)
    for _ in range(50):
        labeled = canonical_example(random_system(3, rng), 0).labeled
        bodies = learn_minimal(labeled)
        vecs = targets_from_rules(bodies, table).vectors
        assert decode([v.astype(float) for v in vecs], table) == bodies
        again = targets_from_rules(decode([v.astype(float) for v in vecs], table), table)
        assert decode([v.astype(float) for v in again.vectors], table) == bodies


class OraclePredictor(NeuralPredictor):
    """Stands in for a perfect network: oracle targets pushed through the decoder."""

    def __init__(self, n):
        self.n = n
        self.threshold = 0.5
        self.table = RuleIndexTable(n)

    def bodies(self, labeled):
        vecs = targets_from_rules(learn_minimal(labeled), self.table).vectors
        return decode([v.astype(float) for v in vecs], self.table, self.threshold)


def test_perfect_network_reproduces_systems(system1, system2):
    for program in (system1, system2):
        t = full_transitions(program)
        assert predict_program(OraclePredictor(3), t) == predict_program(SymbolicPredictor(), t) == program


def test_neural_predictor_shape_checks(system1):
    pred = NeuralPredictor(small_model(2))
    with pytest.raises(LogicError):
        predict_program(pred, full_transitions(system1))


def test_checkpoint_roundtrip(tmp_path):
    model = small_model(3, dropout=0.1)
    path = tmp_path / "m.bin"
    save_checkpoint(path, model, {"note": "x"})
    loaded, meta = load_checkpoint(path)
    assert loaded.config == model.config
    assert meta["note"] == "x"
    for (ka, va), (kb, vb) in zip(model.state_dict().items(), loaded.state_dict().items()):
        assert ka == kb and torch.equal(va, vb)
    tokens = (1, 2, 4, 7, 9)
    for a, b in zip(forward_all(model, tokens), forward_all(loaded, tokens)):
        assert np.array_equal(a, b)


def test_checkpoint_truncated(tmp_path):
    path = tmp_path / "m.bin"
    save_checkpoint(path, small_model(2))
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(CorruptRecord):
        load_checkpoint(path)
