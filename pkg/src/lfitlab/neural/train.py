from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

from lfitlab.dataset import TrainingExample, label_tokens
from lfitlab.logic import LogicError
from lfitlab.neural.model import DTYPE, ModelConfig, RuleSetModel, pad_tokens

log = logging.getLogger(__name__)


class TrainingError(LogicError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    """Optimisation settings.

    Defaults for the optimiser, learning rate and weight decay are the
    published ones (plain SGD, 1e-4, 1e-4).  They converge far too slowly for
    desk-scale runs, which instead pass ``optimizer="adam"`` and a larger
    learning rate.
    """

    epochs: int = 100
    batch_size: int = 64
    optimizer: str = "sgd"
    lr: float = 1e-4
    weight_decay: float = 1e-4
    momentum: float = 0.0
    seed: int = 0
    val_fraction: float = 0.0
    augment_partial: float = 0.5
    max_steps: int | None = None
    stop_loss: float | None = None

    def __post_init__(self) -> None:
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be positive and epochs non-negative")
        if not 0 <= self.val_fraction < 1 or not 0 <= self.augment_partial <= 1:
            raise ValueError("fractions must lie in [0, 1)")
        if self.lr < 0:
            raise ValueError("learning rate must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainResult:
    model: RuleSetModel
    history: list[dict] = field(default_factory=list)
    steps: int = 0


def _batch_tensors(tokens: Sequence[tuple[int, ...]], targets: Sequence[np.ndarray]):
    ids, mask = pad_tokens(tokens)
    y = torch.as_tensor(np.stack(targets), dtype=DTYPE)
    return ids, mask, y


def batch_loss(model: RuleSetModel, examples: Sequence[TrainingExample]) -> torch.Tensor:
    """Mean binary cross-entropy over every output node of every head."""
    if not examples:
        raise TrainingError("empty batch")
    ids, mask, y = _batch_tensors([e.tokens for e in examples], [e.targets.concatenated() for e in examples])
    logits = model(ids, mask)
    if not torch.isfinite(logits).all():
        raise TrainingError(_diagnose(model, logits))
    return F.binary_cross_entropy_with_logits(logits, y)


def _diagnose(model: RuleSetModel, logits: torch.Tensor) -> str:
    bad = [name for name, p in model.named_parameters() if not torch.isfinite(p).all()]
    return (
        f"non-finite logits ({int((~torch.isfinite(logits)).sum())} entries); "
        f"non-finite parameters: {bad or 'none'}"
    )


def loss_and_grads(model: RuleSetModel, examples: Sequence[TrainingExample]) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and gradients with dropout disabled, so repeated calls agree exactly."""
    was_training = model.training
    model.eval()
    try:
        model.zero_grad(set_to_none=True)
        loss = batch_loss(model, examples)
        loss.backward()
        grads = {}
        for name, p in model.named_parameters():
            g = p.grad if p.grad is not None else torch.zeros_like(p)
            if not torch.isfinite(g).all():
                raise TrainingError(f"non-finite gradient in {name}")
            grads[name] = g.detach().numpy().copy()
        model.zero_grad(set_to_none=True)
    finally:
        model.train(was_training)
    return float(loss.item()), grads


@torch.no_grad()
def evaluate(model: RuleSetModel, examples: Sequence[TrainingExample], batch_size: int = 512) -> float:
    was_training = model.training
    model.eval()
    try:
        total = 0.0
        for i in range(0, len(examples), batch_size):
            chunk = examples[i : i + batch_size]
            total += float(batch_loss(model, chunk)) * len(chunk)
    finally:
        model.train(was_training)
    return total / len(examples)


def _augment(ex: TrainingExample, rng: np.random.Generator, p: float) -> TrainingExample:
    """With probability ``p`` keep a random non-empty proper subset of the tokens."""
    k = len(ex.tokens)
    if k < 2 or rng.random() >= p:
        return ex
    keep = int(rng.integers(1, k))
    idx = np.sort(rng.choice(k, size=keep, replace=False))
    tokens = tuple(ex.tokens[i] for i in idx)
    return TrainingExample(tokens, label_tokens(tokens, ex.n), ex.n)


def train(
    dataset: Sequence[TrainingExample],
    config: TrainConfig = TrainConfig(),
    model_config: ModelConfig | None = None,
    model: RuleSetModel | None = None,
) -> TrainResult:
    """Mini-batch training; deterministic for a fixed ``config.seed``."""
    if not dataset:
        raise TrainingError("dataset is empty")
    n = dataset[0].n
    if any(e.n != n for e in dataset):
        raise TrainingError("dataset mixes widths")
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    if model is None:
        model = RuleSetModel(model_config or ModelConfig(n=n))
    if model.n != n:
        raise TrainingError(f"model is built for n={model.n}, dataset has n={n}")

    order = rng.permutation(len(dataset))
    n_val = int(round(config.val_fraction * len(dataset)))
    val = [dataset[i] for i in order[:n_val]]
    tr = [dataset[i] for i in order[n_val:]]
    if not tr:
        raise TrainingError("validation split leaves no training data")

    if config.optimizer == "adam":
        opt = torch.optim.Adam(model.parameters(), lr=config.lr, weight_decay=config.weight_decay)
    else:
        opt = torch.optim.SGD(
            model.parameters(), lr=config.lr, weight_decay=config.weight_decay, momentum=config.momentum
        )

    result = TrainResult(model)
    model.train()
    for epoch in range(config.epochs):
        perm = rng.permutation(len(tr))
        running = 0.0
        for start in range(0, len(tr), config.batch_size):
            batch = [_augment(tr[i], rng, config.augment_partial) for i in perm[start : start + config.batch_size]]
            loss = batch_loss(model, batch)
            if not math.isfinite(loss.item()):
                raise TrainingError(f"loss diverged at epoch {epoch}, step {result.steps}: {loss.item()}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            running += loss.item() * len(batch)
            result.steps += 1
            if config.max_steps is not None and result.steps >= config.max_steps:
                break
        record = {"epoch": epoch, "step": result.steps, "train_loss": running / len(tr)}
        if val:
            record["val_loss"] = evaluate(model, val)
        stop = False
        if config.stop_loss is not None:
            record["eval_train_loss"] = evaluate(model, tr)
            stop = record["eval_train_loss"] < config.stop_loss
        result.history.append(record)
        log.debug("epoch %d: %s", epoch, record)
        if stop or (config.max_steps is not None and result.steps >= config.max_steps):
            break
    model.eval()
    return result
