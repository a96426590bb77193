"""Set-attention rule model with one output head per body length.

Token embeddings pass through induced set-attention blocks (encoder), are
pooled by attention onto learned seed vectors (decoder), flow through a
ReLU feed-forward stack, and finally into the head for body length ``l``.
Every head has ``body_count(n, l) + 1`` sigmoid outputs; the last one is the
no-rule node.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn

from lfitlab.logic import LogicError
from lfitlab.rule_index import body_count
from lfitlab.tokens import EmptyInput, vocab_size

DTYPE = torch.float64


@dataclass(frozen=True)
class ModelConfig:
    n: int
    d_model: int = 64
    enc_blocks: int = 2
    heads: int = 4
    inducing: int = 16
    seeds: int = 1
    ff_hidden: int = 256
    ff_layers: int = 2
    dropout: float = 0.2
    layer_norm: bool = True

    def __post_init__(self) -> None:
        if self.d_model % self.heads:
            raise ValueError("d_model must be divisible by the number of attention heads")
        if self.n < 1:
            raise ValueError("n must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


class MAB(nn.Module):
    """Multihead attention block: ``H = LN(X + Att(X, Y)); out = LN(H + rFF(H))``."""

    def __init__(self, d: int, heads: int, dropout: float, layer_norm: bool):
        super().__init__()
        self.heads = heads
        self.q = nn.Linear(d, d)
        self.k = nn.Linear(d, d)
        self.v = nn.Linear(d, d)
        self.o = nn.Linear(d, d)
        self.ff1 = nn.Linear(d, d)
        self.ff2 = nn.Linear(d, d)
        self.act = nn.ReLU()
        self.ln1 = nn.LayerNorm(d) if layer_norm else nn.Identity()
        self.ln2 = nn.LayerNorm(d) if layer_norm else nn.Identity()
        self.drop = nn.Dropout(dropout)

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        b, m, d = x.shape
        return x.view(b, m, self.heads, d // self.heads).transpose(1, 2)

    def forward(self, x: torch.Tensor, y: torch.Tensor, key_mask: torch.Tensor | None = None) -> torch.Tensor:
        q, k, v = self._split(self.q(x)), self._split(self.k(y)), self._split(self.v(y))
        scores = q @ k.transpose(-1, -2) / math.sqrt(q.shape[-1])
        if key_mask is not None:
            scores = scores.masked_fill(~key_mask[:, None, None, :], float("-inf"))
        att = torch.softmax(scores, dim=-1) @ v
        att = att.transpose(1, 2).reshape(x.shape)
        h = self.ln1(x + self.drop(self.o(att)))
        return self.ln2(h + self.drop(self.ff2(self.act(self.ff1(h)))))


class ISAB(nn.Module):
    def __init__(self, d: int, heads: int, inducing: int, dropout: float, layer_norm: bool):
        super().__init__()
        self.inducing = nn.Parameter(torch.empty(1, inducing, d))
        nn.init.xavier_uniform_(self.inducing)
        self.mab0 = MAB(d, heads, dropout, layer_norm)
        self.mab1 = MAB(d, heads, dropout, layer_norm)

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        h = self.mab0(self.inducing.expand(x.shape[0], -1, -1), x, mask)
        return self.mab1(x, h)


class PMA(nn.Module):
    def __init__(self, d: int, heads: int, seeds: int, dropout: float, layer_norm: bool):
        super().__init__()
        self.seeds = nn.Parameter(torch.empty(1, seeds, d))
        nn.init.xavier_uniform_(self.seeds)
        self.mab = MAB(d, heads, dropout, layer_norm)

    def forward(self, x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        return self.mab(self.seeds.expand(x.shape[0], -1, -1), x, mask)


class RuleSetModel(nn.Module):
    def __init__(self, config: ModelConfig, zero_heads: bool = False):
        super().__init__()
        c = self.config = config
        self.embedding = nn.Embedding(vocab_size(c.n), c.d_model)
        self.encoder = nn.ModuleList(
            ISAB(c.d_model, c.heads, c.inducing, c.dropout, c.layer_norm) for _ in range(c.enc_blocks)
        )
        self.pool = PMA(c.d_model, c.heads, c.seeds, c.dropout, c.layer_norm)
        layers: list[nn.Module] = []
        width = c.seeds * c.d_model
        for _ in range(c.ff_layers):
            layers += [nn.Linear(width, c.ff_hidden), nn.ReLU(), nn.Dropout(c.dropout)]
            width = c.ff_hidden
        self.feedforward = nn.Sequential(*layers)
        self.rule_heads = nn.ModuleList(nn.Linear(width, body_count(c.n, l) + 1) for l in range(c.n + 1))
        self.to(DTYPE)
        if zero_heads:
            with torch.no_grad():
                for h in self.rule_heads:
                    h.weight.zero_()
                    h.bias.zero_()
        assert [h.out_features for h in self.rule_heads] == self.head_widths()

    @property
    def n(self) -> int:
        return self.config.n

    def head_widths(self) -> list[int]:
        return [body_count(self.n, l) + 1 for l in range(self.n + 1)]

    def trunk(self, tokens: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        x = self.embedding(tokens)
        for block in self.encoder:
            x = block(x, mask)
        pooled = self.pool(x, mask).flatten(1)
        return self.feedforward(pooled)

    def head_logits(self, features: torch.Tensor, l: int) -> torch.Tensor:
        if not 0 <= l <= self.n:
            raise LogicError(f"body length {l} not in 0..{self.n}")
        return self.rule_heads[l](features)

    def forward(self, tokens: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """Logits of every head concatenated in length order: ``[batch, 3^n + n + 1]``."""
        features = self.trunk(tokens, mask)
        return torch.cat([h(features) for h in self.rule_heads], dim=-1)

    def split_heads(self, flat: torch.Tensor) -> list[torch.Tensor]:
        return list(torch.split(flat, self.head_widths(), dim=-1))


def pad_tokens(batch: Sequence[Sequence[int]]) -> tuple[torch.Tensor, torch.Tensor]:
    """Right-pad token sets into ``(ids, mask)`` tensors."""
    if any(len(t) == 0 for t in batch):
        raise EmptyInput("every token set must be non-empty")
    width = max(len(t) for t in batch)
    ids = torch.zeros(len(batch), width, dtype=torch.long)
    mask = torch.zeros(len(batch), width, dtype=torch.bool)
    for i, t in enumerate(batch):
        ids[i, : len(t)] = torch.as_tensor(list(t), dtype=torch.long)
        mask[i, : len(t)] = True
    return ids, mask


@torch.no_grad()
def forward(model: RuleSetModel, tokens: Sequence[int], l: int) -> np.ndarray:
    """Sigmoid outputs of head ``l`` for one token set (inference mode)."""
    was_training = model.training
    model.eval()
    try:
        ids, mask = pad_tokens([tokens])
        if max(tokens) >= vocab_size(model.n):
            raise LogicError(f"token id {max(tokens)} outside the vocabulary for n={model.n}")
        probs = torch.sigmoid(model.head_logits(model.trunk(ids, mask), l))
    finally:
        model.train(was_training)
    return probs[0].numpy()


@torch.no_grad()
def forward_all(model: RuleSetModel, tokens: Sequence[int]) -> list[np.ndarray]:
    """Sigmoid outputs of every head, ``l = 0..n``."""
    was_training = model.training
    model.eval()
    try:
        ids, mask = pad_tokens([tokens])
        flat = torch.sigmoid(model(ids, mask))[0]
    finally:
        model.train(was_training)
    return [p.numpy() for p in model.split_heads(flat)]
