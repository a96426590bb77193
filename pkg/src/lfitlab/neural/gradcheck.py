"""Central finite-difference check of the analytic gradients.

A probe is only meaningful where the loss is smooth over ``[p - eps, p + eps]``.
ReLU makes it piecewise smooth, so every probe also records which ReLU inputs
are positive at both stencil points; when the pattern differs from the
unperturbed one the probe straddles a kink and another parameter is drawn.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import torch
from torch import nn

from lfitlab.dataset import TrainingExample
from lfitlab.neural.model import RuleSetModel
from lfitlab.neural.train import batch_loss, loss_and_grads

# Below this magnitude the O(eps^2) truncation error of a central difference
# is comparable to the gradient itself; it also absorbs exact-zero gradients
# (key biases cancel inside the softmax).
GRAD_FLOOR = 1e-7

LAYER_TYPES = {
    "embedding": lambda name: name.startswith("embedding."),
    "attention": lambda name: any(f".{k}." in name for k in "qkvo"),
    "block_ff": lambda name: ".ff1." in name or ".ff2." in name,
    "layer_norm": lambda name: ".ln1." in name or ".ln2." in name,
    "set_vectors": lambda name: name.endswith(("inducing", "seeds")),
    "feedforward": lambda name: name.startswith("feedforward."),
    "heads": lambda name: name.startswith("rule_heads."),
}


def layer_type(name: str) -> str:
    for kind, pred in LAYER_TYPES.items():
        if pred(name):
            return kind
    raise KeyError(name)


@dataclass(frozen=True)
class Probe:
    name: str
    flat_index: int
    analytic: float
    numeric: float

    @property
    def rel_error(self) -> float:
        """``|a - n| / max(|a|, |n|, GRAD_FLOOR)``."""
        scale = max(abs(self.analytic), abs(self.numeric), GRAD_FLOOR)
        return abs(self.analytic - self.numeric) / scale


class _KinkWatch:
    def __init__(self, model: nn.Module):
        self.patterns: list[torch.Tensor] = []
        self.handles = [m.register_forward_hook(self._hook) for m in model.modules() if isinstance(m, nn.ReLU)]

    def _hook(self, module, inputs, output) -> None:
        self.patterns.append(inputs[0] > 0)

    def take(self) -> list[torch.Tensor]:
        out, self.patterns = self.patterns, []
        return out

    def close(self) -> None:
        for h in self.handles:
            h.remove()


def check_gradients(
    model: RuleSetModel,
    batch: Sequence[TrainingExample],
    per_type: int = 100,
    eps: float = 1e-3,
    seed: int = 0,
    max_draws: int = 20,
) -> dict[str, list[Probe]]:
    """Probe ``per_type`` smooth parameters of every layer type (fewer if a type is smaller)."""
    rng = np.random.default_rng(seed)
    _, grads = loss_and_grads(model, batch)
    params = dict(model.named_parameters())
    by_type: dict[str, list[str]] = {}
    for name in params:
        by_type.setdefault(layer_type(name), []).append(name)

    model.eval()
    watch = _KinkWatch(model)
    try:
        with torch.no_grad():
            batch_loss(model, batch)
        reference = watch.take()

        def loss_at() -> tuple[float, bool]:
            with torch.no_grad():
                value = float(batch_loss(model, batch))
            same = all(torch.equal(a, b) for a, b in zip(watch.take(), reference))
            return value, same

        result: dict[str, list[Probe]] = {}
        for kind, names in by_type.items():
            candidates = [(nm, j) for nm in names for j in range(params[nm].numel())]
            order = rng.permutation(len(candidates))
            probes: list[Probe] = []
            budget = max_draws * per_type
            for k in order[:budget]:
                nm, j = candidates[k]
                flat = params[nm].data.view(-1)
                old = flat[j].item()
                flat[j] = old + eps
                f_plus, ok_plus = loss_at()
                flat[j] = old - eps
                f_minus, ok_minus = loss_at()
                flat[j] = old
                if not (ok_plus and ok_minus):
                    continue
                numeric = (f_plus - f_minus) / (2 * eps)
                probes.append(Probe(nm, int(j), float(grads[nm].reshape(-1)[j]), numeric))
                if len(probes) >= per_type:
                    break
            result[kind] = probes
    finally:
        watch.close()
    return result
