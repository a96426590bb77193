"""Binary model checkpoints with a JSON sidecar.

Layout (little endian): ``b"DLF2M"``, u8 version, u8 n, seven u32
architecture fields in :data:`_DIMS` order, an f64 dropout rate, a u8
layer-norm flag, then every parameter tensor in ``named_parameters`` order
as float64.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import torch

from lfitlab.dataset import CorruptRecord, VersionMismatch
from lfitlab.neural.model import DTYPE, ModelConfig, RuleSetModel

MAGIC = b"DLF2M"
VERSION = 1
_DIMS = ("d_model", "enc_blocks", "heads", "inducing", "seeds", "ff_hidden", "ff_layers")
_HEADER = struct.Struct("<BB7IdB")


def sidecar_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def save_checkpoint(path: str | Path, model: RuleSetModel, meta: dict | None = None) -> None:
    path = Path(path)
    c = model.config
    out = bytearray(MAGIC)
    out += _HEADER.pack(VERSION, c.n, *(getattr(c, k) for k in _DIMS), c.dropout, int(c.layer_norm))
    for _, p in model.named_parameters():
        out += p.detach().to(DTYPE).numpy().astype("<f8").tobytes()
    path.write_bytes(bytes(out))
    sidecar = {"format_version": VERSION, "model": c.to_dict(), **(meta or {})}
    sidecar_path(path).write_text(json.dumps(sidecar, indent=2) + "\n")


def load_checkpoint(path: str | Path) -> tuple[RuleSetModel, dict]:
    path = Path(path)
    data = path.read_bytes()
    if data[: len(MAGIC)] != MAGIC or len(data) < len(MAGIC) + _HEADER.size:
        raise CorruptRecord(f"{path}: not a model checkpoint")
    fields = _HEADER.unpack_from(data, len(MAGIC))
    version, n = fields[0], fields[1]
    if version != VERSION:
        raise VersionMismatch(f"{path}: checkpoint version {version}, expected {VERSION}")
    dims = dict(zip(_DIMS, fields[2:9]))
    config = ModelConfig(n=n, dropout=fields[9], layer_norm=bool(fields[10]), **dims)
    model = RuleSetModel(config)
    pos = len(MAGIC) + _HEADER.size
    with torch.no_grad():
        for name, p in model.named_parameters():
            size = p.numel() * 8
            if pos + size > len(data):
                raise CorruptRecord(f"{path}: truncated at parameter {name}")
            arr = np.frombuffer(data, "<f8", p.numel(), pos).reshape(p.shape)
            p.copy_(torch.from_numpy(arr.astype(np.float64)))
            pos += size
    if pos != len(data):
        raise CorruptRecord(f"{path}: {len(data) - pos} trailing bytes")
    meta = {}
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
    model.eval()
    return model, meta
