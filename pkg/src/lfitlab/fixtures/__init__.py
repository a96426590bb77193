"""Bundled Boolean networks.

These are self-contained reconstructions written for testing and
benchmarking, not copies of any published model files.  Each file states its
size and maximum body length in its header comment.
"""

from __future__ import annotations

from importlib import resources

from lfitlab.formats import parse_bnet
from lfitlab.logic import LogicProgram

THREE_NODE = ("three_node_a", "three_node_b", "raf")


def names() -> list[str]:
    return sorted(p.name[: -len(".bnet")] for p in resources.files(__name__).iterdir() if p.name.endswith(".bnet"))


def text(name: str) -> str:
    return resources.files(__name__).joinpath(f"{name}.bnet").read_text()


def load(name: str) -> LogicProgram:
    return parse_bnet(text(name))
