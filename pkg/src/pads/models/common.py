from __future__ import annotations

import zlib
from dataclasses import dataclass

from pads.kernel.rng import MASK64
from pads.kernel.types import Behavior, Interaction


@dataclass
class Population:
    """Initial entity states of a model, indexed by entity id."""

    states: list[Behavior]
    weights: list[float]
    groups: list[int] | None = None  # community of each entity, when the model has one


def fold_inbox(acc: int, inbox: list[Interaction]) -> int:
    """Order-sensitive checksum of delivered messages, kept in entity state."""
    for src, _dst, send_step, seq, payload in inbox:
        acc = ((acc * 0x100000001B3) ^ (src << 20) ^ (send_step << 8) ^ seq ^ zlib.crc32(payload)) & MASK64
    return acc
