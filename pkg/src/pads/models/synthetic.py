"""Tunable workload for load-balancing, shrink and speedup experiments.

Each entity burns ``work`` calibrated work units per step and emits on
average ``rate`` messages, each addressed inside its own group with
probability ``q``.
"""

from __future__ import annotations

import struct

from pads.kernel.rng import SplitMix64, entity_seed
from pads.kernel.types import Behavior, register_behavior
from pads.models.common import Population, fold_inbox
from pads.models.community import pick_peer

_STATE = struct.Struct(">dIIIddQQQQ")
_PAYLOAD = struct.Struct(">I")


@register_behavior
class SyntheticEntity(Behavior):
    kind = "synthetic"
    __slots__ = ("work", "group", "groups", "size", "q", "rate", "rng", "sent", "received", "acc")

    def __init__(self, work, group, groups, size, q, rate, rng_state, sent=0, received=0, acc=0):
        self.work = work
        self.group = group
        self.groups = groups
        self.size = size
        self.q = q
        self.rate = rate
        self.rng = SplitMix64(rng_state)
        self.sent = sent
        self.received = received
        self.acc = acc

    def step(self, inbox, ctx):
        if inbox:
            self.received += len(inbox)
            self.acc = fold_inbox(self.acc, inbox)
        if self.work > 0:
            ctx.burn(self.work)
        rate = self.rate
        if rate <= 0:
            return
        count = int(rate)
        if self.rng.random() < rate - count:
            count += 1
        n = self.size * self.groups
        for _ in range(count):
            peer = pick_peer(self.rng, ctx.entity, self.group, self.size, n, self.q)
            ctx.send(peer, _PAYLOAD.pack(self.sent & 0xFFFFFFFF))
            self.sent += 1

    def to_bytes(self) -> bytes:
        return _STATE.pack(
            self.work, self.group, self.groups, self.size, self.q, self.rate,
            self.rng.state, self.sent, self.received, self.acc,
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "SyntheticEntity":
        return cls(*_STATE.unpack(data))


def draw_weights(n: int, low: float, high: float, seed: int) -> list[float]:
    """Weights uniform in [low, high], one independent draw per entity."""
    out = []
    for i in range(n):
        u = SplitMix64(entity_seed(seed, i) ^ 0xA5A5A5A5).random()
        out.append(low + (high - low) * u)
    return out


def build_synthetic(
    n: int,
    seed: int,
    groups: int = 1,
    q: float = 1.0,
    rate: float = 0.0,
    weight_low: float = 1.0,
    weight_high: float = 1.0,
    burn: bool = False,
) -> Population:
    if n % groups:
        raise ValueError(f"n_entities={n} is not divisible into {groups} groups")
    size = n // groups
    if size < 2 and rate > 0:
        raise ValueError("groups need at least 2 members when entities send messages")
    weights = draw_weights(n, weight_low, weight_high, seed)
    states = [
        SyntheticEntity(weights[i] if burn else 0.0, i // size, groups, size, q, rate, entity_seed(seed, i))
        for i in range(n)
    ]
    return Population(states, weights, [i // size for i in range(n)])
