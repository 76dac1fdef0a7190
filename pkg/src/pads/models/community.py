"""Synthetic community workload whose best partition is known by construction.

Entities are split into equally sized contiguous id blocks. Every step each
entity sends one message, to a random member of its own block with
probability ``q`` and to a random member of another block otherwise, so
mapping blocks one-to-one onto LPs gives local ratio ``q``.
"""

from __future__ import annotations

import struct

from pads.kernel.rng import SplitMix64, entity_seed
from pads.kernel.types import Behavior, register_behavior
from pads.models.common import Population, fold_inbox

_STATE = struct.Struct(">IIIdQQQQ")
_PAYLOAD = struct.Struct(">I")


def pick_peer(rng: SplitMix64, me: int, community: int, size: int, n: int, q: float) -> int:
    lo = community * size
    if n == size or rng.random() < q:
        r = rng.below(size - 1)
        return lo + (r if r < me - lo else r + 1)
    r = rng.below(n - size)
    return r if r < lo else r + size


@register_behavior
class CommunityMember(Behavior):
    kind = "community"
    __slots__ = ("community", "communities", "size", "q", "rng", "sent", "received", "acc")

    def __init__(self, community, communities, size, q, rng_state, sent=0, received=0, acc=0):
        self.community = community
        self.communities = communities
        self.size = size
        self.q = q
        self.rng = SplitMix64(rng_state)
        self.sent = sent
        self.received = received
        self.acc = acc

    def step(self, inbox, ctx):
        if inbox:
            self.received += len(inbox)
            self.acc = fold_inbox(self.acc, inbox)
        peer = pick_peer(self.rng, ctx.entity, self.community, self.size, self.size * self.communities, self.q)
        ctx.send(peer, _PAYLOAD.pack(self.sent & 0xFFFFFFFF))
        self.sent += 1

    def to_bytes(self) -> bytes:
        return _STATE.pack(
            self.community, self.communities, self.size, self.q, self.rng.state, self.sent, self.received, self.acc
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "CommunityMember":
        return cls(*_STATE.unpack(data))


def build_community(communities: int, size: int, q: float, seed: int, weight: float = 1.0) -> Population:
    if size < 2:
        raise ValueError("communities need at least 2 members")
    n = communities * size
    states = [CommunityMember(i // size, communities, size, q, entity_seed(seed, i)) for i in range(n)]
    return Population(states, [weight] * n, [i // size for i in range(n)])
