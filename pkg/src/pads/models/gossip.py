"""Push gossip with probabilistic, forward-once relaying."""

from __future__ import annotations

import struct

from pads.kernel.rng import SplitMix64, entity_seed
from pads.kernel.types import Behavior, register_behavior
from pads.models.common import Population
from pads.models.graphs import Graph

_HEAD = struct.Struct(">BBdQqI")


@register_behavior
class GossipNode(Behavior):
    """A node that relays the rumor to each neighbor with probability ``p``, once."""

    kind = "gossip"
    __slots__ = ("informed", "forwarded", "p", "rng", "neighbors", "informed_at")

    def __init__(self, neighbors, p, rng_state, informed=False, forwarded=False, informed_at=-1):
        self.neighbors = list(neighbors)
        self.p = p
        self.rng = SplitMix64(rng_state)
        self.informed = informed
        self.forwarded = forwarded
        self.informed_at = informed_at

    def step(self, inbox, ctx):
        if self.forwarded:
            return
        if not self.informed:
            if not inbox:
                return
            self.informed = True
            self.informed_at = ctx.step
        self.forwarded = True
        p = self.p
        rng = self.rng
        for nb in self.neighbors:
            if rng.random() < p:
                ctx.send(nb)

    def to_bytes(self) -> bytes:
        nbrs = self.neighbors
        return _HEAD.pack(
            self.informed, self.forwarded, self.p, self.rng.state, self.informed_at, len(nbrs)
        ) + struct.pack(f">{len(nbrs)}Q", *nbrs)

    @classmethod
    def from_bytes(cls, data: bytes) -> "GossipNode":
        informed, forwarded, p, rng, informed_at, deg = _HEAD.unpack_from(data)
        nbrs = struct.unpack_from(f">{deg}Q", data, _HEAD.size)
        return cls(nbrs, p, rng, bool(informed), bool(forwarded), informed_at)


def build_gossip(graph: Graph, p: float, seed: int, sources=(0,), weight: float = 1.0) -> Population:
    sources = set(sources)
    states = [
        GossipNode(graph.adjacency[i], p, entity_seed(seed, i), informed=i in sources, informed_at=-1 if i not in sources else 0)
        for i in range(graph.n)
    ]
    return Population(states, [weight] * graph.n)


def informed_count(states) -> int:
    return sum(1 for s in states if s.informed)
