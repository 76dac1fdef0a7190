"""Proximity beacons between random walkers on a bounded grid.

A deliberately small stand-in for detailed wireless models: what matters to
the adaptive layer is that interaction locality follows position and shifts
as nodes move.
"""

from __future__ import annotations

import struct

from pads.kernel.rng import SplitMix64, entity_seed
from pads.kernel.types import Behavior, register_behavior
from pads.models.common import Population, fold_inbox

_STATE = struct.Struct(">iiIIIQQQQ")
_PAYLOAD = struct.Struct(">I")
# stay, north, south, east, west
MOVES = ((0, 0), (0, -1), (0, 1), (1, 0), (-1, 0))


class GridIndex:
    """Entity ids bucketed by cell, built from the directory of published positions."""

    def __init__(self, records):
        cells: dict[tuple[int, int], list[int]] = {}
        for eid in sorted(records):
            x, y = records[eid]
            cells.setdefault((x, y), []).append(eid)
        self.cells = cells

    def near(self, x: int, y: int, r: int):
        cells = self.cells
        for cy in range(y - r, y + r + 1):
            for cx in range(x - r, x + r + 1):
                members = cells.get((cx, cy))
                if members:
                    yield from members


@register_behavior
class WirelessNode(Behavior):
    kind = "wireless"
    uses_directory = True
    __slots__ = ("x", "y", "width", "height", "radius", "rng", "sent", "received", "acc")

    def __init__(self, x, y, width, height, radius, rng_state, sent=0, received=0, acc=0):
        self.x = x
        self.y = y
        self.width = width
        self.height = height
        self.radius = radius
        self.rng = SplitMix64(rng_state)
        self.sent = sent
        self.received = received
        self.acc = acc

    def step(self, inbox, ctx):
        if inbox:
            self.received += len(inbox)
            self.acc = fold_inbox(self.acc, inbox)
        if self.radius > 0:
            me = ctx.entity
            payload = _PAYLOAD.pack(self.sent & 0xFFFFFFFF)
            for other in ctx.directory.near(self.x, self.y, self.radius):
                if other != me:
                    ctx.send(other, payload)
            self.sent += 1
        dx, dy = MOVES[self.rng.below(5)]
        self.x = min(max(self.x + dx, 0), self.width - 1)
        self.y = min(max(self.y + dy, 0), self.height - 1)

    def publish(self):
        return (self.x, self.y)

    @classmethod
    def index_directory(cls, records):
        return GridIndex(records)

    def to_bytes(self) -> bytes:
        return _STATE.pack(
            self.x, self.y, self.width, self.height, self.radius, self.rng.state, self.sent, self.received, self.acc
        )

    @classmethod
    def from_bytes(cls, data: bytes) -> "WirelessNode":
        return cls(*_STATE.unpack(data))


def build_wireless(n: int, width: int, height: int, radius: int, seed: int, weight: float = 1.0) -> Population:
    """Nodes start uniformly at random; positions come from each node's own stream."""
    states = []
    for i in range(n):
        rng = SplitMix64(entity_seed(seed, i) ^ 0x5DEECE66D)
        x, y = rng.below(width), rng.below(height)
        states.append(WirelessNode(x, y, width, height, radius, entity_seed(seed, i)))
    return Population(states, [weight] * n)
