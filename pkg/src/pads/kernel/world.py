"""Entity registry, logical processes, inbox delivery and state digests."""

from __future__ import annotations

import hashlib
import struct
import time
from collections import Counter, defaultdict
from typing import Callable, Iterable, Sequence

from pads.errors import ConfigError, EntityFault, LifecycleError, RoutingFault
from pads.kernel.rng import entity_seed
from pads.kernel.types import (
    Behavior,
    Interaction,
    SimEntity,
    StepContext,
    StepReport,
    behavior_class,
)

_DIGEST_ITEM = struct.Struct(">QI")


def state_digest(states: Iterable[tuple[int, bytes]]) -> int:
    """64-bit BLAKE2b digest over (id, serialized state) pairs.

    Pairs are hashed in ascending id order whatever order they arrive in, so
    the digest never depends on placement.
    """
    h = hashlib.blake2b(digest_size=8)
    for eid, raw in sorted(states, key=lambda p: p[0]):
        h.update(_DIGEST_ITEM.pack(eid, len(raw)))
        h.update(raw)
    return int.from_bytes(h.digest(), "big")


EMPTY_DIGEST = state_digest(())


class World:
    """Registry of every entity in a simulation plus its initial placement.

    Ids are dense and assigned in registration order. Registration is only
    allowed before the world is started.
    """

    def __init__(self, pool_size: int, seed: int = 0):
        if pool_size < 1:
            raise ConfigError("pool_size must be >= 1", "$.pool_size")
        self.pool_size = pool_size
        self.seed = seed
        self.entities: list[SimEntity] = []
        self.placement: list[int] = []
        self.started = False

    def __len__(self) -> int:
        return len(self.entities)

    def register_entity(
        self,
        behavior: str | type[Behavior],
        initial_state: bytes | Behavior,
        weight: float = 1.0,
        placement: int = 0,
    ) -> int:
        if self.started:
            raise LifecycleError("entities can only be registered before the simulation starts")
        if not 0 <= placement < self.pool_size:
            raise ConfigError(f"placement {placement} outside [0, {self.pool_size})", "$.placement")
        if weight < 0:
            raise ConfigError(f"weight must be >= 0, got {weight}", "$.weight")
        cls = behavior if isinstance(behavior, type) else behavior_class(behavior)
        state = initial_state if isinstance(initial_state, Behavior) else cls.from_bytes(initial_state)
        eid = len(self.entities)
        self.entities.append(SimEntity(eid, cls.kind, state, float(weight), entity_seed(self.seed, eid)))
        self.placement.append(placement)
        return eid

    def residents(self, lp: int) -> list[int]:
        return [eid for eid, p in enumerate(self.placement) if p == lp]

    def state_digest(self) -> int:
        return state_digest((e.id, e.serialize()) for e in self.entities)


def group_inbox(interactions: Iterable[Interaction], t: int) -> dict[int, list[Interaction]]:
    """Group interactions due at step ``t`` by destination, each slice sorted by (src, seq)."""
    inbox: dict[int, list[Interaction]] = defaultdict(list)
    for msg in interactions:
        if msg.send_step + 1 != t:
            raise RoutingFault(
                f"interaction {msg.src}->{msg.dst} sent at step {msg.send_step} cannot be delivered at step {t}"
            )
        inbox[msg.dst].append(msg)
    for slice_ in inbox.values():
        slice_.sort()
    return dict(inbox)


def route(interactions: Iterable[Interaction], placement: Sequence[int]) -> dict[int, list[Interaction]]:
    by_lp: dict[int, list[Interaction]] = defaultdict(list)
    n = len(placement)
    for msg in interactions:
        dst = msg.dst
        if not 0 <= dst < n:
            raise RoutingFault(f"interaction from entity {msg.src} addressed to unknown entity {dst}")
        by_lp[placement[dst]].append(msg)
    return dict(by_lp)


def deliver_inboxes(
    outboxes: Iterable[Iterable[Interaction]], placement: Sequence[int], t: int
) -> dict[int, dict[int, list[Interaction]]]:
    """Route every interaction due at ``t`` to the LP hosting its destination."""
    merged = [msg for box in outboxes for msg in box]
    return {lp: group_inbox(msgs, t) for lp, msgs in route(merged, placement).items()}


class LogicalProcess:
    """Container executing its resident entities once per step."""

    def __init__(self, lp_id: int, placement: list[int]):
        self.lp_id = lp_id
        self.placement = placement
        self.entities: dict[int, SimEntity] = {}
        self.inbox: dict[int, list[Interaction]] = {}
        self.pending: list[Interaction] = []
        self.outbox: list[Interaction] = []
        self.step_wall_time = 0.0
        self._order: list[int] | None = None

    @property
    def resident(self) -> set[int]:
        return set(self.entities)

    def add(self, entity: SimEntity) -> None:
        self.entities[entity.id] = entity
        self._order = None

    def remove(self, eid: int) -> SimEntity:
        self._order = None
        return self.entities.pop(eid)

    def deliver(self, t: int) -> None:
        """Turn interactions received for step ``t`` into the sorted inbox."""
        self.inbox = group_inbox(self.pending, t)
        self.pending = []
        for dst in self.inbox:
            if dst not in self.entities:
                raise RoutingFault(f"LP {self.lp_id} received interactions for non-resident entity {dst}")

    def take_pending(self, eid: int) -> list[Interaction]:
        """Remove and return the not-yet-delivered interactions addressed to ``eid``."""
        mine = [m for m in self.pending if m.dst == eid]
        if mine:
            self.pending = [m for m in self.pending if m.dst != eid]
        return mine

    def run_step(
        self,
        t: int,
        directory=None,
        background_units: float = 0.0,
        burn: Callable[[float], None] | None = None,
        time_entities: bool = False,
    ) -> tuple[StepReport, dict[int, list[Interaction]], dict[int, float] | None]:
        """Execute every resident once.

        Returns the step report, outgoing interactions grouped by destination LP
        and, when ``time_entities`` is set, per-entity handler time in microseconds.
        """
        clock = time.perf_counter
        t0 = clock()
        if self._order is None:
            self._order = sorted(self.entities)
        out: list[Interaction] = []
        ctx = StepContext(t, out, directory, burn)
        inbox = self.inbox
        entities = self.entities
        empty = ()
        handler_us: dict[int, float] | None = {} if time_entities else None
        eid = -1
        try:
            if handler_us is None:
                for eid in self._order:
                    ctx.begin(eid)
                    entities[eid].state.step(inbox.get(eid, empty), ctx)
            else:
                for eid in self._order:
                    ctx.begin(eid)
                    h0 = clock()
                    entities[eid].state.step(inbox.get(eid, empty), ctx)
                    handler_us[eid] = (clock() - h0) * 1e6
        except Exception as exc:
            raise EntityFault(eid, t, exc) from exc
        if background_units > 0 and burn is not None:
            burn(background_units)
        self.outbox = out
        by_lp = route(out, self.placement)
        local = len(by_lp.get(self.lp_id, ()))
        self.inbox = {}
        wall = (clock() - t0) * 1e6
        self.step_wall_time = wall
        report = StepReport(self.lp_id, t, local, len(out) - local, len(self._order), wall)
        return report, by_lp, handler_us


def traffic_counts(by_lp: dict[int, list[Interaction]]) -> list[tuple[int, int, int]]:
    """(src, dst, count) triples for the ledger, sorted."""
    counts = Counter((msg.src, msg.dst) for msgs in by_lp.values() for msg in msgs)
    return sorted((src, dst, c) for (src, dst), c in counts.items())
