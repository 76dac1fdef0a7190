"""Sliding-window interaction accounting."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


@dataclass
class _Slot:
    step: int
    sent: dict[tuple[int, int], int] = field(default_factory=dict)
    handler_us: dict[int, float] = field(default_factory=dict)
    lp_wall_us: dict[int, float] = field(default_factory=dict)


class InteractionLedger:
    """Per-entity traffic by destination entity over the last ``window`` committed steps.

    Counts are kept per peer so traffic can be attributed to LPs under any
    placement, including one projected from moves not yet executed (see
    :meth:`view`). Running totals are maintained incrementally: a slot's
    contents are subtracted when it falls out of the ring.
    """

    def __init__(self, window: int = 16):
        if window < 1:
            raise ValueError("window must be >= 1")
        self.window = window
        self._slots: list[_Slot] = []
        self._peers: dict[tuple[int, int], int] = {}
        self._handler_us: dict[int, float] = defaultdict(float)
        self._lp_wall: dict[int, float] = defaultdict(float)

    @property
    def steps_covered(self) -> int:
        return len(self._slots)

    def begin_step(self, step: int) -> None:
        """Open the slot for ``step``, evicting the oldest once the window is full."""
        if len(self._slots) == self.window:
            self._evict(self._slots.pop(0))
        self._slots.append(_Slot(step))

    def _current(self) -> _Slot:
        if not self._slots:
            self.begin_step(0)
        return self._slots[-1]

    def _evict(self, slot: _Slot) -> None:
        peers = self._peers
        for key, c in slot.sent.items():
            left = peers[key] - c
            if left:
                peers[key] = left
            else:
                del peers[key]
        for eid, us in slot.handler_us.items():
            self._handler_us[eid] -= us
        for lp, us in slot.lp_wall_us.items():
            self._lp_wall[lp] -= us

    def record(self, src: int, dst: int, count: int = 1) -> None:
        slot = self._current()
        key = (src, dst)
        slot.sent[key] = slot.sent.get(key, 0) + count
        self._peers[key] = self._peers.get(key, 0) + count

    def record_counts(self, triples: Iterable[Sequence[int]]) -> None:
        """Bulk :meth:`record` for ``(src, dst, count)`` triples."""
        sent = self._current().sent
        peers = self._peers
        sent_get = sent.get
        peers_get = peers.get
        for src, dst, count in triples:
            key = (src, dst)
            sent[key] = sent_get(key, 0) + count
            peers[key] = peers_get(key, 0) + count

    def record_handler_time(self, eid: int, us: float) -> None:
        slot = self._current()
        slot.handler_us[eid] = slot.handler_us.get(eid, 0.0) + us
        self._handler_us[eid] += us

    def record_step_wall(self, lp: int, us: float) -> None:
        slot = self._current()
        slot.lp_wall_us[lp] = slot.lp_wall_us.get(lp, 0.0) + us
        self._lp_wall[lp] += us

    def peer_counts(self) -> dict[tuple[int, int], int]:
        return dict(self._peers)

    def weight_observed(self, eid: int) -> float:
        return max(0.0, self._handler_us.get(eid, 0.0))

    def window_wall_time(self, lp: int) -> float:
        return max(0.0, self._lp_wall.get(lp, 0.0))

    def view(self, homes: Mapping[int, int]) -> TrafficView:
        return TrafficView(self._peers, homes)


class TrafficView:
    """Window traffic ``sent[e][lp]`` attributed under a placement that can be moved.

    :meth:`move` relocates an entity and updates the rows of every entity
    that sent to it, so later decisions in the same round see the traffic
    as it will be routed once earlier decisions are applied.
    """

    def __init__(self, peers: Mapping[tuple[int, int], int], homes: Mapping[int, int]):
        self.homes = dict(homes)
        self._sent: dict[int, dict[int, int]] = {}
        self._total: dict[int, int] = defaultdict(int)
        self._incoming: dict[int, dict[int, int]] = defaultdict(dict)
        for (src, dst), c in peers.items():
            lp = self.homes[dst]
            row = self._sent.setdefault(src, {})
            row[lp] = row.get(lp, 0) + c
            self._total[src] += c
            self._incoming[dst][src] = c

    def sent(self, eid: int) -> dict[int, int]:
        return dict(self._sent.get(eid, {}))

    def sent_to(self, eid: int, lp: int) -> int:
        return self._sent.get(eid, {}).get(lp, 0)

    def total_sent(self, eid: int) -> int:
        return self._total.get(eid, 0)

    def active_senders(self) -> list[int]:
        return sorted(self._sent)

    def senders_to(self, eid: int) -> list[int]:
        return sorted(self._incoming.get(eid, ()))

    def move(self, eid: int, lp: int) -> None:
        old = self.homes[eid]
        if old == lp:
            return
        self.homes[eid] = lp
        for src, c in self._incoming.get(eid, {}).items():
            row = self._sent[src]
            left = row[old] - c
            if left:
                row[old] = left
            else:
                del row[old]
            row[lp] = row.get(lp, 0) + c


def record_interaction(ledger: InteractionLedger, src: int, dst: int) -> None:
    ledger.record(src, dst)


def external_ratio(traffic: TrafficView, e: int, home: int) -> float:
    """Fraction of ``e``'s window traffic addressed to LPs other than ``home``; 0 without traffic."""
    total = traffic.total_sent(e)
    if total == 0:
        return 0.0
    return (total - traffic.sent_to(e, home)) / total
