"""Migration heuristics: clustering, load balancing and active-LP adaptation.

The functions read window traffic through a :class:`TrafficView` and a
load projection, and return decisions without touching the real placement;
both the view and the projection advance with every approved decision. Every tie is broken by the
lowest id so decision lists are reproducible.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Mapping

from pads.gaia.ledger import TrafficView
from pads.gaia.params import GaiaParams


@dataclass(frozen=True)
class LoadReport:
    lp_id: int
    resident_count: int
    window_wall_time_us: float
    window_work_units: float


@dataclass(frozen=True)
class MigrationDecision:
    entity: int
    from_lp: int
    to_lp: int
    external_ratio: float = 0.0
    benefit_estimate: float = 0.0
    cost_estimate: int = 0
    reason: str = "cluster"

    def __post_init__(self):
        if self.from_lp == self.to_lp:
            raise ValueError(f"migration of entity {self.entity} to its own LP {self.to_lp}")


def load_value(load: LoadReport, params: GaiaParams) -> float:
    return load.window_wall_time_us if params.balance_on_wall_time else load.window_work_units


class Projection:
    """Per-LP load as it will be once the decisions approved so far are applied."""

    def __init__(self, loads: Iterable[LoadReport], params: GaiaParams, active: Iterable[int] | None = None):
        self.params = params
        self.load = {r.lp_id: load_value(r, params) for r in loads}
        self.active = sorted(self.load if active is None else active)
        total = sum(self.load.values())
        capacity = sum(params.capacity(lp) for lp in self.active)
        self.cap = {
            lp: (1 + params.load_slack) * total * params.capacity(lp) / capacity for lp in self.load
        }

    def mean(self) -> float:
        return sum(self.load.values()) / len(self.active)

    def fits(self, lp: int, extra: float) -> bool:
        return self.load[lp] + extra <= self.cap[lp] + 1e-9

    def move(self, src: int, dst: int, amount: float) -> None:
        self.load[src] -= amount
        self.load[dst] += amount

    def relative(self, lp: int) -> float:
        return self.load[lp] / self.params.capacity(lp)


def _argmax_destination(sent: Mapping[int, int]) -> int:
    return min(sent, key=lambda lp: (-sent[lp], lp))


def cluster_gate(traffic: TrafficView, params: GaiaParams, e: int, size: int) -> MigrationDecision | None:
    """The ratio and payback gates for one entity; None when either fails."""
    total = traffic.total_sent(e)
    if total == 0:
        return None
    home = traffic.homes[e]
    sent = traffic.sent(e)
    ratio = (total - sent.get(home, 0)) / total
    if ratio <= params.migration_threshold:
        return None
    dest = _argmax_destination(sent)
    if dest == home:
        return None
    rate = sent[dest] / params.window
    if rate * params.horizon() <= size / params.bytes_per_message_equivalent:
        return None
    return MigrationDecision(e, home, dest, ratio, rate, size, "cluster")


def cluster_candidates(
    traffic: TrafficView,
    params: GaiaParams,
    sizes: Mapping[int, int],
) -> list[MigrationDecision]:
    """Entities passing the ratio gate and the payback gate, best first."""
    out = []
    for e in traffic.active_senders():
        d = cluster_gate(traffic, params, e, sizes.get(e, 0))
        if d is not None:
            out.append(d)
    out.sort(key=lambda d: (-d.external_ratio, d.entity))
    return out


class _Round:
    """Shared bookkeeping for the decisions of one evaluation."""

    def __init__(self, traffic: TrafficView, projection: Projection, entity_load, exclude: Iterable[int]):
        self.traffic = traffic
        self.proj = projection
        self.entity_load = entity_load
        self.skip = set(exclude)
        self.members: dict[int, set[int]] = {}
        for e, lp in traffic.homes.items():
            self.members.setdefault(lp, set()).add(e)
        self.out: list[MigrationDecision] = []

    def load(self, e: int) -> float:
        return self.entity_load.get(e, 0.0)

    def approve(self, decision: MigrationDecision) -> None:
        e = decision.entity
        self.proj.move(decision.from_lp, decision.to_lp, self.load(e))
        self.traffic.move(e, decision.to_lp)
        self.members[decision.from_lp].discard(e)
        self.members.setdefault(decision.to_lp, set()).add(e)
        self.skip.add(e)
        self.out.append(decision)


def evaluate_migrations(
    traffic: TrafficView,
    loads: list[LoadReport],
    params: GaiaParams,
    sizes: Mapping[int, int],
    entity_load: Mapping[int, float],
    *,
    budget: int | None = None,
    projection: Projection | None = None,
    exclude: Iterable[int] = (),
    make_room: bool | None = None,
) -> list[MigrationDecision]:
    """Clustering decisions: move entities that mostly talk to another LP.

    A candidate needs an external ratio above the threshold, must pay back
    its serialized size within the cost horizon, and must not push its
    destination over the load cap given the moves already approved.
    Candidates are taken best ratio first, and every approval is applied to
    ``traffic`` before the next pick, so ratios and destinations always
    reflect the placement the round has produced so far.

    With ``make_room`` a candidate blocked by the load cap may first send
    a resident of the destination to the candidate's home, provided the
    exchange pays back both serialized states. The eviction is emitted as a
    ``balance`` decision just before the clustering decision it unblocks.
    """
    proj = projection if projection is not None else Projection(loads, params)
    limit = budget if budget is not None else params.budget(len(traffic.homes))
    make_room = params.make_room if make_room is None else make_room
    rnd = _Round(traffic, proj, entity_load, exclude)
    active = set(proj.active)
    heap = [(-d.external_ratio, d.entity) for d in cluster_candidates(traffic, params, sizes) if d.entity not in rnd.skip]
    heapq.heapify(heap)

    def requeue(moved: int) -> None:
        for s in traffic.senders_to(moved):
            if s in rnd.skip:
                continue
            d = cluster_gate(traffic, params, s, sizes.get(s, 0))
            if d is not None:
                heapq.heappush(heap, (-d.external_ratio, s))

    while heap and len(rnd.out) < limit:
        neg, e = heapq.heappop(heap)
        if e in rnd.skip:
            continue
        cand = cluster_gate(traffic, params, e, sizes.get(e, 0))
        if cand is None:
            continue
        if cand.external_ratio != -neg:
            heapq.heappush(heap, (-cand.external_ratio, e))
            continue
        home, dest = cand.from_lp, cand.to_lp
        if dest not in active:
            continue
        amount = rnd.load(e)
        if proj.fits(dest, amount):
            rnd.approve(cand)
            requeue(e)
            continue
        if not make_room or len(rnd.out) + 2 > limit:
            continue
        evict = _exchange_partner(rnd, params, cand, sizes)
        if evict is not None:
            rnd.approve(MigrationDecision(evict, dest, home, 0.0, 0.0, 0, "balance"))
            rnd.approve(cluster_gate(traffic, params, e, sizes.get(e, 0)) or cand)
            requeue(evict)
            requeue(e)
    return rnd.out


def _exchange_partner(rnd: _Round, params: GaiaParams, cand: MigrationDecision, sizes) -> int | None:
    """Resident of the destination to send the other way so the pair pays off."""
    traffic, proj = rnd.traffic, rnd.proj
    e, home, dest = cand.entity, cand.from_lp, cand.to_lp
    gain = traffic.sent_to(e, dest) - traffic.sent_to(e, home)
    scale = params.horizon() / params.window
    amount = rnd.load(e)
    best = None
    best_key = None
    for b in rnd.members.get(dest, ()):
        if b in rnd.skip:
            continue
        sent_b = traffic.sent(b)
        if sent_b and _argmax_destination(sent_b) == dest:
            continue
        b_gain = traffic.sent_to(b, home) - traffic.sent_to(b, dest)
        cost = (sizes.get(e, 0) + sizes.get(b, 0)) / params.bytes_per_message_equivalent
        if (gain + b_gain) * scale <= cost:
            continue
        key = (-b_gain, traffic.total_sent(b), b)
        if best_key is not None and key >= best_key:
            continue
        delta = rnd.load(b) - amount
        if not (proj.fits(dest, -delta) and proj.fits(home, delta)):
            continue
        best, best_key = b, key
    return best


def refine_exchanges(
    traffic: TrafficView,
    loads: list[LoadReport],
    params: GaiaParams,
    sizes: Mapping[int, int],
    entity_load: Mapping[int, float],
    *,
    budget: int,
    projection: Projection | None = None,
    exclude: Iterable[int] = (),
) -> list[MigrationDecision]:
    """Kernighan-Lin style pair exchanges between two LPs.

    For the LP pair carrying the most cross traffic, residents are swapped
    one pair at a time, always the pair with the best combined gain given the
    swaps made so far, even when that gain is negative. Only the prefix of
    swaps with the largest cumulative gain is kept, and only if that gain
    pays back the serialized size of everything it moves within the cost
    horizon. Swapped entities carry equal load in both directions when
    weights are equal; a swap is skipped if it would push either LP over
    the load cap.
    """
    proj = projection if projection is not None else Projection(loads, params)
    rnd = _Round(traffic, proj, entity_load, exclude)
    scale = params.horizon() / params.window
    active = set(proj.active)
    cross: dict[tuple[int, int], int] = {}
    for e in traffic.active_senders():
        home = traffic.homes[e]
        for lp, c in traffic.sent(e).items():
            if lp != home and home in active and lp in active:
                key = (min(home, lp), max(home, lp))
                cross[key] = cross.get(key, 0) + c
    for x, y in sorted(cross, key=lambda k: (-cross[k], k)):
        room = budget - len(rnd.out)
        if room < 2:
            break
        swaps: list[tuple[int, int]] = []
        cumulative = 0
        best_gain, best_len = 0.0, 0
        moved_bytes = 0
        best_bytes = 0
        for _ in range(room // 2):
            a = _best_mover(rnd, x, y)
            if a is None:
                break
            gain_a = traffic.sent_to(a, y) - traffic.sent_to(a, x)
            traffic.move(a, y)
            b = _best_mover(rnd, y, x, exclude=a)
            if b is None:
                traffic.move(a, x)
                break
            gain_b = traffic.sent_to(b, x) - traffic.sent_to(b, y)
            delta = rnd.load(a) - rnd.load(b)
            if not (proj.fits(y, delta) and proj.fits(x, -delta)):
                traffic.move(a, x)
                break
            traffic.move(b, x)
            proj.move(x, y, delta)
            rnd.skip.update((a, b))
            swaps.append((a, b))
            cumulative += gain_a + gain_b
            moved_bytes += sizes.get(a, 0) + sizes.get(b, 0)
            if cumulative > best_gain:
                best_gain, best_len, best_bytes = cumulative, len(swaps), moved_bytes
        for a, b in reversed(swaps[best_len:]):
            traffic.move(a, x)
            traffic.move(b, y)
            proj.move(y, x, rnd.load(a) - rnd.load(b))
            rnd.skip.difference_update((a, b))
        if best_len and best_gain * scale <= best_bytes / params.bytes_per_message_equivalent:
            for a, b in reversed(swaps[:best_len]):
                traffic.move(a, x)
                traffic.move(b, y)
                proj.move(y, x, rnd.load(a) - rnd.load(b))
                rnd.skip.difference_update((a, b))
            best_len = 0
        for a, b in swaps[:best_len]:
            for e, src, dst in ((a, x, y), (b, y, x)):
                rnd.members[src].discard(e)
                rnd.members.setdefault(dst, set()).add(e)
                rnd.out.append(MigrationDecision(e, src, dst, 0.0, 0.0, sizes.get(e, 0), "exchange"))
    return rnd.out


def _best_mover(rnd: _Round, src: int, dst: int, exclude: int | None = None) -> int | None:
    traffic = rnd.traffic
    best = None
    best_key = None
    for e in rnd.members.get(src, ()):
        if e in rnd.skip or e == exclude:
            continue
        key = (traffic.sent_to(e, src) - traffic.sent_to(e, dst), e)
        if best_key is None or key < best_key:
            best, best_key = e, key
    return best


def rebalance(
    traffic: TrafficView,
    loads: list[LoadReport],
    params: GaiaParams,
    entity_load: Mapping[int, float],
    *,
    budget: int | None = None,
    projection: Projection | None = None,
    exclude: Iterable[int] = (),
) -> list[MigrationDecision]:
    """Drain LPs above the load cap into the least loaded LP.

    The most overloaded LP gives up its lightest-traffic resident first
    (ties by lowest id) as long as the move fits under the destination's
    cap; an LP with nothing left that fits is skipped for the rest of the
    round. Entities carrying no load are never moved since they cannot
    change the balance.
    """
    proj = projection if projection is not None else Projection(loads, params)
    limit = budget if budget is not None else params.budget(len(traffic.homes))
    rnd = _Round(traffic, proj, entity_load, exclude)
    stuck: set[int] = set()
    while len(rnd.out) < limit:
        over = [lp for lp in proj.active if proj.load[lp] > proj.cap[lp] + 1e-9 and lp not in stuck]
        if not over:
            break
        src = min(over, key=lambda lp: (-(proj.load[lp] - proj.cap[lp]), lp))
        dst = min((lp for lp in proj.active if lp != src), key=lambda lp: (proj.relative(lp), lp), default=None)
        if dst is None:
            break
        best = None
        for e in sorted(rnd.members.get(src, ()), key=lambda e: (traffic.total_sent(e), e)):
            amount = rnd.load(e)
            if e in rnd.skip or amount <= 0:
                continue
            if proj.fits(dst, amount):
                best = e
                break
        if best is None:
            stuck.add(src)
            continue
        rnd.approve(MigrationDecision(best, src, dst, 0.0, 0.0, 0, "balance"))
    return rnd.out


@dataclass
class HysteresisState:
    below: int = 0
    above: int = 0


def adapt_active_lp_count(
    loads: list[LoadReport],
    params: GaiaParams,
    current_active: int,
    state: HysteresisState | None = None,
    pool_size: int | None = None,
) -> int:
    """Shrink or grow the number of active LPs by one after a sustained signal.

    ``state`` carries the consecutive-evaluation counters between calls;
    without it every call is treated as the first evaluation.
    """
    state = state if state is not None else HysteresisState()
    pool = pool_size if pool_size is not None else len(loads)
    total = sum(r.window_work_units for r in loads)
    state.below = state.below + 1 if total < params.shrink_threshold else 0
    state.above = state.above + 1 if total > params.grow_threshold else 0
    if state.below >= params.hysteresis_evals:
        return max(1, current_active - 1)
    if state.above >= params.hysteresis_evals:
        return min(pool, current_active + 1)
    return current_active


def consolidate(
    traffic: TrafficView,
    projection: Projection,
    entity_load: Mapping[int, float],
    budget: int,
) -> list[MigrationDecision]:
    """Move residents of LPs outside the active set onto the active LPs."""
    active = set(projection.active)
    strays = sorted(
        (e for e, lp in traffic.homes.items() if lp not in active),
        key=lambda e: (traffic.total_sent(e), e),
    )
    out = []
    for e in strays[:budget]:
        src = traffic.homes[e]
        dst = min(projection.active, key=lambda lp: (projection.relative(lp), lp))
        projection.move(src, dst, entity_load.get(e, 0.0))
        traffic.move(e, dst)
        out.append(MigrationDecision(e, src, dst, 0.0, 0.0, 0, "adapt"))
    return out
