"""Stateful adaptive layer consulted by the coordinator at every barrier."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from pads.gaia.heuristics import (
    HysteresisState,
    LoadReport,
    MigrationDecision,
    Projection,
    adapt_active_lp_count,
    consolidate,
    evaluate_migrations,
    rebalance,
    refine_exchanges,
)
from pads.gaia.ledger import InteractionLedger
from pads.gaia.params import GaiaParams

log = logging.getLogger(__name__)


@dataclass
class Evaluation:
    step: int
    target_active: int
    loads: list[LoadReport]
    decisions: list[MigrationDecision] = field(default_factory=list)


class Gaia:
    """Runs the heuristics every ``window`` steps.

    Within one evaluation the decisions are built on a single load projection:
    consolidation toward the active LPs first, then load balancing, then
    clustering with whatever budget is left, so load moves always win over
    clustering moves for the same entity.
    """

    def __init__(self, params: GaiaParams, pool_size: int, weights: Sequence[float]):
        if params.capacities is not None and len(params.capacities) != pool_size:
            raise ValueError("capacities must list one multiplier per LP")
        self.params = params
        self.pool_size = pool_size
        self.weights = list(weights)
        self.ledger = InteractionLedger(params.window)
        self.target_active = pool_size
        self.hysteresis = HysteresisState()
        self.evaluations: list[Evaluation] = []

    @property
    def needs_handler_times(self) -> bool:
        return self.params.balance_on_wall_time

    def is_evaluation_step(self, t: int) -> bool:
        return (t + 1) % self.params.window == 0

    def observe(
        self,
        t: int,
        traffic: Iterable[Sequence[int]],
        handler_us: Iterable[Sequence[float]],
        step_wall_us: dict[int, float],
    ) -> None:
        ledger = self.ledger
        ledger.begin_step(t)
        ledger.record_counts(traffic)
        for eid, us in handler_us:
            ledger.record_handler_time(eid, us)
        for lp, us in step_wall_us.items():
            ledger.record_step_wall(lp, us)

    def loads(self, placement: Sequence[int]) -> list[LoadReport]:
        counts = [0] * self.pool_size
        work = [0.0] * self.pool_size
        for eid, lp in enumerate(placement):
            counts[lp] += 1
            work[lp] += self.weights[eid]
        return [
            LoadReport(lp, counts[lp], self.ledger.window_wall_time(lp), work[lp])
            for lp in range(self.pool_size)
        ]

    def evaluate(self, t: int, placement: Sequence[int], sizes: dict[int, int]) -> list[MigrationDecision]:
        params = self.params
        loads = self.loads(placement)
        self.target_active = adapt_active_lp_count(
            loads, params, self.target_active, self.hysteresis, self.pool_size
        )
        traffic = self.ledger.view(dict(enumerate(placement)))
        if params.balance_on_wall_time:
            entity_load = {e: self.ledger.weight_observed(e) for e in range(len(placement))}
        else:
            entity_load = dict(enumerate(self.weights))
        budget = params.budget(len(placement))
        proj = Projection(loads, params, active=range(self.target_active))
        decisions = consolidate(traffic, proj, entity_load, budget)
        moved = {d.entity for d in decisions}
        decisions += rebalance(
            traffic, loads, params, entity_load,
            budget=budget - len(decisions), projection=proj, exclude=moved,
        )
        moved = {d.entity for d in decisions}
        decisions += evaluate_migrations(
            traffic, loads, params, sizes, entity_load,
            budget=budget - len(decisions), projection=proj, exclude=moved,
        )
        if params.refine_exchanges:
            moved = {d.entity for d in decisions}
            decisions += refine_exchanges(
                traffic, loads, params, sizes, entity_load,
                budget=budget - len(decisions), projection=proj, exclude=moved,
            )
        self.evaluations.append(Evaluation(t, self.target_active, loads, decisions))
        if decisions:
            log.debug("step %d: %d migrations, target_active=%d", t, len(decisions), self.target_active)
        return decisions
