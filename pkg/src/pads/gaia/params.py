from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from pads.errors import ConfigError


@dataclass
class GaiaParams:
    """Tuning knobs of the adaptive layer.

    ``max_migrations`` and ``cost_horizon`` default to values derived from
    the entity count and the window (see :meth:`budget` and :meth:`horizon`).
    Loads are compared in declared work units unless
    ``balance_on_wall_time`` is set, in which case measured wall time is used.
    """

    window: int = 16
    migration_threshold: float = 0.7
    load_slack: float = 0.25
    max_migrations: int | None = None
    migration_fraction: float = 0.25
    cost_horizon: int | None = None
    shrink_threshold: float = 10.0
    grow_threshold: float = 1000.0
    hysteresis_evals: int = 3
    bytes_per_message_equivalent: float = 64.0
    balance_on_wall_time: bool = False
    make_room: bool = True
    refine_exchanges: bool = True
    capacities: list[float] | None = field(default=None)

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.window < 1:
            raise ConfigError("window must be >= 1", "$.gaia.window")
        if not 0 < self.migration_threshold <= 1:
            raise ConfigError("migration_threshold must be in (0, 1]", "$.gaia.migration_threshold")
        if self.load_slack < 0:
            raise ConfigError("load_slack must be >= 0", "$.gaia.load_slack")
        if self.max_migrations is not None and self.max_migrations < 0:
            raise ConfigError("max_migrations must be >= 0", "$.gaia.max_migrations")
        if not 0 <= self.migration_fraction <= 1:
            raise ConfigError("migration_fraction must be in [0, 1]", "$.gaia.migration_fraction")
        if self.cost_horizon is not None and self.cost_horizon < 1:
            raise ConfigError("cost_horizon must be >= 1", "$.gaia.cost_horizon")
        if self.shrink_threshold > self.grow_threshold:
            raise ConfigError("shrink_threshold must not exceed grow_threshold", "$.gaia.shrink_threshold")
        if self.hysteresis_evals < 1:
            raise ConfigError("hysteresis_evals must be >= 1", "$.gaia.hysteresis_evals")
        if self.bytes_per_message_equivalent <= 0:
            raise ConfigError("bytes_per_message_equivalent must be > 0", "$.gaia.bytes_per_message_equivalent")
        if self.capacities is not None and any(c <= 0 for c in self.capacities):
            raise ConfigError("capacities must be positive", "$.gaia.capacities")

    def budget(self, n_entities: int) -> int:
        if self.max_migrations is not None:
            return self.max_migrations
        return math.ceil(self.migration_fraction * n_entities)

    def horizon(self) -> int:
        return self.cost_horizon if self.cost_horizon is not None else 4 * self.window

    def capacity(self, lp: int) -> float:
        if self.capacities is None:
            return 1.0
        return self.capacities[lp]

    def to_dict(self) -> dict:
        return asdict(self)
