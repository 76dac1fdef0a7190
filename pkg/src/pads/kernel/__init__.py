from pads.kernel.engine import (
    METRICS_COLUMNS,
    Coordinator,
    GroupDriver,
    MetricsRow,
    RunOptions,
    RunResult,
    run_world,
)
from pads.kernel.rng import SplitMix64, entity_seed, mix64
from pads.kernel.types import (
    Behavior,
    CommitRecord,
    Interaction,
    MigrationRecord,
    SimEntity,
    StepContext,
    StepReport,
    behavior_class,
    register_behavior,
)
from pads.kernel.world import (
    EMPTY_DIGEST,
    LogicalProcess,
    World,
    deliver_inboxes,
    group_inbox,
    route,
    state_digest,
)

__all__ = [
    "EMPTY_DIGEST",
    "METRICS_COLUMNS",
    "Behavior",
    "CommitRecord",
    "Coordinator",
    "GroupDriver",
    "Interaction",
    "LogicalProcess",
    "MetricsRow",
    "MigrationRecord",
    "RunOptions",
    "RunResult",
    "SimEntity",
    "SplitMix64",
    "StepContext",
    "StepReport",
    "World",
    "behavior_class",
    "deliver_inboxes",
    "entity_seed",
    "group_inbox",
    "mix64",
    "register_behavior",
    "route",
    "run_world",
    "state_digest",
]
