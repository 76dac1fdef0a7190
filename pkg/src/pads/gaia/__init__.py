from pads.gaia.controller import Evaluation, Gaia
from pads.gaia.heuristics import (
    HysteresisState,
    LoadReport,
    MigrationDecision,
    Projection,
    adapt_active_lp_count,
    evaluate_migrations,
    rebalance,
)
from pads.gaia.ledger import InteractionLedger, external_ratio, record_interaction
from pads.gaia.migration import apply_migration, emigrate, immigrate
from pads.gaia.params import GaiaParams

__all__ = [
    "Evaluation",
    "Gaia",
    "GaiaParams",
    "HysteresisState",
    "InteractionLedger",
    "LoadReport",
    "MigrationDecision",
    "Projection",
    "adapt_active_lp_count",
    "apply_migration",
    "emigrate",
    "evaluate_migrations",
    "external_ratio",
    "immigrate",
    "rebalance",
    "record_interaction",
]
