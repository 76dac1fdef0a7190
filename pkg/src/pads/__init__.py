"""Adaptive parallel and distributed simulation of migratable entities."""

from pads.errors import (
    ConfigError,
    EntityFault,
    LifecycleError,
    MigrationFault,
    PadsError,
    ProtocolError,
    RoutingFault,
    RunFault,
    StartupError,
    TransportFault,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EntityFault",
    "LifecycleError",
    "MigrationFault",
    "PadsError",
    "ProtocolError",
    "RoutingFault",
    "RunFault",
    "StartupError",
    "TransportFault",
]
