"""Moving one entity between logical processes.

The entity's state is always serialized, even between co-located LPs, so
in-process and cross-process migrations exercise the same code path and
report the same byte counts.
"""

from __future__ import annotations

import time
from typing import Mapping

from pads.errors import MigrationFault
from pads.kernel.types import MigrationRecord, SimEntity, behavior_class
from pads.kernel.world import LogicalProcess
from pads.transport.frames import decode_migration, encode_migration


def emigrate(lp: LogicalProcess, eid: int) -> bytes:
    """Detach ``eid`` from ``lp`` and pack its state plus its undelivered inbox."""
    t0 = time.perf_counter()
    try:
        entity = lp.remove(eid)
    except KeyError:
        raise MigrationFault(f"entity {eid} is not resident on LP {lp.lp_id}") from None
    try:
        state = entity.state.to_bytes()
    except Exception as exc:
        raise MigrationFault(f"entity {eid} failed to serialize: {exc!r}") from exc
    pending = lp.take_pending(eid)
    send_us = int((time.perf_counter() - t0) * 1e6)
    return encode_migration(eid, entity.behavior, entity.weight, entity.rng_seed, state, pending, send_us)


def immigrate(lp: LogicalProcess, payload: bytes) -> tuple[int, int, float]:
    """Rebuild an entity from ``payload`` on ``lp``; returns (entity, state bytes, transfer µs)."""
    t0 = time.perf_counter()
    msg = decode_migration(payload)
    try:
        state = behavior_class(msg["kind"]).from_bytes(msg["state"])
    except Exception as exc:
        raise MigrationFault(f"entity {msg['entity']} failed to deserialize: {exc!r}") from exc
    lp.add(SimEntity(msg["entity"], msg["kind"], state, msg["weight"], msg["rng_seed"]))
    lp.pending.extend(msg["pending"])
    recv_us = (time.perf_counter() - t0) * 1e6
    return msg["entity"], len(msg["state"]), msg["send_us"] + recv_us


def apply_migration(decision, lps: Mapping[int, LogicalProcess], step: int = 0) -> MigrationRecord:
    """Execute ``decision`` between two co-located LPs and update their placement view."""
    t0 = time.perf_counter()
    payload = emigrate(lps[decision.from_lp], decision.entity)
    eid, nbytes, _ = immigrate(lps[decision.to_lp], payload)
    lps[decision.to_lp].placement[eid] = decision.to_lp
    elapsed = (time.perf_counter() - t0) * 1e6
    return MigrationRecord(step, eid, decision.from_lp, decision.to_lp, decision.reason, nbytes, elapsed)
