"""Barrier-synchronized execution of a world over a mesh of logical processes.

Each process runs a :class:`GroupDriver` for the LPs it hosts. Its LPs are
advanced in lockstep through the phases of a step: execute, flush batches,
collect batches, vote, release, migrate. The process hosting LP 0 also owns
the :class:`Coordinator`, which turns the votes into a commit: ledger
updates, gaia decisions, metrics rows, digests and the directory broadcast.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from itertools import chain
from typing import Callable, Iterable

from pads import busywork
from pads.errors import EntityFault, RoutingFault, RunFault
from pads.gaia.controller import Gaia
from pads.gaia import migration
from pads.gaia.params import GaiaParams
from pads.kernel.types import CommitRecord, MigrationRecord, behavior_class
from pads.kernel.world import LogicalProcess, World, state_digest, traffic_counts
from pads.transport.frames import FrameKind
from pads.transport.mesh import (
    LpEndpoint,
    Mesh,
    broadcast_release,
    collect_votes,
    recv_batch,
    recv_release,
    send_batch,
    send_vote,
)

log = logging.getLogger(__name__)

METRICS_COLUMNS = (
    "step",
    "lp",
    "entities",
    "msgs_local",
    "msgs_remote",
    "migrations_in",
    "migrations_out",
    "step_wall_us",
    "barrier_wait_us",
)


@dataclass(slots=True)
class MetricsRow:
    step: int
    lp: int
    entities: int
    msgs_local: int
    msgs_remote: int
    migrations_in: int
    migrations_out: int
    step_wall_us: float
    barrier_wait_us: float

    def as_tuple(self) -> tuple:
        return tuple(getattr(self, c) for c in METRICS_COLUMNS)


@dataclass
class RunOptions:
    max_steps: int
    gaia: GaiaParams | None = None
    digest_steps: frozenset[int] = frozenset()
    background: Callable[[int, int], float] | None = None


@dataclass
class RunResult:
    pool_size: int
    max_steps: int
    final_digest: int
    digests: dict[int, int]
    metrics: list[MetricsRow]
    migrations: list[MigrationRecord]
    commits: list[CommitRecord]
    initial_placement: list[int]
    final_placement: list[int]
    evaluations: list = field(default_factory=list)
    wall_time_s: float = 0.0

    def local_ratio(self) -> float:
        local = sum(r.msgs_local for r in self.metrics)
        total = local + sum(r.msgs_remote for r in self.metrics)
        return local / total if total else 1.0


class Coordinator:
    """Barrier-side logic run by the process hosting LP 0."""

    def __init__(self, world: World, options: RunOptions, placement: list[int]):
        self.options = options
        self.pool_size = world.pool_size
        self.placement = placement  # shared with the local driver; read-only here
        self.initial_placement = list(world.placement)
        self.policy = Gaia(options.gaia, world.pool_size, [e.weight for e in world.entities]) if options.gaia else None
        self.digests: dict[int, int] = {0: world.state_digest()}
        self.rows: list[MetricsRow] = []
        self.records: list[MigrationRecord] = []
        self.commits: list[CommitRecord] = []
        self._open_rows: list[MetricsRow] = []

    def _close_rows(self, votes: list[dict]) -> None:
        waits = {v["lp"]: v["wait_us"] for v in votes}
        for row in self._open_rows:
            row.barrier_wait_us = waits.get(row.lp, 0.0)
        self.rows.extend(self._open_rows)
        self._open_rows = []
        arrived = [MigrationRecord(*r) for r in chain.from_iterable(v["records"] for v in votes)]
        arrived.sort(key=lambda r: (r.step, r.entity))
        self.records.extend(arrived)

    def _collect_digest(self, step: int, votes: list[dict]) -> None:
        states = list(chain.from_iterable(v.get("states") or () for v in votes))
        if len(states) != len(self.placement):
            raise RunFault(f"digest at step {step} saw {len(states)} of {len(self.placement)} entities")
        self.digests[step] = state_digest(states)

    def commit(self, t: int, votes: list[dict]) -> dict:
        faults = [v["fault"] for v in votes if v.get("fault")]
        if faults:
            return {"abort": min(faults, key=lambda f: (f["entity"], f["lp"]))}
        votes = sorted(votes, key=lambda v: v["lp"])
        self._close_rows(votes)
        walls = {v["lp"]: v["report"][3] for v in votes}
        if self.policy is not None:
            self.policy.observe(
                t,
                chain.from_iterable(v.get("traffic") or () for v in votes),
                chain.from_iterable(v.get("handler_us") or () for v in votes),
                walls,
            )
        if t + 1 in self.options.digest_steps:
            self._collect_digest(t + 1, votes)
        decisions = []
        if self.policy is not None and self.policy.is_evaluation_step(t) and t + 1 < self.options.max_steps:
            sizes = dict(chain.from_iterable(v.get("sizes") or () for v in votes))
            decisions = self.policy.evaluate(t, self.placement, sizes)
        moves_in = [0] * self.pool_size
        moves_out = [0] * self.pool_size
        for d in decisions:
            moves_out[d.from_lp] += 1
            moves_in[d.to_lp] += 1
        for v in votes:
            local, remote, executed, wall = v["report"]
            lp = v["lp"]
            self._open_rows.append(
                MetricsRow(t, lp, executed, local, remote, moves_in[lp], moves_out[lp], wall, 0.0)
            )
        self.commits.append(CommitRecord(t, decisions, walls))
        directory = None
        if any(v.get("directory") is not None for v in votes):
            directory = sorted(chain.from_iterable(v.get("directory") or () for v in votes))
        return {
            "abort": None,
            "decisions": [[d.entity, d.from_lp, d.to_lp, d.reason] for d in decisions],
            "directory": directory,
        }

    def finish(self, t: int, votes: list[dict]) -> dict:
        faults = [v["fault"] for v in votes if v.get("fault")]
        if faults:
            return {"abort": min(faults, key=lambda f: (f["entity"], f["lp"]))}
        votes = sorted(votes, key=lambda v: v["lp"])
        self._close_rows(votes)
        self._collect_digest(t, votes)
        return {"abort": None, "done": True}

    def result(self, max_steps: int, wall_time_s: float) -> RunResult:
        return RunResult(
            pool_size=self.pool_size,
            max_steps=max_steps,
            final_digest=self.digests[max_steps],
            digests=dict(sorted(self.digests.items())),
            metrics=sorted(self.rows, key=lambda r: (r.step, r.lp)),
            migrations=self.records,
            commits=self.commits,
            initial_placement=self.initial_placement,
            final_placement=list(self.placement),
            evaluations=self.policy.evaluations if self.policy else [],
            wall_time_s=wall_time_s,
        )


def _fault_info(lp: int, exc: BaseException) -> dict:
    entity = getattr(exc, "entity", -1)
    step = getattr(exc, "step", -1)
    return {"lp": lp, "entity": entity, "step": step, "type": type(exc).__name__, "message": str(exc)}


def _raise_abort(info: dict) -> None:
    if info["type"] == "EntityFault":
        raise EntityFault(info["entity"], info["step"], info["message"])
    if info["type"] == "RoutingFault":
        raise RoutingFault(info["message"])
    raise RunFault(info["message"])


class GroupDriver:
    """Advances the LPs hosted by one process."""

    def __init__(self, world: World, mesh: Mesh, options: RunOptions):
        self.world = world
        self.mesh = mesh
        self.options = options
        self.pool_size = world.pool_size
        self.placement = list(world.placement)
        self.lps = {lp: LogicalProcess(lp, self.placement) for lp in mesh.local_lps}
        for entity in world.entities:
            host = self.lps.get(self.placement[entity.id])
            if host is not None:
                host.add(entity)
        self.coordinator = Coordinator(world, options, self.placement) if 0 in self.lps else None
        kinds = {e.behavior for e in world.entities}
        dir_kinds = sorted(k for k in kinds if behavior_class(k).uses_directory)
        self._dir_cls = behavior_class(dir_kinds[0]) if dir_kinds else None
        self.directory = None
        if self._dir_cls is not None:
            self.directory = self._dir_cls.index_directory({e.id: e.state.publish() for e in world.entities})
        world.started = True
        # Each process keeps only the entities it hosts.
        self.world = None
        self._wait_us = {lp: 0.0 for lp in self.lps}
        self._records: dict[int, list] = {lp: [] for lp in self.lps}

    def _vote(self, lp: LogicalProcess, t: int, report, by_lp, handler_us, fault) -> dict:
        opts = self.options
        vote = {
            "lp": lp.lp_id,
            "step": t,
            "report": [report.messages_sent_local, report.messages_sent_remote, report.entities_executed,
                       report.wall_time_us] if report else [0, 0, 0, 0.0],
            "wait_us": self._wait_us[lp.lp_id],
            "records": self._records[lp.lp_id],
            "fault": fault,
        }
        self._records[lp.lp_id] = []
        if fault:
            return vote
        if opts.gaia is not None:
            vote["traffic"] = traffic_counts(by_lp)
            if handler_us is not None:
                vote["handler_us"] = sorted(handler_us.items())
            if (t + 1) % opts.gaia.window == 0:
                vote["sizes"] = [[eid, len(e.state.to_bytes())] for eid, e in sorted(lp.entities.items())]
        if t + 1 in opts.digest_steps:
            vote["states"] = [[eid, e.state.to_bytes()] for eid, e in sorted(lp.entities.items())]
        if self._dir_cls is not None:
            vote["directory"] = [[eid, e.state.publish()] for eid, e in sorted(lp.entities.items())]
        return vote

    def _barrier(self, t: int, votes: dict[int, dict], final: bool = False) -> dict:
        mesh = self.mesh
        for lp_id, vote in votes.items():
            if lp_id != 0:
                send_vote(mesh, lp_id, t, vote)
        release = None
        if self.coordinator is not None:
            all_votes = collect_votes(mesh, t, votes[0])
            commit = self.coordinator.finish if final else self.coordinator.commit
            release = commit(t, all_votes)
            broadcast_release(mesh, t, release)
        for lp_id in self.lps:
            if lp_id != 0:
                release = recv_release(mesh, lp_id, t)
        return release

    def _migrate(self, t: int, decisions: list) -> None:
        mesh = self.mesh
        lps = self.lps
        for entity, src, dst, reason in decisions:
            if src in lps:
                payload = migration.emigrate(lps[src], entity)
                if dst in lps:
                    eid, nbytes, us = migration.immigrate(lps[dst], payload)
                    self._records[dst].append([t, eid, src, dst, reason, nbytes, us])
                else:
                    mesh.send(src, dst, FrameKind.MIGRATION_PAYLOAD, payload)
            elif dst in lps:
                payload = mesh.recv(src, dst, FrameKind.MIGRATION_PAYLOAD)
                eid, nbytes, us = migration.immigrate(lps[dst], payload)
                self._records[dst].append([t, eid, src, dst, reason, nbytes, us])
            self.placement[entity] = dst

    def run(self) -> RunResult | None:
        opts = self.options
        mesh = self.mesh
        lps = self.lps
        peers = range(self.pool_size)
        time_entities = opts.gaia is not None and opts.gaia.balance_on_wall_time
        burn = busywork.burn
        clock = time.perf_counter
        started = clock()
        for t in range(opts.max_steps):
            votes: dict[int, dict] = {}
            finished: dict[int, float] = {}
            for lp_id, lp in lps.items():
                fault = None
                report = by_lp = handler_us = None
                try:
                    lp.deliver(t)
                    bg = opts.background(lp_id, t) if opts.background else 0.0
                    report, by_lp, handler_us = lp.run_step(t, self.directory, bg, burn, time_entities)
                except (EntityFault, RoutingFault) as exc:
                    fault = _fault_info(lp_id, exc)
                    by_lp = {}
                for dst in peers:
                    if dst != lp_id:
                        send_batch(mesh, lp_id, dst, by_lp.get(dst, []), step=t)
                lp.pending.extend(by_lp.get(lp_id, ()))
                finished[lp_id] = clock()
                votes[lp_id] = (report, by_lp, handler_us, fault)
            for lp_id, lp in lps.items():
                for src in peers:
                    if src != lp_id:
                        lp.pending.extend(recv_batch(mesh, src, lp_id))
            votes = {lp_id: self._vote(lps[lp_id], t, *v) for lp_id, v in votes.items()}
            release = self._barrier(t, votes)
            now = clock()
            for lp_id in lps:
                self._wait_us[lp_id] = (now - finished[lp_id]) * 1e6
            if release["abort"]:
                _raise_abort(release["abort"])
            if release["directory"] is not None:
                self.directory = self._dir_cls.index_directory(dict(release["directory"]))
            if release["decisions"]:
                self._migrate(t, release["decisions"])
        final_votes = {
            lp_id: {
                "lp": lp_id,
                "step": opts.max_steps,
                "wait_us": self._wait_us[lp_id],
                "records": self._records[lp_id],
                "states": [[eid, e.state.to_bytes()] for eid, e in sorted(lp.entities.items())],
                "fault": None,
            }
            for lp_id, lp in lps.items()
        }
        release = self._barrier(opts.max_steps, final_votes, final=True)
        if release["abort"]:
            _raise_abort(release["abort"])
        if self.coordinator is None:
            return None
        return self.coordinator.result(opts.max_steps, clock() - started)


def in_process_mesh(pool_size: int) -> Mesh:
    return Mesh([LpEndpoint(lp) for lp in range(pool_size)])


def run_world(world: World, options: RunOptions, mesh: Mesh | None = None) -> RunResult | None:
    """Run ``world`` on ``mesh`` (all LPs in this process by default)."""
    mesh = mesh if mesh is not None else in_process_mesh(world.pool_size)
    return GroupDriver(world, mesh, options).run()
