"""Build a world from a config, run it in one or several processes, write the outputs."""

from __future__ import annotations

import logging
import multiprocessing
import os
import random
import socket
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from pads import busywork
from pads.errors import ConfigError, PadsError, RunFault, TransportFault
from pads.harness.config import Config, ProcessGroup, wireless_grid
from pads.kernel.engine import GroupDriver, RunOptions, RunResult, run_world
from pads.kernel.world import World
from pads.models import (
    Population,
    build_community,
    build_gossip,
    build_synthetic,
    build_wireless,
    generate_graph,
    read_edge_list,
)
from pads.transport.mesh import LpEndpoint, establish_topology, open_listener

log = logging.getLogger(__name__)


def build_population(cfg: Config) -> Population:
    m = cfg.model
    n = cfg.n_entities
    if m.kind == "gossip":
        if m.graph_file is not None:
            try:
                graph = read_edge_list(m.graph_file, m.graph.kind)
            except OSError as exc:
                raise ConfigError(f"cannot read graph file: {exc.strerror}", "$.model.graph_file") from None
            if graph.n != n:
                raise ConfigError(f"graph file has {graph.n} nodes, n_entities is {n}", "$.n_entities")
        else:
            graph = generate_graph(m.graph.kind, n, m.graph.params, cfg.seed)
        return build_gossip(graph, m.p, cfg.seed, m.sources, m.weight)
    if m.kind == "wireless":
        width, height = wireless_grid(cfg)
        return build_wireless(n, width, height, m.radius, cfg.seed, m.weight)
    if m.kind == "community":
        return build_community(m.communities, n // m.communities, m.q, cfg.seed, m.weight)
    return build_synthetic(n, cfg.seed, m.groups, m.q, m.rate, m.weight_low, m.weight_high, m.burn)


def initial_placement(kind: str, n: int, pool_size: int, seed: int, groups: Sequence[int] | None = None) -> list[int]:
    """Initial LP of every entity.

    ``random`` deals a seeded shuffle of the ids round-robin, so every LP
    starts with the same number of entities in an arbitrary mix.
    """
    if kind == "round-robin":
        return [e % pool_size for e in range(n)]
    if kind == "all-on-zero":
        return [0] * n
    if kind == "random":
        order = list(range(n))
        random.Random(seed).shuffle(order)
        place = [0] * n
        for k, e in enumerate(order):
            place[e] = k % pool_size
        return place
    if kind == "by-community":
        if groups is None:
            raise ConfigError("by-community placement needs community metadata", "$.initial_placement")
        return [g % pool_size for g in groups]
    raise ConfigError(f"unknown placement {kind!r}", "$.initial_placement")


def build_world(cfg: Config) -> World:
    pop = build_population(cfg)
    place = initial_placement(cfg.initial_placement, cfg.n_entities, cfg.pool_size, cfg.seed, pop.groups)
    world = World(cfg.pool_size, cfg.seed)
    for i, state in enumerate(pop.states):
        world.register_entity(state.kind, state, pop.weights[i], place[i])
    return world


def inject_background_load(lp: int, work_units: float, start: int, stop: int) -> Callable[[int, int], float]:
    """Busy-work schedule for the kernel: ``work_units`` per step on ``lp`` during [start, stop)."""

    def background(lp_id: int, step: int) -> float:
        return work_units if lp_id == lp and start <= step < stop else 0.0

    return background


def run_options(cfg: Config, digest_steps: Sequence[int] = ()) -> RunOptions:
    bg = cfg.background_load
    return RunOptions(
        max_steps=cfg.max_steps,
        gaia=cfg.gaia_params(),
        digest_steps=frozenset(digest_steps),
        background=inject_background_load(bg.lp, bg.work_units, bg.start, bg.stop) if bg else None,
    )


def _endpoints(pool_size: int, owner: dict[int, int], group: int, addrs: list[tuple[str, int]]) -> list[LpEndpoint]:
    out = []
    for lp in range(pool_size):
        g = owner[lp]
        out.append(LpEndpoint(lp) if g == group else LpEndpoint(lp, *addrs[g]))
    return out


def _worker(world: World, options: RunOptions, endpoints: list[LpEndpoint], listener: socket.socket) -> None:
    code = 0
    mesh = None
    try:
        mesh = establish_topology(endpoints, listener)
        GroupDriver(world, mesh, options).run()
    except PadsError as exc:
        log.error("worker: %s", exc)
        code = exc.exit_code
    except BaseException as exc:  # noqa: BLE001 - the exit code is all the parent sees
        log.error("worker crashed: %r", exc)
        code = RunFault.exit_code
    finally:
        if mesh is not None:
            mesh.close()
        listener.close()
    os._exit(code)


def run_simulation(world: World, options: RunOptions, processes: Sequence[ProcessGroup] | None = None) -> RunResult:
    """Run ``world`` to completion and return the coordinator's result.

    Without ``processes`` (or with a single group) every LP runs in this
    process over in-memory links. Otherwise each group gets its own forked
    process and cross-group links go over TCP; this process hosts the group
    that owns LP 0.
    """
    busywork.calibrate()
    if not processes or len(processes) == 1:
        result = run_world(world, options)
        assert result is not None
        return result
    owner = {lp: g for g, group in enumerate(processes) for lp in group.lps}
    listeners = [open_listener(group.host, group.port) for group in processes]
    addrs = [(group.host, sock.getsockname()[1]) for group, sock in zip(processes, listeners)]
    home = owner[0]
    ctx = multiprocessing.get_context("fork")
    children = []
    for g in range(len(processes)):
        if g == home:
            continue
        p = ctx.Process(target=_worker, args=(world, options, _endpoints(world.pool_size, owner, g, addrs), listeners[g]))
        p.start()
        children.append(p)
    for g, sock in enumerate(listeners):
        if g != home:
            sock.close()
    mesh = None
    try:
        mesh = establish_topology(_endpoints(world.pool_size, owner, home, addrs), listeners[home])
        result = GroupDriver(world, mesh, options).run()
    finally:
        if mesh is not None:
            mesh.close()
        listeners[home].close()
        for p in children:
            p.join(timeout=30)
            if p.is_alive():
                p.terminate()
                p.join()
    codes = [p.exitcode for p in children]
    if any(codes):
        bad = next(c for c in codes if c)
        if bad == TransportFault.exit_code:
            raise TransportFault(f"worker process exited with code {bad}")
        raise RunFault(f"worker process exited with code {bad}")
    assert result is not None
    return result


@dataclass
class Experiment:
    config: Config
    result: RunResult
    metrics_path: Path
    migrations_path: Path
    summary_path: Path
    summary: dict
    figures: list[Path]


def run_experiment(cfg: Config, out_dir: str | Path | None = None, digest_steps: Sequence[int] = ()) -> Experiment:
    """Run ``cfg`` and write the metrics CSV, migration log, summary and figures."""
    from pads.harness.metrics import summarize, write_metrics, write_migration_log, write_summary

    world = build_world(cfg)
    result = run_simulation(world, run_options(cfg, digest_steps), cfg.processes)
    out = cfg.output_dir(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics_path = out / cfg.output.metrics
    migrations_path = out / cfg.output.migrations
    summary_path = out / cfg.output.summary
    rows = write_metrics(result.metrics, metrics_path)
    write_migration_log(result.migrations, migrations_path)
    summary = summarize(rows, result, cfg)
    write_summary(summary, summary_path)
    figures: list[Path] = []
    if cfg.output.figures:
        from pads.harness.plotting import plot_run

        window = cfg.gaia.window
        figures = plot_run(rows, metrics_path, window, result.migrations)
    return Experiment(cfg, result, metrics_path, migrations_path, summary_path, summary, figures)
