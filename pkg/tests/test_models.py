import statistics

import pytest

from oracles import bfs_eccentricity, diameter, expected_beacons, gossip_reference
from pads.errors import ConfigError
from pads.kernel.types import StepContext
from pads.models import build_community, build_gossip, generate_graph, read_edge_list, write_edge_list
from pads.models.community import pick_peer
from pads.models.gossip import GossipNode
from pads.kernel.rng import SplitMix64
from pads.models.wireless import WirelessNode


def _step(state, inbox, step=1, directory=None, entity=0):
    out = []
    ctx = StepContext(step, out, directory)
    ctx.begin(entity)
    state.step(inbox, ctx)
    return out


# graphs

def test_random_graph_with_pr_one_is_complete():
    g = generate_graph("random", 4, {"pr": 1.0}, 7)
    assert g.edge_count == 6
    assert g.edges() == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]


def test_small_world_without_rewiring_is_a_ring():
    g = generate_graph("small-world", 6, {"k": 2, "beta": 0.0}, 1)
    assert g.edges() == [(0, 1), (0, 5), (1, 2), (2, 3), (3, 4), (4, 5)]


def test_scale_free_edge_count():
    # K_m seed clique, then m edges per added node
    for m in (2, 3):
        g = generate_graph("scale-free", 200, {"m": m}, 3)
        assert g.edge_count == m * (m - 1) // 2 + m * (200 - m)


@pytest.mark.parametrize("seed", range(1, 6))
def test_scale_free_tail_is_heavier_than_random(seed):
    ba = generate_graph("scale-free", 1000, {"m": 2}, seed)
    er = generate_graph("random", 1000, {"pr": ba.edge_count / (1000 * 999 / 2)}, seed)
    assert max(ba.degrees()) >= 3 * max(er.degrees())


def test_generation_is_deterministic():
    a = generate_graph("small-world", 100, {"k": 4, "beta": 0.3}, 11)
    b = generate_graph("small-world", 100, {"k": 4, "beta": 0.3}, 11)
    assert a.adjacency == b.adjacency


def test_edge_list_round_trip(tmp_path):
    g = generate_graph("random", 50, {"pr": 0.1}, 2)
    path = tmp_path / "g.txt"
    write_edge_list(g, path)
    lines = path.read_text().splitlines()
    assert lines[0] == f"50 {g.edge_count}"
    assert all(int(u) < int(v) for u, v in (ln.split() for ln in lines[1:]))
    assert read_edge_list(path).adjacency == g.adjacency


@pytest.mark.parametrize(
    "kind,params,path",
    [
        ("random", {"pr": 1.5}, "$.model.graph.params.pr"),
        ("small-world", {"k": 3}, "$.model.graph.params.k"),
        ("scale-free", {"m": 0}, "$.model.graph.params.m"),
        ("lattice", {}, "$.model.graph.kind"),
    ],
)
def test_bad_graph_params(kind, params, path):
    with pytest.raises(ConfigError) as exc:
        generate_graph(kind, 10, params, 1)
    assert exc.value.path == path


# gossip

def test_gossip_p_zero_informs_but_stays_silent():
    node = GossipNode([1, 2, 3], 0.0, 5)
    out = _step(node, [object()])
    assert node.informed and out == []


def test_gossip_p_one_forwards_to_every_neighbor_once():
    node = GossipNode([1, 2, 3, 4, 5], 1.0, 5)
    assert len(_step(node, [object()])) == 5
    assert _step(node, [object()], step=2) == []


def test_gossip_state_round_trip():
    node = GossipNode([3, 9], 0.6, 123, informed=True, forwarded=False, informed_at=4)
    raw = node.to_bytes()
    assert GossipNode.from_bytes(raw).to_bytes() == raw


@pytest.mark.parametrize("seed", range(1, 11))
def test_gossip_matches_sequential_reference(run, seed):
    graph = generate_graph("random", 1000, {"pr": 0.005}, seed)
    doc = {
        "model": {"kind": "gossip", "graph": {"kind": "random", "params": {"pr": 0.005}}, "p": 0.6},
        "n_entities": 1000, "pool_size": 4, "seed": seed, "max_steps": 30,
    }
    from conftest import parse_config
    from pads.harness.runner import build_world, run_options, run_simulation

    cfg = parse_config(doc)
    world = build_world(cfg)
    run_simulation(world, run_options(cfg))
    got = [e.state.informed_at if e.state.informed else -1 for e in world.entities]
    assert got == gossip_reference(graph.adjacency, 0.6, seed, [0], 30)


def test_gossip_p_one_reaches_everyone_by_the_diameter(run):
    graph = generate_graph("small-world", 60, {"k": 4, "beta": 0.2}, 3)
    ecc, reached = bfs_eccentricity(graph.adjacency, 0)
    assert reached == 60
    d = diameter(graph.adjacency)
    pop = build_gossip(graph, 1.0, 3)
    from pads.kernel import World, RunOptions, run_world

    world = World(2, 3)
    for i, st in enumerate(pop.states):
        world.register_entity("gossip", st, 1.0, i % 2)
    run_world(world, RunOptions(d + 1))
    assert all(e.state.informed for e in world.entities)
    assert max(e.state.informed_at for e in world.entities) == ecc


# wireless

def test_wireless_radius_zero_is_silent():
    node = WirelessNode(1, 1, 4, 4, 0, 9)
    assert _step(node, [], directory=WirelessNode.index_directory({0: (1, 1), 1: (1, 1)})) == []


def test_wireless_two_nodes_in_one_cell_beacon_each_other():
    directory = WirelessNode.index_directory({0: (2, 2), 1: (2, 2)})
    a, b = WirelessNode(2, 2, 5, 5, 1, 1), WirelessNode(2, 2, 5, 5, 1, 2)
    assert [m.dst for m in _step(a, [], directory=directory, entity=0)] == [1]
    assert [m.dst for m in _step(b, [], directory=directory, entity=1)] == [0]


def test_wireless_beacon_rate_matches_occupancy_expectation(run):
    expected = expected_beacons(100, 10, 10, 1)
    assert expected == pytest.approx(776.16)
    counts = []
    for seed in range(1, 31):
        r = run({"model": {"kind": "wireless", "width": 10, "height": 10, "radius": 1},
                 "n_entities": 100, "seed": seed, "max_steps": 1})
        counts.append(sum(m.msgs_local + m.msgs_remote for m in r.metrics))
    assert statistics.mean(counts) == pytest.approx(expected, rel=0.03)


# community

def test_pick_peer_stays_inside_with_q_one():
    rng = SplitMix64(3)
    for _ in range(500):
        peer = pick_peer(rng, 12, 1, 10, 40, 1.0)
        assert 10 <= peer < 20 and peer != 12


def test_community_q_one_is_all_intra(run):
    pop = build_community(4, 10, 1.0, 1)
    r = run({"model": {"kind": "community", "communities": 4, "q": 1.0}, "n_entities": 40,
             "pool_size": 4, "seed": 1, "max_steps": 20, "initial_placement": "by-community"})
    assert pop.groups == [i // 10 for i in range(40)]
    assert sum(m.msgs_remote for m in r.metrics) == 0


def test_community_one_to_one_mapping_gives_ratio_q(run):
    r = run({"model": {"kind": "community", "communities": 4, "q": 0.9}, "n_entities": 400,
             "pool_size": 4, "seed": 1, "max_steps": 50, "initial_placement": "by-community"})
    assert r.local_ratio() == pytest.approx(0.9, abs=0.01)


def test_community_random_placement_baseline(run):
    r = run({"model": {"kind": "community", "communities": 4, "q": 0.9}, "n_entities": 400,
             "pool_size": 4, "seed": 1, "max_steps": 16, "initial_placement": "random"})
    assert r.local_ratio() == pytest.approx(0.25, abs=0.03)
