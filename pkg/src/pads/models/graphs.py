"""Unstructured topologies: Erdős–Rényi, Watts–Strogatz and Barabási–Albert."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import networkx as nx

from pads.errors import ConfigError

KINDS = ("random", "small-world", "scale-free")


@dataclass
class Graph:
    n: int
    adjacency: list[list[int]]
    kind: str

    @property
    def edge_count(self) -> int:
        return sum(len(a) for a in self.adjacency) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, nbrs in enumerate(self.adjacency) for v in nbrs if u < v]

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]


def _from_networkx(g: nx.Graph, kind: str) -> Graph:
    n = g.number_of_nodes()
    adjacency = [sorted(v for v in g.adj[u] if v != u) for u in range(n)]
    return Graph(n, adjacency, kind)


def generate_graph(kind: str, n: int, params: dict, seed: int) -> Graph:
    """Deterministic in (kind, n, params, seed).

    ``random`` takes ``pr`` (edge probability), ``small-world`` takes ``k``
    (even ring degree) and ``beta`` (rewiring probability), ``scale-free``
    takes ``m`` (edges per new node, grown from an m-clique).
    """
    if n < 2:
        raise ConfigError(f"graph needs n >= 2, got {n}", "$.n_entities")
    seed = seed % (1 << 32)
    if kind == "random":
        pr = float(params.get("pr", 0.01))
        if not 0.0 <= pr <= 1.0:
            raise ConfigError(f"pr must be in [0, 1], got {pr}", "$.model.graph.params.pr")
        g = nx.fast_gnp_random_graph(n, pr, seed=seed)
    elif kind == "small-world":
        k = int(params.get("k", 4))
        beta = float(params.get("beta", 0.1))
        if k % 2 or k < 2 or k >= n:
            raise ConfigError(f"k must be even and in [2, n), got {k}", "$.model.graph.params.k")
        if not 0.0 <= beta <= 1.0:
            raise ConfigError(f"beta must be in [0, 1], got {beta}", "$.model.graph.params.beta")
        g = nx.watts_strogatz_graph(n, k, beta, seed=seed)
    elif kind == "scale-free":
        m = int(params.get("m", 2))
        if not 1 <= m < n:
            raise ConfigError(f"m must satisfy 1 <= m < n, got {m}", "$.model.graph.params.m")
        # A 1-clique has no degree mass to attach to; K2 gives the same edge count.
        seed_graph = nx.complete_graph(max(m, 2))
        g = nx.barabasi_albert_graph(n, m, seed=seed, initial_graph=seed_graph)
    else:
        raise ConfigError(f"unknown graph kind {kind!r}; expected one of {KINDS}", "$.model.graph.kind")
    return _from_networkx(g, kind)


def write_edge_list(graph: Graph, path: str | Path) -> None:
    edges = graph.edges()
    lines = [f"{graph.n} {len(edges)}"] + [f"{u} {v}" for u, v in edges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_edge_list(path: str | Path, kind: str = "random") -> Graph:
    lines = Path(path).read_text(encoding="utf-8").split("\n")
    n, m = (int(x) for x in lines[0].split())
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for line in lines[1 : m + 1]:
        u, v = (int(x) for x in line.split())
        if not u < v:
            raise ValueError(f"edge list requires u < v, got {u} {v}")
        adjacency[u].append(v)
        adjacency[v].append(u)
    for nbrs in adjacency:
        nbrs.sort()
    return Graph(n, adjacency, kind)


def parse_graph_params(text: str) -> dict:
    """Parse ``"k=4,beta=0.1"`` style parameter strings."""
    out = {}
    for item in filter(None, (p.strip() for p in text.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {item!r}", "$.params")
        try:
            out[key.strip()] = float(value) if any(c in value for c in ".eE") else int(value)
        except ValueError:
            raise ConfigError(f"{key.strip()} is not a number: {value!r}", "$.params") from None
    return out
