from pads.models.common import Population
from pads.models.community import CommunityMember, build_community
from pads.models.gossip import GossipNode, build_gossip
from pads.models.graphs import Graph, generate_graph, read_edge_list, write_edge_list
from pads.models.synthetic import SyntheticEntity, build_synthetic
from pads.models.wireless import GridIndex, WirelessNode, build_wireless

__all__ = [
    "CommunityMember",
    "Graph",
    "GossipNode",
    "GridIndex",
    "Population",
    "SyntheticEntity",
    "WirelessNode",
    "build_community",
    "build_gossip",
    "build_synthetic",
    "build_wireless",
    "generate_graph",
    "read_edge_list",
    "write_edge_list",
]
