"""Structural validation and deterministic path queries."""

import math

import pytest

from sfcplace.errors import ConfigError, PathNotFoundError, TopologyError
from sfcplace.topology import (PhysicalLink, PhysicalNetwork, PhysicalNode,
                               default_topology, load_topology)
from tests.conftest import make_net


# -- construction and validation -----------------------------------------------

def test_single_node_degenerate_network():
    net = make_net([(0, 16)], [])
    assert len(net.nodes) == 1
    assert len(net.self_loop) == 1
    assert net.adj[0] == []


def test_one_directed_link_is_weakly_connected():
    with pytest.warns(UserWarning, match="no reverse direction"):
        net = make_net([(0, 16), (1, 16)], [(0, 1, 2.0)], bidirectional=False)
    assert net.sp_latency(0, 1) == 2.0
    with pytest.raises(PathNotFoundError):
        net.shortest_path(1, 0)


def test_disconnected_topology_rejected():
    with pytest.raises(TopologyError, match="connected"):
        make_net([(0, 16), (1, 16), (2, 16)], [(0, 1, 1.0)])


def test_self_loops_only_on_nfv_nodes():
    nodes = [PhysicalNode(0, 0.0), PhysicalNode(1, 16.0)]
    links = [PhysicalLink(0, 0, 1, 1.0), PhysicalLink(1, 1, 0, 1.0),
             PhysicalLink(2, 0, 0, 0.0)]
    with pytest.raises(TopologyError, match="forwarding-only"):
        PhysicalNetwork(nodes, links)


def test_self_loop_must_be_free_and_unbounded():
    nodes = [PhysicalNode(0, 16.0)]
    with pytest.raises(TopologyError, match="self-loop"):
        PhysicalNetwork(nodes, [PhysicalLink(0, 0, 0, 1.0)])
    with pytest.raises(TopologyError, match="self-loop"):
        PhysicalNetwork(nodes, [PhysicalLink(0, 0, 0, 0.0, bandwidth=100.0)])


def test_missing_self_loop_rejected():
    with pytest.raises(TopologyError, match="missing a self-loop"):
        PhysicalNetwork([PhysicalNode(0, 16.0)], [])


def test_negative_node_params_rejected():
    with pytest.raises(TopologyError):
        PhysicalNode(0, -1.0)
    with pytest.raises(TopologyError):
        PhysicalNode(0, 16.0, csw_latency=-0.1)


# -- shortest paths ------------------------------------------------------------

def test_self_loop_path_is_zero_latency(triangle):
    path = triangle.shortest_path(1, 1)
    assert path.total_latency == 0.0
    assert path.nodes == (1, 1)
    assert triangle.link(path.links[0]).is_self_loop


def test_triangle_shortest_path_goes_around(triangle):
    path = triangle.shortest_path(0, 2)
    assert path.nodes == (0, 1, 2)
    assert path.total_latency == 6.0


def test_line_only_path(line3):
    assert line3.sp_latency(0, 2) == 10.0


def test_shortest_path_lexicographic_tie_break():
    # two equal-latency 2-hop routes 0->3; the smaller node sequence wins
    net = make_net([(0, 16), (1, 16), (2, 16), (3, 16)],
                   [(0, 1, 1.0), (1, 3, 1.0), (0, 2, 1.0), (2, 3, 1.0)])
    assert net.shortest_path(0, 3).nodes == (0, 1, 3)


# -- k shortest paths ----------------------------------------------------------

def test_k1_equals_shortest_path(triangle):
    assert triangle.k_shortest_paths(0, 2, 1) == [triangle.shortest_path(0, 2)]


def test_triangle_k2(triangle):
    paths = triangle.k_shortest_paths(0, 2, 2)
    assert [p.total_latency for p in paths] == [6.0, 10.0]
    assert paths[1].nodes == (0, 2)


def test_line_k3_exhausts_at_one(line3):
    assert len(line3.k_shortest_paths(0, 2, 3)) == 1


def test_ksp_paths_are_loopless_and_sorted():
    net = default_topology()
    paths = net.k_shortest_paths(0, 9, 8)
    assert len(paths) == 8
    latencies = [p.total_latency for p in paths]
    assert latencies == sorted(latencies)
    for p in paths:
        assert len(set(p.nodes)) == len(p.nodes)


def test_ksp_invalid_k(triangle):
    with pytest.raises(ValueError):
        triangle.k_shortest_paths(0, 2, 0)


# -- first path through an NFV node --------------------------------------------

def test_first_nfv_path_endpoint_qualifies(triangle):
    assert triangle.first_nfv_path(0, 2) == triangle.shortest_path(0, 2)


def test_first_nfv_path_detours_to_hosting_node():
    # only node 1 can host; the direct 0-2 link is cheaper but useless
    net = make_net([(0, 0), (1, 16), (2, 0)],
                   [(0, 1, 3.0), (1, 2, 3.0), (0, 2, 1.0)])
    path = net.first_nfv_path(0, 2)
    assert path.nodes == (0, 1, 2)


def test_first_nfv_path_without_nfv_nodes():
    net = make_net([(0, 0), (1, 0)], [(0, 1, 1.0)])
    with pytest.raises(PathNotFoundError):
        net.first_nfv_path(0, 1)


# -- config ingestion ----------------------------------------------------------

def test_load_topology_explicit_self_loop_rejected():
    with pytest.raises(ConfigError, match="implicit"):
        load_topology({"nodes": [{"id": 0, "cores": 16}],
                       "links": [{"from": 0, "to": 0, "latency_ms": 0}]})


def test_load_topology_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown keys"):
        load_topology({"nodes": [{"id": 0, "cores": 16, "speed": 3}]})


def test_load_topology_bandwidth_parsing():
    net = make_net([(0, 16), (1, 16)], [(0, 1, 1.0)])
    assert all(lk.bandwidth == math.inf for lk in net.links)
    net = load_topology({"bidirectional": True,
                         "nodes": [{"id": 0, "cores": 16},
                                   {"id": 1, "cores": 16}],
                         "links": [{"from": 0, "to": 1, "latency_ms": 1,
                                    "bandwidth_mbps": 100}]})
    assert {lk.bandwidth for lk in net.links if not lk.is_self_loop} == {100.0}


def test_with_cost_params_couples_processing_to_latency(line3):
    net = line3.with_cost_params(omega=0.4, kappa=1.75, h=0.01)
    for n in net.nodes:
        assert n.csw_latency == 0.4
        assert n.csw_processing == pytest.approx(0.004)
        assert n.up_latency == 1.75
        assert n.up_processing == pytest.approx(0.0175)


def test_with_cost_params_inverse_orientation(line3):
    net = line3.with_cost_params(omega=0.4, kappa=0.0, h=0.01,
                                 orientation="lat_from_proc")
    assert net.nodes[0].csw_processing == pytest.approx(40.0)
    with pytest.raises(ValueError):
        line3.with_cost_params(omega=0.4, kappa=0.0, orientation="sideways")


# -- shipped fixture -----------------------------------------------------------

def test_default_topology_shape():
    net = default_topology()
    assert len(net.nodes) == 10
    assert all(n.cores == 16.0 for n in net.nodes)
    real = [lk for lk in net.links if not lk.is_self_loop]
    assert len(real) == 30          # 15 bidirectional pairs
    assert len(net.self_loop) == 10
    assert all(3.0 <= lk.latency <= 13.5 for lk in real)
    # symmetric by construction
    pairs = {(lk.src, lk.dst) for lk in real}
    assert all((b, a) in pairs for a, b in pairs)


def test_default_topology_base_is_cached_and_copies_on_params():
    assert default_topology() is default_topology()
    net = default_topology(omega=0.4, kappa=1.75)
    assert net is not default_topology()
    assert net.nodes[0].csw_latency == 0.4
    assert default_topology().nodes[0].csw_latency == 0.0
