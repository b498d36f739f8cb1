"""Shared small topologies and catalogs used across the test modules."""

import pytest

from sfcplace.catalog import Catalog, Scenario, SfcTemplate, VnfType
from sfcplace.topology import PhysicalNetwork, load_topology


def make_net(node_entries, link_entries, bidirectional=True) -> PhysicalNetwork:
    """Build a network from (id, cores[, params]) node tuples and
    (src, dst, latency) link tuples."""
    nodes = []
    for entry in node_entries:
        node = {"id": entry[0], "cores": entry[1]}
        if len(entry) > 2:
            node.update(entry[2])
        nodes.append(node)
    links = [{"from": a, "to": b, "latency_ms": lat}
             for a, b, lat in link_entries]
    return load_topology({"bidirectional": bidirectional,
                          "nodes": nodes, "links": links})


@pytest.fixture
def triangle() -> PhysicalNetwork:
    """Three 16-core nodes; going around (latency 3 + 3) beats the
    direct latency-10 link between nodes 0 and 2."""
    return make_net([(0, 16), (1, 16), (2, 16)],
                    [(0, 1, 3.0), (1, 2, 3.0), (0, 2, 10.0)])


@pytest.fixture
def line3() -> PhysicalNetwork:
    return make_net([(0, 16), (1, 16), (2, 16)],
                    [(0, 1, 5.0), (1, 2, 5.0)])


@pytest.fixture
def line4() -> PhysicalNetwork:
    return make_net([(0, 16), (1, 16), (2, 16), (3, 16)],
                    [(0, 1, 5.0), (1, 2, 5.0), (2, 3, 5.0)])


def make_catalog(proc_per_user=0.001, chain=("F1", "F2"), max_latency=100.0,
                 bw=0.1, name="Chain") -> Catalog:
    vnfs = {f: VnfType(f, f, proc_per_user) for f in set(chain)}
    tpl = SfcTemplate(name, tuple(chain), max_latency, bw)
    return Catalog(vnfs, {tpl.name: tpl})


def one_sfc_scenario(net, catalog, start, end, users=1, sfc_id=0) -> Scenario:
    tpl = next(iter(catalog.templates.values()))
    from sfcplace.catalog import SfcInstance
    return Scenario(net, catalog,
                    (SfcInstance(sfc_id, tpl, start, end, users),))
