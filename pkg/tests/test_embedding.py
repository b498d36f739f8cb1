"""Embedding state mutation, latency accounting, and the validator."""

from fractions import Fraction

import pytest

from sfcplace.catalog import Scenario, SfcInstance
from sfcplace.costs import SotaParams
from sfcplace.embedding import (Embedding, dump_embedding, load_embedding,
                                validate)
from sfcplace.errors import CapacityError
from tests.conftest import make_catalog, make_net, one_sfc_scenario


def embed_chain(scenario: Scenario, sfc: SfcInstance,
                nodes: list[int]) -> Embedding:
    """Map request i to nodes[i], routing every hop on the shortest path."""
    emb = Embedding()
    current = sfc.start
    for request, node_id in zip(sfc.requests, nodes):
        emb.apply_mapping(scenario, request, node_id,
                          scenario.network.shortest_path(current, node_id))
        current = node_id
    emb.set_final_path(scenario, sfc,
                       scenario.network.shortest_path(current, sfc.end))
    return emb


# -- mutation ------------------------------------------------------------------

def test_first_mapping_creates_instance_and_activates(line3):
    scenario = one_sfc_scenario(line3, make_catalog(0.25, ("F1", "F2")), 0, 2)
    sfc = scenario.sfcs[0]
    emb = Embedding()
    emb.apply_mapping(scenario, sfc.requests[0], 1, line3.shortest_path(0, 1))
    assert emb.allocations[1] == {"F1": pytest.approx(0.25)}
    assert emb.active == {1}
    assert emb.request_map[(0, 0)] == 1


def test_scale_up_crossing_integer_boundary(line3):
    from sfcplace import costs
    scenario = one_sfc_scenario(line3, make_catalog(0.9, ("F1", "F1")), 0, 2)
    sfc = scenario.sfcs[0]
    emb = Embedding()
    emb.apply_mapping(scenario, sfc.requests[0], 1, line3.shortest_path(0, 1))
    assert costs.process_count(emb.allocations[1]) == 1
    emb.apply_mapping(scenario, sfc.requests[1], 1, line3.self_loop_path(1))
    assert emb.allocations[1]["F1"] == pytest.approx(1.8)
    assert costs.process_count(emb.allocations[1]) == 2


def test_over_capacity_mapping_rolls_back(line3):
    scenario = one_sfc_scenario(line3, make_catalog(20.0, ("F1",)), 0, 2)
    emb = Embedding()
    with pytest.raises(CapacityError):
        emb.apply_mapping(scenario, scenario.sfcs[0].requests[0], 1,
                          line3.shortest_path(0, 1))
    assert emb.allocations == {} and emb.active == set()
    assert emb.request_map == {} and emb.link_paths == {}


def test_mapping_to_forwarding_node_rejected():
    net = make_net([(0, 0), (1, 16)], [(0, 1, 1.0)])
    scenario = one_sfc_scenario(net, make_catalog(0.1, ("F1",)), 0, 1)
    with pytest.raises(CapacityError, match="forwarding-only"):
        Embedding().apply_mapping(scenario, scenario.sfcs[0].requests[0], 0,
                                  net.self_loop_path(1))


def test_apply_then_release_restores_empty_state(line3):
    scenario = one_sfc_scenario(line3, make_catalog(0.3, ("F1", "F2")), 0, 2)
    emb = embed_chain(scenario, scenario.sfcs[0], [1, 1])
    emb.release_sfc(scenario, 0)
    assert emb.allocations == {}
    assert emb.request_map == {}
    assert emb.link_paths == {}
    assert emb.link_load == {}
    assert emb.active == set()


def test_release_unmapped_is_noop(line3):
    scenario = one_sfc_scenario(line3, make_catalog(0.3, ("F1",)), 0, 2)
    emb = Embedding()
    emb.release_sfc(scenario, 0)
    emb.release_sfc(scenario, 99)
    assert emb.allocations == {}


def test_shared_instance_survives_partial_release(line3):
    cat = make_catalog(0.4, ("F1",))
    tpl = cat.templates["Chain"]
    scenario = Scenario(line3, cat, (SfcInstance(0, tpl, 0, 2, 1),
                                     SfcInstance(1, tpl, 0, 2, 1)))
    emb = Embedding()
    for sfc in scenario.sfcs:
        current = sfc.start
        for request in sfc.requests:
            emb.apply_mapping(scenario, request, 1,
                              line3.shortest_path(current, 1))
            current = 1
        emb.set_final_path(scenario, sfc, line3.shortest_path(1, sfc.end))
    assert emb.allocations[1]["F1"] == pytest.approx(0.8)
    emb.release_sfc(scenario, 0)
    assert emb.allocations[1]["F1"] == pytest.approx(0.4)
    assert emb.active == {1}


# -- latency accounting --------------------------------------------------------

def test_colocated_zero_cost_latency_is_zero(line3):
    scenario = one_sfc_scenario(line3, make_catalog(0.1, ("F1", "F2")), 0, 0)
    emb = embed_chain(scenario, scenario.sfcs[0], [0, 0])
    assert emb.end_to_end_latency(scenario, 0) == 0.0


def test_path_plus_node_overhead_additivity(triangle):
    net = triangle.with_cost_params(omega=0.4, kappa=1.75)
    scenario = one_sfc_scenario(net, make_catalog(0.001, ("F1", "F1")), 0, 2)
    emb = embed_chain(scenario, scenario.sfcs[0], [2, 2])
    # 2-hop path of 6 ms, then two requests at 2.15 ms node latency each
    assert emb.sfc_overhead(scenario, 0) == pytest.approx(4.30, rel=1e-9)
    assert emb.end_to_end_latency(scenario, 0) == pytest.approx(10.3,
                                                                rel=1e-9)


def test_override_prices_tentative_allocation(triangle):
    net = triangle.with_cost_params(omega=0.4, kappa=1.75)
    scenario = one_sfc_scenario(net, make_catalog(0.001, ("F1", "F1")), 0, 2)
    emb = embed_chain(scenario, scenario.sfcs[0], [2, 2])
    grown = {"F1": 1.5}   # 2 cores -> 2 processes, up count 2
    assert emb.sfc_overhead(scenario, 0, override={2: grown}) == \
        pytest.approx(2 * (0.8 + 3.5), rel=1e-9)
    # the committed state is untouched
    assert emb.sfc_overhead(scenario, 0) == pytest.approx(4.30, rel=1e-9)


def test_sota_mode_latency():
    net = make_net([(0, 16)], [])
    scenario = one_sfc_scenario(net, make_catalog(1.6, ("F1",) * 5, 100.0),
                                0, 0)
    emb = embed_chain(scenario, scenario.sfcs[0], [0] * 5)
    p = Fraction(1, 2)
    per_visit = (p - (1 + 100 * (1 - p)) * p ** 101) / (
        10 * (1 - p) * (1 - p ** 100))
    assert emb.end_to_end_latency(scenario, 0, mode="sota",
                                  sota_params=SotaParams()) == \
        pytest.approx(5 * float(per_visit), rel=1e-9)


# -- validator -----------------------------------------------------------------

def test_validate_empty_embedding_of_empty_scenario(line3):
    scenario = Scenario(line3, make_catalog(), ())
    report = validate(Embedding(), scenario)
    assert report.ok
    assert str(report) == "ok"


def feasible_case(net):
    scenario = one_sfc_scenario(net, make_catalog(0.3, ("F1", "F2")), 0, 2)
    emb = embed_chain(scenario, scenario.sfcs[0], [1, 1])
    return scenario, emb


def test_validate_hand_built_feasible_embedding(line3):
    scenario, emb = feasible_case(line3)
    assert validate(emb, scenario).ok


def test_validate_latency_single_fault(line3):
    cat = make_catalog(0.3, ("F1", "F2"), max_latency=5.0)  # SP needs 10 ms
    scenario = one_sfc_scenario(line3, cat, 0, 2)
    emb = embed_chain(scenario, scenario.sfcs[0], [1, 1])
    report = validate(emb, scenario)
    assert report.families() == {"latency"}
    assert len(report.violations) == 1


def test_validate_missing_path_flags_routing(line3):
    scenario, emb = feasible_case(line3)
    del emb.link_paths[(0, 1)]
    assert "routing" in validate(emb, scenario).families()


def test_validate_perturbed_link_load(line3):
    scenario, emb = feasible_case(line3)
    key = next(iter(emb.link_load))
    emb.link_load[key] += 1.0
    assert validate(emb, scenario).families() == {"link_load"}


def test_validate_shrunken_instance(line3):
    scenario, emb = feasible_case(line3)
    emb.allocations[1]["F1"] *= 0.5
    assert "instance_capacity" in validate(emb, scenario).families()


def test_validate_unmapped_request(line3):
    scenario, emb = feasible_case(line3)
    del emb.request_map[(0, 1)]
    assert "unique_mapping" in validate(emb, scenario).families()


def test_validate_orphan_instance(line3):
    scenario, emb = feasible_case(line3)
    emb.allocations[1]["F3"] = 0.5
    assert "instance_presence" in validate(emb, scenario).families()


def test_validate_stale_active_flag(line3):
    scenario, emb = feasible_case(line3)
    emb.active.add(2)
    assert validate(emb, scenario).families() == {"active_flags"}


def test_validate_node_capacity():
    net = make_net([(0, 16), (1, 16)], [(0, 1, 1.0)])
    scenario, emb = feasible_case_small(net)
    emb.allocations[1]["F1"] = 20.0
    fams = validate(emb, scenario).families()
    assert "node_capacity" in fams


def feasible_case_small(net):
    scenario = one_sfc_scenario(net, make_catalog(0.3, ("F1", "F2")), 0, 1)
    emb = embed_chain(scenario, scenario.sfcs[0], [1, 1])
    return scenario, emb


def test_validate_bandwidth():
    net = make_net([(0, 16), (1, 16)], [(0, 1, 1.0)])
    # cap the real links at less than the chain's demand
    from sfcplace.topology import PhysicalLink, PhysicalNetwork
    links = [PhysicalLink(lk.id, lk.src, lk.dst, lk.latency,
                          lk.bandwidth if lk.is_self_loop else 0.05)
             for lk in net.links]
    capped = PhysicalNetwork(net.nodes, links)
    scenario = one_sfc_scenario(capped, make_catalog(0.3, ("F1",)), 0, 1)
    emb = embed_chain(scenario, scenario.sfcs[0], [1])
    assert "bandwidth" in validate(emb, scenario).families()


def test_validate_self_loop_misuse(line3):
    scenario, emb = feasible_case(line3)
    # replace the inter-request self-loop with a bogus two-node walk
    bad = line3.shortest_path(1, 2)
    good = emb.link_paths[(0, 1)]
    emb.link_paths[(0, 1)] = bad
    report = validate(emb, scenario)
    assert "routing" in report.families()
    emb.link_paths[(0, 1)] = good
    assert validate(emb, scenario).ok


# -- serialization -------------------------------------------------------------

def test_dump_load_round_trip(line3):
    scenario, emb = feasible_case(line3)
    text = dump_embedding(emb, scenario)
    loaded = load_embedding(text, scenario)
    assert loaded.request_map == emb.request_map
    assert loaded.active == emb.active
    assert loaded.allocations.keys() == emb.allocations.keys()
    for node_id in emb.allocations:
        assert loaded.allocations[node_id] == pytest.approx(
            emb.allocations[node_id])
    assert validate(loaded, scenario).ok
    # byte-stable serialization
    assert dump_embedding(loaded, scenario) == text


def test_loaded_corruption_is_caught_by_validate(line3):
    scenario, emb = feasible_case(line3)
    text = dump_embedding(emb, scenario)
    corrupted = text.replace("cores: 0.3", "cores: 0.1")
    loaded = load_embedding(corrupted, scenario)
    assert not validate(loaded, scenario).ok
