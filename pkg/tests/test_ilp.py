"""Linear model construction, LP round-trips, and the exact solver."""

from pathlib import Path

import pytest

from sfcplace.catalog import Scenario, SfcInstance, instantiate, default_catalog
from sfcplace.embedding import validate
from sfcplace.errors import ConfigError, SizeLimitError
from sfcplace.heuristic import run_hca
from sfcplace.ilp import (BigM, ExactLimits, build_model, check_assignment,
                          default_big_m, embedding_to_assignment, export_lp,
                          parse_lp, solve_exact)
from tests.conftest import make_catalog, make_net, one_sfc_scenario

GOLDEN = Path(__file__).parent / "data" / "tiny_model.lp"


def tiny_scenario():
    net = make_net([(0, 16), (1, 16)], [(0, 1, 5.0)])
    return one_sfc_scenario(net, make_catalog(0.5, ("F1",)), 0, 1)


# -- model construction --------------------------------------------------------

def test_tiny_model_variable_inventory():
    scenario = tiny_scenario()
    model = build_model(scenario)
    model.check_closed()
    names = model.variable_names()
    # 3 chain positions (start, request, end) x 2 nodes
    assert sum(1 for n in names if n.startswith("map_")) == 6
    assert sum(1 for n in names if n.startswith("cores_")) == 2
    assert sum(1 for n in names if n.startswith("procs_")) == 2
    assert sum(1 for n in names if n.startswith("inst_")) == 2
    assert sum(1 for n in names if n.startswith("act_")) == 2
    # 2 virtual links x 2x2 endpoint pairs
    assert sum(1 for n in names if n.startswith("pair_")) == 8
    # 4 physical links (2 directed + 2 self-loops) per pair per vlink
    assert sum(1 for n in names if n.startswith("route_")) == 32
    assert sum(1 for n in names if n.startswith("nlat_")) == 2
    assert model.objective == {"act_v0": 1.0, "act_v1": 1.0}


def test_model_families_present():
    model = build_model(tiny_scenario())
    families = {c.family for c in model.constraints}
    assert families >= {"fixed_endpoint", "unique_mapping",
                        "instance_capacity", "instance_presence", "ceiling",
                        "node_capacity", "routing_pair", "routing_source",
                        "routing_dest", "routing_transit", "routing_self_loop",
                        "latency_costs", "latency", "active"}
    # per-family indices count up from zero
    seen = {}
    for con in model.constraints:
        fam, idx = con.name.rsplit("_", 1)
        assert int(idx) == seen.get(fam, 0)
        seen[fam] = int(idx) + 1


def test_zero_cost_model_is_well_formed(line3):
    scenario = one_sfc_scenario(line3, make_catalog(0.5, ("F1", "F2")), 0, 2)
    model = build_model(scenario)
    model.check_closed()
    caps = [c for c in model.constraints if c.family == "node_capacity"]
    # with zero cost parameters no overhead coefficients appear
    assert all(not any(n.startswith("procs_") for n in c.coeffs)
               for c in caps)


def test_strict_inequality_carries_eps():
    model = build_model(tiny_scenario())
    rows = [c for c in model.constraints
            if c.family in ("instance_presence", "ceiling")
            and c.rhs not in (0.0,)]
    assert rows and all(c.rhs == pytest.approx(1.0 - 1e-6) for c in rows)


def test_big_m_validation():
    with pytest.raises(ValueError):
        BigM(17.0, 7.0, eps=0.0)
    with pytest.raises(ValueError):
        BigM(17.0, 7.0, eps=1e-3)
    bm = default_big_m(tiny_scenario())
    assert bm.m_gamma > 16.0
    assert bm.m_f > 1.0


# -- LP text round-trips -------------------------------------------------------

def test_export_is_deterministic():
    scenario = tiny_scenario()
    assert export_lp(build_model(scenario)) == export_lp(build_model(scenario))


def test_round_trip_is_byte_identical():
    text = export_lp(build_model(tiny_scenario()))
    assert export_lp(parse_lp(text)) == text


def test_round_trip_medium_model(line3):
    cat = default_catalog()
    scenario = Scenario(line3, cat, (
        instantiate(cat, "VoIP", 0, 2, 50, sfc_id=0),))
    text = export_lp(build_model(scenario))
    assert export_lp(parse_lp(text)) == text


def test_golden_file_matches_regeneration():
    assert export_lp(build_model(tiny_scenario())) == GOLDEN.read_text()


def test_parse_rejects_trailing_content():
    text = export_lp(build_model(tiny_scenario())) + "leftover\n"
    with pytest.raises(ConfigError):
        parse_lp(text)


# -- assignment checking -------------------------------------------------------

def test_heuristic_embedding_satisfies_model(line3):
    cat = default_catalog()
    scenario = Scenario(line3, cat, (
        instantiate(cat, "VoIP", 0, 2, 100, sfc_id=0),))
    outcome = run_hca(scenario)
    assert outcome.success
    model = build_model(scenario)
    assignment = embedding_to_assignment(scenario, outcome.embedding)
    assert check_assignment(model, assignment) == []


def test_violations_are_reported_by_row_name(line3):
    cat = make_catalog(0.5, ("F1",))
    scenario = one_sfc_scenario(line3, cat, 0, 2)
    outcome = run_hca(scenario)
    model = build_model(scenario)
    assignment = embedding_to_assignment(scenario, outcome.embedding)
    host = outcome.embedding.request_map[(0, 0)]
    assignment[f"cores_F1_v{host}"] = 0.1   # starve the instance
    bad = check_assignment(model, assignment)
    assert any(name.startswith("instance_capacity") for name in bad)


# -- exact solver --------------------------------------------------------------

def test_exact_single_node_optimum():
    net = make_net([(0, 16)], [])
    scenario = one_sfc_scenario(net, make_catalog(0.5, ("F1",)), 0, 0)
    solution = solve_exact(scenario)
    assert solution.status == "optimal"
    assert solution.objective == 1
    assert validate(solution.embedding, scenario).ok


def test_exact_capacity_forces_two_nodes(line3):
    cat = make_catalog(10.0, ("F1",))
    tpl = cat.templates["Chain"]
    scenario = Scenario(line3, cat, (SfcInstance(0, tpl, 0, 2, 1),
                                     SfcInstance(1, tpl, 0, 2, 1)))
    solution = solve_exact(scenario)
    assert solution.status == "optimal"
    assert solution.objective == 2
    assert validate(solution.embedding, scenario).ok


def test_exact_latency_infeasible(line3):
    cat = make_catalog(0.5, ("F1",), max_latency=1.0)   # SP needs 10 ms
    scenario = one_sfc_scenario(line3, cat, 0, 2)
    assert solve_exact(scenario).status == "infeasible"


def test_exact_size_limits(line4):
    from sfcplace.topology import default_topology
    cat = default_catalog()
    big = Scenario(default_topology(), cat,
                   (instantiate(cat, "VoIP", 0, 9, 10, sfc_id=0),))
    with pytest.raises(SizeLimitError, match="NFV nodes"):
        solve_exact(big)
    two_chains = Scenario(line4, cat, (
        instantiate(cat, "VoIP", 0, 3, 10, sfc_id=0),
        instantiate(cat, "VoIP", 3, 0, 10, sfc_id=1)))
    with pytest.raises(SizeLimitError, match="requests"):
        solve_exact(two_chains)
    with pytest.raises(SizeLimitError, match="requests"):
        solve_exact(two_chains, ExactLimits(max_nfv_nodes=5, max_requests=8))


def test_exact_requires_infinite_bandwidth():
    from sfcplace.topology import load_topology
    net = load_topology({"bidirectional": True,
                         "nodes": [{"id": 0, "cores": 16},
                                   {"id": 1, "cores": 16}],
                         "links": [{"from": 0, "to": 1, "latency_ms": 1,
                                    "bandwidth_mbps": 100}]})
    scenario = one_sfc_scenario(net, make_catalog(0.5, ("F1",)), 0, 1)
    with pytest.raises(SizeLimitError, match="bandwidth"):
        solve_exact(scenario)
