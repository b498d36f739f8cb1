"""Mixed-integer linear model of the consolidation problem.

``build_model`` emits the full formulation: request placement, explicit
per-virtual-link routing variables, processing-overhead capacity, and
latency rows, with the ceiling function, binary products, and the one
strict inequality linearized through auxiliary variables and a small
epsilon.  ``export_lp``/``parse_lp`` round-trip the model through a
deterministic LP-format text file for external solvers.  ``solve_exact``
is an exhaustive-enumeration solver for tiny instances, used as an
optimality oracle for the heuristic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from sfcplace import costs
from sfcplace.catalog import Scenario
from sfcplace.embedding import Embedding
from sfcplace.errors import ConfigError, SizeLimitError
from sfcplace.topology import Path

# -- model containers ----------------------------------------------------------


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str              # binary | integer | continuous
    lb: float = 0.0
    ub: float = 1.0


@dataclass(frozen=True)
class Constraint:
    name: str
    coeffs: dict[str, float]   # insertion order is export order
    relation: str              # "<=", "=", ">="
    rhs: float
    family: str


@dataclass
class LinearModel:
    variables: list[Variable] = field(default_factory=list)
    objective: dict[str, float] = field(default_factory=dict)
    constraints: list[Constraint] = field(default_factory=list)

    def variable_names(self) -> set[str]:
        return {v.name for v in self.variables}

    def check_closed(self) -> None:
        names = self.variable_names()
        for con in self.constraints:
            missing = set(con.coeffs) - names
            if missing:
                raise ValueError(
                    f"constraint {con.name} references undeclared {missing}")


@dataclass(frozen=True)
class BigM:
    """Linearization constants; defaults derived from the scenario."""

    m_gamma: float
    m_f: float
    eps: float = 1e-6

    def __post_init__(self):
        if not 0 < self.eps <= 1e-6:
            raise ValueError("eps must be in (0, 1e-6]")


def default_big_m(scenario: Scenario) -> BigM:
    gamma_max = max((n.cores for n in scenario.network.nodes), default=0.0)
    return BigM(m_gamma=gamma_max + 1.0,
                m_f=len(scenario.catalog.vnfs) + 1.0)


# -- model builder -------------------------------------------------------------

def _positions(sfc) -> list[str]:
    """Chain position labels: start point, requests, end point."""
    return ["s"] + [str(r.position) for r in sfc.requests] + ["t"]


def build_model(scenario: Scenario, big_m: BigM | None = None) -> LinearModel:
    """Full placement model minimizing the number of active nodes.

    Variables: map (request/endpoint -> node), cores (instance size),
    inst (instance presence), procs (integer core count of an instance,
    the linearized ceiling), act (node active), pair (both endpoints of a
    virtual link mapped as (x, y)), route (physical link on the path of a
    virtual link between x and y), nlat (node latency charged to one
    mapped request).
    """
    bm = big_m or default_big_m(scenario)
    net = scenario.network
    cat = scenario.catalog
    model = LinearModel()
    nodes = [n.id for n in net.nodes]
    vnf_ids = sorted(cat.vnfs)

    def var(name, kind, lb=0.0, ub=1.0):
        model.variables.append(Variable(name, kind, lb, ub))
        return name

    family_counts: dict[str, int] = {}

    def con(family, coeffs, relation, rhs):
        idx = family_counts.get(family, 0)
        family_counts[family] = idx + 1
        model.constraints.append(
            Constraint(f"{family}_{idx}", coeffs, relation, rhs, family))

    # mapping variables, including the fixed start/end points
    m_name = {}
    for sfc in scenario.sfcs:
        for u in _positions(sfc):
            for v in nodes:
                m_name[(sfc.id, u, v)] = var(
                    f"map_c{sfc.id}_u{u}_v{v}", "binary")
    c_name = {(f, v): var(f"cores_{f}_v{v}", "continuous",
                          0.0, net.node(v).cores)
              for f in vnf_ids for v in nodes}
    p_name = {(f, v): var(f"procs_{f}_v{v}", "integer",
                          0.0, math.ceil(net.node(v).cores))
              for f in vnf_ids for v in nodes}
    i_name = {(f, v): var(f"inst_{f}_v{v}", "binary")
              for f in vnf_ids for v in nodes}
    a_name = {v: var(f"act_v{v}", "binary") for v in nodes}

    pair_name = {}
    route_name = {}
    t_name = {}
    for sfc in scenario.sfcs:
        pos = _positions(sfc)
        vlinks = list(zip(pos, pos[1:]))
        for vl in range(len(vlinks)):
            for x in nodes:
                for y in nodes:
                    pair_name[(sfc.id, vl, x, y)] = var(
                        f"pair_c{sfc.id}_l{vl}_x{x}_y{y}", "binary")
                    for lk in net.links:
                        route_name[(sfc.id, vl, lk.id, x, y)] = var(
                            f"route_c{sfc.id}_l{vl}_e{lk.id}_x{x}_y{y}",
                            "binary")
        for r in sfc.requests:
            for v in nodes:
                node = net.node(v)
                ub = (len(vnf_ids) * math.ceil(node.cores) * node.csw_latency
                      + math.ceil(node.cores) * node.up_latency)
                t_name[(sfc.id, r.position, v)] = var(
                    f"nlat_c{sfc.id}_u{r.position}_v{v}", "continuous",
                    0.0, max(ub, 0.0))

    model.objective = {a_name[v]: 1.0 for v in nodes}

    # fixed start/end points
    for sfc in scenario.sfcs:
        for u, target in (("s", sfc.start), ("t", sfc.end)):
            for v in nodes:
                con("fixed_endpoint", {m_name[(sfc.id, u, v)]: 1.0},
                    "=", 1.0 if v == target else 0.0)

    # each request on exactly one node
    for sfc in scenario.sfcs:
        for r in sfc.requests:
            con("unique_mapping",
                {m_name[(sfc.id, str(r.position), v)]: 1.0 for v in nodes},
                "=", 1.0)

    # mapped demand cannot exceed the instance size
    for f in vnf_ids:
        for v in nodes:
            coeffs = {}
            for sfc in scenario.sfcs:
                for r in sfc.requests:
                    if r.vnf == f:
                        coeffs[m_name[(sfc.id, str(r.position), v)]] = (
                            scenario.proc(r))
            if not coeffs:
                continue
            coeffs[c_name[(f, v)]] = -1.0
            con("instance_capacity", coeffs, "<=", 0.0)

    # instance presence flags and the linearized strict inequality
    for f in vnf_ids:
        for v in nodes:
            con("instance_presence",
                {c_name[(f, v)]: 1.0, i_name[(f, v)]: -bm.m_gamma}, "<=", 0.0)
            con("instance_presence",
                {i_name[(f, v)]: 1.0, c_name[(f, v)]: -1.0},
                "<=", 1.0 - bm.eps)
            coeffs = {i_name[(f, v)]: 1.0}
            for sfc in scenario.sfcs:
                for r in sfc.requests:
                    if r.vnf == f:
                        coeffs[m_name[(sfc.id, str(r.position), v)]] = -1.0
            con("instance_presence", coeffs, "<=", 0.0)

    # linearized ceiling: cores <= procs <= cores + 1 - eps
    for f in vnf_ids:
        for v in nodes:
            con("ceiling", {c_name[(f, v)]: 1.0, p_name[(f, v)]: -1.0},
                "<=", 0.0)
            con("ceiling", {p_name[(f, v)]: 1.0, c_name[(f, v)]: -1.0},
                "<=", 1.0 - bm.eps)

    # capacity net of context-switching and upscaling overhead
    for v in nodes:
        node = net.node(v)
        coeffs = {}
        for f in vnf_ids:
            coeffs[c_name[(f, v)]] = 1.0
            over = node.csw_processing + node.up_processing
            if over:
                coeffs[p_name[(f, v)]] = over
        con("node_capacity", coeffs, "<=", node.cores)

    # routing
    for sfc in scenario.sfcs:
        pos = _positions(sfc)
        vlinks = list(zip(pos, pos[1:]))
        for vl, (u, u2) in enumerate(vlinks):
            for x in nodes:
                for y in nodes:
                    z = pair_name[(sfc.id, vl, x, y)]
                    mux = m_name[(sfc.id, u, x)]
                    muy = m_name[(sfc.id, u2, y)]
                    con("routing_pair", {z: 1.0, mux: -1.0}, "<=", 0.0)
                    con("routing_pair", {z: 1.0, muy: -1.0}, "<=", 0.0)
                    con("routing_pair", {mux: 1.0, muy: 1.0, z: -1.0},
                        "<=", 1.0)
                    for lk in net.links:
                        con("routing_pair",
                            {route_name[(sfc.id, vl, lk.id, x, y)]: 1.0,
                             z: -1.0}, "<=", 0.0)
            # source / destination
            src_coeffs = {}
            dst_coeffs = {}
            for x in nodes:
                for y in nodes:
                    for lk in net.links:
                        if lk.src == x:
                            src_coeffs[
                                route_name[(sfc.id, vl, lk.id, x, y)]] = 1.0
                        if lk.dst == y:
                            dst_coeffs[
                                route_name[(sfc.id, vl, lk.id, x, y)]] = 1.0
            con("routing_source", src_coeffs, "=", 1.0)
            con("routing_dest", dst_coeffs, "=", 1.0)
            # no spurious links entering the source / leaving the sink
            for x in nodes:
                for y in nodes:
                    if x == y:
                        continue
                    into_x = {
                        route_name[(sfc.id, vl, lk.id, x, y)]: 1.0
                        for lk in net.links if lk.dst == x}
                    if into_x:
                        con("routing_no_spurious", into_x, "=", 0.0)
                    out_y = {
                        route_name[(sfc.id, vl, lk.id, x, y)]: 1.0
                        for lk in net.links if lk.src == y}
                    if out_y:
                        con("routing_no_spurious", out_y, "=", 0.0)
            # transit conservation and unsplittability
            for x in nodes:
                for y in nodes:
                    for w in nodes:
                        if w == x or w == y:
                            continue
                        coeffs = {}
                        for lk in net.links:
                            if lk.dst == w:
                                coeffs[route_name[(sfc.id, vl, lk.id, x, y)]] \
                                    = coeffs.get(route_name[
                                        (sfc.id, vl, lk.id, x, y)], 0.0) + 1.0
                            if lk.src == w:
                                key = route_name[(sfc.id, vl, lk.id, x, y)]
                                coeffs[key] = coeffs.get(key, 0.0) - 1.0
                        coeffs = {k: c for k, c in coeffs.items() if c}
                        if coeffs:
                            con("routing_transit", coeffs, "=", 0.0)
                        incoming = {
                            route_name[(sfc.id, vl, lk.id, x, y)]: 1.0
                            for lk in net.links
                            if lk.dst == w and not lk.is_self_loop}
                        if incoming:
                            con("routing_transit", incoming, "<=", 1.0)
            # self-loop usage rules
            for x in nodes:
                for y in nodes:
                    if x != y:
                        coeffs = {
                            route_name[(sfc.id, vl, lk.id, x, y)]: 1.0
                            for lk in net.links if lk.is_self_loop}
                        if coeffs:
                            con("routing_self_loop", coeffs, "=", 0.0)
                    else:
                        coeffs = {
                            route_name[(sfc.id, vl, lk.id, x, x)]: 1.0
                            for lk in net.links if not lk.is_self_loop}
                        if coeffs:
                            con("routing_self_loop", coeffs, "=", 0.0)

    # bandwidth on finite-capacity links
    for lk in net.links:
        if lk.bandwidth == math.inf:
            continue
        coeffs = {}
        for sfc in scenario.sfcs:
            for vl in range(sfc.num_virtual_links):
                for x in nodes:
                    for y in nodes:
                        coeffs[route_name[(sfc.id, vl, lk.id, x, y)]] = (
                            sfc.bandwidth)
        con("bandwidth", coeffs, "<=", lk.bandwidth)

    # node latency charged to each mapped request (big-M linearization of
    # the mapping-variable product)
    for sfc in scenario.sfcs:
        for r in sfc.requests:
            for v in nodes:
                node = net.node(v)
                big = (len(vnf_ids) * math.ceil(node.cores) * node.csw_latency
                       + math.ceil(node.cores) * node.up_latency)
                coeffs = {}
                for f in vnf_ids:
                    coeffs[p_name[(f, v)]] = node.csw_latency
                coeffs[p_name[(r.vnf, v)]] = (
                    coeffs.get(p_name[(r.vnf, v)], 0.0) + node.up_latency)
                coeffs = {k: c for k, c in coeffs.items() if c}
                coeffs[m_name[(sfc.id, str(r.position), v)]] = big
                key = t_name[(sfc.id, r.position, v)]
                coeffs[key] = coeffs.get(key, 0.0) - 1.0
                con("latency_costs", coeffs, "<=", big)

    # end-to-end latency bound per chain
    for sfc in scenario.sfcs:
        coeffs = {}
        for vl in range(sfc.num_virtual_links):
            for x in nodes:
                for y in nodes:
                    for lk in net.links:
                        if lk.latency:
                            coeffs[route_name[(sfc.id, vl, lk.id, x, y)]] = (
                                lk.latency)
        for r in sfc.requests:
            for v in nodes:
                coeffs[t_name[(sfc.id, r.position, v)]] = 1.0
        con("latency", coeffs, "<=", sfc.max_latency)

    # active-node flags
    for v in nodes:
        con("active", dict([(i_name[(f, v)], 1.0) for f in vnf_ids]
                           + [(a_name[v], -bm.m_f)]), "<=", 0.0)
        con("active", dict([(a_name[v], 1.0)]
                           + [(i_name[(f, v)], -1.0) for f in vnf_ids]),
            "<=", 0.0)

    model.check_closed()
    return model


# -- LP text format ------------------------------------------------------------

def _fmt(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def _expr(coeffs: dict[str, float]) -> str:
    parts = []
    for name, coef in coeffs.items():
        sign = "-" if coef < 0 else "+"
        parts.append(f"{sign} {_fmt(abs(coef))} {name}")
    return " ".join(parts) if parts else "+ 0 __zero__"


def export_lp(model: LinearModel) -> str:
    """Deterministic LP-format text (parseable by ``parse_lp``)."""
    lines = ["\\ sfcplace linear model", "Minimize",
             f" obj: {_expr(model.objective)}", "Subject To"]
    for con in model.constraints:
        lines.append(f" {con.name}: {_expr(con.coeffs)} {con.relation} "
                     f"{_fmt(con.rhs)}")
    lines.append("Bounds")
    for v in model.variables:
        if v.kind != "binary":
            lines.append(f" {_fmt(v.lb)} <= {v.name} <= {_fmt(v.ub)}")
    lines.append("Generals")
    for v in model.variables:
        if v.kind == "integer":
            lines.append(f" {v.name}")
    lines.append("Binaries")
    for v in model.variables:
        if v.kind == "binary":
            lines.append(f" {v.name}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def _parse_expr(tokens: list[str]) -> dict[str, float]:
    coeffs: dict[str, float] = {}
    i = 0
    while i < len(tokens):
        sign, coef, name = tokens[i], tokens[i + 1], tokens[i + 2]
        value = float(coef) * (-1.0 if sign == "-" else 1.0)
        coeffs[name] = coeffs.get(name, 0.0) + value
        i += 3
    return coeffs


def parse_lp(text: str) -> LinearModel:
    """Read back a file produced by ``export_lp``."""
    model = LinearModel()
    bounds: list[tuple[float, str, float]] = []
    generals: list[str] = []
    binaries: list[str] = []
    section = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        lowered = line.lower()
        if lowered in ("minimize", "subject to", "bounds", "generals",
                       "binaries", "end"):
            section = lowered
            continue
        if section == "minimize":
            _, expr = line.split(":", 1)
            model.objective = _parse_expr(expr.split())
        elif section == "subject to":
            name, rest = line.split(":", 1)
            tokens = rest.split()
            relation = next(t for t in tokens if t in ("<=", "=", ">="))
            idx = tokens.index(relation)
            coeffs = _parse_expr(tokens[:idx])
            rhs = float(tokens[idx + 1])
            family = name.strip().rsplit("_", 1)[0]
            model.constraints.append(
                Constraint(name.strip(), coeffs, relation, rhs, family))
        elif section == "bounds":
            lb, _, name, _, ub = line.split()
            bounds.append((float(lb), name, float(ub)))
        elif section == "generals":
            generals.append(line)
        elif section == "binaries":
            binaries.append(line)
        elif section == "end":
            raise ConfigError("content after End section")
        else:
            raise ConfigError(f"line outside any LP section: {line!r}")
    general_set = set(generals)
    for lb, name, ub in bounds:
        kind = "integer" if name in general_set else "continuous"
        model.variables.append(Variable(name, kind, lb, ub))
    for name in binaries:
        model.variables.append(Variable(name, "binary", 0.0, 1.0))
    return model


# -- assignment checking -------------------------------------------------------

_EPS_FAMILIES = {"instance_presence", "ceiling"}


def check_assignment(model: LinearModel, assignment: dict[str, float],
                     eps_slack: float = 1e-6,
                     slack: float = 1e-9) -> list[str]:
    """Names of constraint rows the assignment violates (empty = feasible)."""
    bad = []
    for con in model.constraints:
        lhs = sum(c * assignment.get(name, 0.0)
                  for name, c in con.coeffs.items())
        tol = eps_slack if con.family in _EPS_FAMILIES else slack
        if con.relation == "<=" and lhs > con.rhs + tol:
            bad.append(con.name)
        elif con.relation == ">=" and lhs < con.rhs - tol:
            bad.append(con.name)
        elif con.relation == "=" and abs(lhs - con.rhs) > tol:
            bad.append(con.name)
    return bad


def embedding_to_assignment(scenario: Scenario,
                            emb: Embedding) -> dict[str, float]:
    """Natural variable assignment of a concrete embedding.

    Only nonzero variables are listed; ``check_assignment`` treats the
    rest as zero.
    """
    net = scenario.network
    vnf_ids = sorted(scenario.catalog.vnfs)
    out: dict[str, float] = {}
    for (sfc_id, pos), v in emb.request_map.items():
        out[f"map_c{sfc_id}_u{pos}_v{v}"] = 1.0
    for sfc in scenario.sfcs:
        out[f"map_c{sfc.id}_us_v{sfc.start}"] = 1.0
        out[f"map_c{sfc.id}_ut_v{sfc.end}"] = 1.0
    for v, alloc in emb.allocations.items():
        for f, c in alloc.items():
            out[f"cores_{f}_v{v}"] = c
            out[f"procs_{f}_v{v}"] = float(costs.core_count(c))
            out[f"inst_{f}_v{v}"] = 1.0
    for v in emb.active:
        out[f"act_v{v}"] = 1.0
    for sfc in scenario.sfcs:
        pos = _positions(sfc)
        mapped = {"s": sfc.start, "t": sfc.end}
        for r in sfc.requests:
            mapped[str(r.position)] = emb.request_map[(sfc.id, r.position)]
        for vl, (u, u2) in enumerate(zip(pos, pos[1:])):
            x, y = mapped[u], mapped[u2]
            out[f"pair_c{sfc.id}_l{vl}_x{x}_y{y}"] = 1.0
            path = emb.link_paths[(sfc.id, vl)]
            for link_id in path.links:
                out[f"route_c{sfc.id}_l{vl}_e{link_id}_x{x}_y{y}"] = 1.0
        for r in sfc.requests:
            v = mapped[str(r.position)]
            node = net.node(v)
            alloc = emb.alloc_at(v)
            lat = costs.node_latency(alloc, node, r.vnf)
            if lat:
                out[f"nlat_c{sfc.id}_u{r.position}_v{v}"] = lat
    return out


# -- exact small-instance solver -----------------------------------------------

@dataclass(frozen=True)
class ExactLimits:
    max_nfv_nodes: int = 5
    max_requests: int = 8


@dataclass
class ExactSolution:
    status: str                      # "optimal" | "infeasible"
    objective: int | None = None     # active-node count
    embedding: Embedding | None = None


def solve_exact(scenario: Scenario,
                limits: ExactLimits | None = None) -> ExactSolution:
    """Minimum active-node count by exhaustive request-to-node enumeration.

    Instances are sized minimally (size = summed per-request demand,
    optimal because every cost is non-decreasing in the size) and each
    virtual link is routed on the latency-shortest path, which is optimal
    under infinite link bandwidth.  Tie-break: lexicographically smallest
    assignment vector.
    """
    limits = limits or ExactLimits()
    net = scenario.network
    nfv = sorted(n.id for n in net.nfv_nodes)
    all_requests = [r for sfc in scenario.sfcs for r in sfc.requests]
    if len(nfv) > limits.max_nfv_nodes:
        raise SizeLimitError(
            f"{len(nfv)} NFV nodes exceed limit {limits.max_nfv_nodes}")
    if len(all_requests) > limits.max_requests:
        raise SizeLimitError(
            f"{len(all_requests)} requests exceed limit {limits.max_requests}")
    if any(lk.bandwidth != math.inf for lk in net.links):
        raise SizeLimitError("exact solving requires infinite link bandwidth")

    proc = [scenario.proc(r) for r in all_requests]
    best: tuple[int, tuple[int, ...]] | None = None

    def leaf_feasible(assign: tuple[int, ...]) -> bool:
        allocs: dict[int, dict[str, float]] = {}
        for r, v, p in zip(all_requests, assign, proc):
            allocs.setdefault(v, {})
            allocs[v][r.vnf] = allocs[v].get(r.vnf, 0.0) + p
        for v, alloc in allocs.items():
            if costs.residual_capacity(alloc, net.node(v)) < -1e-9:
                return False
        offset = 0
        for sfc in scenario.sfcs:
            n = len(sfc.template.chain)
            hops = [sfc.start] + list(assign[offset:offset + n]) + [sfc.end]
            latency = sum(net.sp_latency(a, b)
                          for a, b in zip(hops, hops[1:]))
            for r in sfc.requests:
                v = assign[offset + r.position]
                latency += costs.node_latency(allocs[v], net.node(v), r.vnf)
            if latency > sfc.max_latency + 1e-9:
                return False
            offset += n
        return True

    import itertools
    for assign in itertools.product(nfv, repeat=len(all_requests)):
        active = len(set(assign))
        if best is not None and active >= best[0]:
            continue
        if leaf_feasible(assign):
            best = (active, assign)

    if best is None:
        return ExactSolution("infeasible")
    _, assign = best
    emb = Embedding()
    offset = 0
    for sfc in scenario.sfcs:
        current = sfc.start
        for r in sfc.requests:
            v = assign[offset + r.position]
            emb.apply_mapping(scenario, r, v, net.shortest_path(current, v))
            current = v
        emb.set_final_path(scenario, sfc, net.shortest_path(current, sfc.end))
        offset += len(sfc.template.chain)
    return ExactSolution("optimal", best[0], emb)
