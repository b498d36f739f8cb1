"""Mutable embedding state and an independent constraint validator.

The embedding stores the decision state of one placement problem: which
node each chain request is mapped to, how large each (VNF type, node)
instance is, which physical path realizes each virtual link, and which
nodes are active.  ``validate`` re-checks every constraint family of the
placement model directly from the data, without trusting the bookkeeping
the heuristic maintains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from sfcplace import costs
from sfcplace.catalog import Scenario, SfcInstance, VnfRequest
from sfcplace.costs import Allocation, SotaParams
from sfcplace.errors import CapacityError, ConfigError
from sfcplace.topology import Path, PhysicalNetwork

TOL = 1e-9


@dataclass
class Embedding:
    """Decision state for one scenario.

    Virtual link ``i`` of an SFC connects chain position ``i-1`` to
    position ``i``; index 0 starts at the fixed start node and index
    ``len(chain)`` ends at the fixed end node.
    """

    allocations: dict[int, Allocation] = field(default_factory=dict)
    request_map: dict[tuple[int, int], int] = field(default_factory=dict)
    link_paths: dict[tuple[int, int], Path] = field(default_factory=dict)
    link_load: dict[int, float] = field(default_factory=dict)
    active: set[int] = field(default_factory=set)
    # reverse index: node -> requests mapped there
    requests_at: dict[int, set[tuple[int, int]]] = field(default_factory=dict)

    # -- mutation -------------------------------------------------------------

    def alloc_at(self, node_id: int) -> Allocation:
        return self.allocations.get(node_id, {})

    def apply_mapping(self, scenario: Scenario, request: VnfRequest,
                      node_id: int, path_from_prev: Path) -> None:
        """Map one request to a node, growing (or creating) its instance.

        Raises CapacityError, leaving the state unchanged, if the grown
        allocation would not fit in the node's usable capacity.
        """
        node = scenario.network.node(node_id)
        if not node.is_nfv:
            raise CapacityError(f"node {node_id} is forwarding-only")
        proc = scenario.proc(request)
        alloc = dict(self.alloc_at(node_id))
        alloc[request.vnf] = alloc.get(request.vnf, 0.0) + proc
        if costs.residual_capacity(alloc, node) < -TOL:
            raise CapacityError(
                f"request ({request.sfc}, {request.position}) does not fit "
                f"on node {node_id}")
        self.allocations[node_id] = alloc
        self.request_map[(request.sfc, request.position)] = node_id
        self.requests_at.setdefault(node_id, set()).add(
            (request.sfc, request.position))
        self.active.add(node_id)
        self._add_path(scenario, request.sfc, request.position, path_from_prev)

    def set_final_path(self, scenario: Scenario, sfc: SfcInstance,
                       path: Path) -> None:
        """Record the virtual link from the last request to the end node."""
        self._add_path(scenario, sfc.id, len(sfc.template.chain), path)

    def _add_path(self, scenario: Scenario, sfc_id: int, vlink: int,
                  path: Path) -> None:
        self.link_paths[(sfc_id, vlink)] = path
        bw = scenario.sfc(sfc_id).bandwidth
        for link_id in path.links:
            self.link_load[link_id] = self.link_load.get(link_id, 0.0) + bw

    def release_sfc(self, scenario: Scenario, sfc_id: int) -> None:
        """Unmap every request of the SFC and shrink touched instances."""
        try:
            sfc = scenario.sfc(sfc_id)
        except KeyError:
            return
        for request in sfc.requests:
            key = (sfc_id, request.position)
            node_id = self.request_map.pop(key, None)
            if node_id is None:
                continue
            self.requests_at[node_id].discard(key)
            alloc = self.allocations[node_id]
            alloc[request.vnf] -= scenario.proc(request)
            if alloc[request.vnf] <= TOL:
                del alloc[request.vnf]
            if not alloc:
                del self.allocations[node_id]
                self.active.discard(node_id)
        bw = sfc.bandwidth
        for vlink in range(sfc.num_virtual_links):
            path = self.link_paths.pop((sfc_id, vlink), None)
            if path is None:
                continue
            for link_id in path.links:
                self.link_load[link_id] -= bw
                if abs(self.link_load[link_id]) <= TOL:
                    del self.link_load[link_id]

    # -- latency --------------------------------------------------------------

    def sfc_overhead(self, scenario: Scenario, sfc_id: int,
                     mode: str = "sharing",
                     sota_params: SotaParams | None = None,
                     override: dict[int, Allocation] | None = None) -> float:
        """Node-induced latency summed over the SFC's mapped requests, ms.

        ``override`` substitutes tentative allocations for specific nodes,
        which lets callers price a scale-up before committing it.
        """
        sfc = scenario.sfc(sfc_id)
        total = 0.0
        for request in sfc.requests:
            node_id = self.request_map.get((sfc_id, request.position))
            if node_id is None:
                continue
            node = scenario.network.node(node_id)
            alloc = self.alloc_at(node_id)
            if override is not None and node_id in override:
                alloc = override[node_id]
            if mode == "sharing":
                total += costs.node_latency(alloc, node, request.vnf)
            elif mode == "sota":
                total += costs.sota_latency(
                    alloc, node, sota_params or SotaParams())
            else:
                raise ValueError(f"unknown mode {mode!r}")
        return total

    def path_latency(self, sfc_id: int) -> float:
        return sum(p.total_latency
                   for (sid, _), p in self.link_paths.items() if sid == sfc_id)

    def end_to_end_latency(self, scenario: Scenario, sfc_id: int,
                           mode: str = "sharing",
                           sota_params: SotaParams | None = None) -> float:
        """Physical path latency plus node overhead for one SFC, ms."""
        sfc = scenario.sfc(sfc_id)
        path_lat = sum(
            self.link_paths[(sfc_id, v)].total_latency
            for v in range(sfc.num_virtual_links)
            if (sfc_id, v) in self.link_paths)
        return path_lat + self.sfc_overhead(scenario, sfc_id, mode, sota_params)


@dataclass
class ValidationReport:
    violations: list[tuple[str, str, tuple]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, family: str, detail: str, ids: tuple = ()):
        self.violations.append((family, detail, ids))

    def families(self) -> set[str]:
        return {fam for fam, _, _ in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(f"[{fam}] {detail} {ids}"
                         for fam, detail, ids in self.violations)


def _check_path(report: ValidationReport, net: PhysicalNetwork, path: Path,
                src: int, dst: int, ids: tuple) -> None:
    """Walk-structure checks for one virtual link's physical path."""
    if not path.links or not path.nodes:
        report.add("routing", "empty path", ids)
        return
    nodes = [net.link(path.links[0]).src]
    for link_id in path.links:
        link = net.link(link_id)
        if link.src != nodes[-1]:
            report.add("routing", "discontinuous link sequence", ids)
            return
        nodes.append(link.dst)
    if tuple(nodes) != path.nodes:
        report.add("routing", "node sequence disagrees with links", ids)
        return
    if nodes[0] != src or nodes[-1] != dst:
        report.add(
            "routing",
            f"path endpoints ({nodes[0]}, {nodes[-1]}) do not connect the "
            f"mapped nodes ({src}, {dst})", ids)
        return
    if src == dst:
        if len(path.links) != 1 or not net.link(path.links[0]).is_self_loop:
            report.add("routing",
                       "co-located endpoints must use exactly the self-loop",
                       ids)
    else:
        if any(net.link(l).is_self_loop for l in path.links):
            report.add("routing",
                       "self-loop on a path between distinct nodes", ids)
        if len(set(nodes)) != len(nodes):
            report.add("routing", "virtual-link path revisits a node", ids)
    expected = sum(net.link(l).latency for l in path.links)
    if path.total_latency != expected:
        report.add("routing", "stored path latency disagrees with links", ids)


def validate(emb: Embedding, scenario: Scenario, mode: str = "sharing",
             sota_params: SotaParams | None = None) -> ValidationReport:
    """Check a candidate embedding against every constraint family.

    Families reported: fixed_endpoint, unique_mapping, instance_capacity,
    instance_presence, node_capacity, routing, bandwidth, latency,
    active_flags, link_load.  Violations are data, not errors.
    """
    net = scenario.network
    report = ValidationReport()
    sota_params = sota_params or SotaParams()

    known = {(s.id, r.position) for s in scenario.sfcs for r in s.requests}
    for key in emb.request_map:
        if key not in known:
            report.add("unique_mapping", "mapping for unknown request", key)

    # per-(vnf, node) demand implied by the mapping
    demand: dict[tuple[str, int], float] = {}
    mapped_types: dict[int, set[str]] = {}

    for sfc in scenario.sfcs:
        nodes_of: dict[int, int] = {}
        for request in sfc.requests:
            key = (sfc.id, request.position)
            node_id = emb.request_map.get(key)
            if node_id is None:
                report.add("unique_mapping", "request not mapped", key)
                continue
            try:
                node = net.node(node_id)
            except Exception:
                report.add("unique_mapping", "mapped to unknown node", key)
                continue
            if not node.is_nfv:
                report.add("unique_mapping",
                           f"mapped to forwarding-only node {node_id}", key)
                continue
            nodes_of[request.position] = node_id
            demand[(request.vnf, node_id)] = (
                demand.get((request.vnf, node_id), 0.0) + scenario.proc(request))
            mapped_types.setdefault(node_id, set()).add(request.vnf)

        # routing: virtual link i connects position i-1 to position i
        n = len(sfc.template.chain)
        endpoints = {}
        for vlink in range(n + 1):
            src = sfc.start if vlink == 0 else nodes_of.get(vlink - 1)
            dst = sfc.end if vlink == n else nodes_of.get(vlink)
            endpoints[vlink] = (src, dst)
        for vlink in range(n + 1):
            ids = (sfc.id, vlink)
            path = emb.link_paths.get(ids)
            src, dst = endpoints[vlink]
            if path is None:
                report.add("routing", "virtual link has no path", ids)
                continue
            if src is None or dst is None:
                continue  # already reported as unmapped
            _check_path(report, net, path, src, dst, ids)
        if (emb.link_paths.get((sfc.id, 0)) is not None
                and emb.link_paths[(sfc.id, 0)].nodes[0] != sfc.start):
            report.add("fixed_endpoint",
                       f"chain does not originate at node {sfc.start}",
                       (sfc.id,))
        last = emb.link_paths.get((sfc.id, n))
        if last is not None and last.nodes[-1] != sfc.end:
            report.add("fixed_endpoint",
                       f"chain does not terminate at node {sfc.end}",
                       (sfc.id,))

    # instance capacity / presence
    for (vnf, node_id), needed in sorted(demand.items()):
        have = emb.alloc_at(node_id).get(vnf, 0.0)
        if needed > have + TOL:
            report.add(
                "instance_capacity",
                f"instance {vnf}@{node_id} sized {have:.6f} serves demand "
                f"{needed:.6f}", (vnf, node_id))
    for node_id, alloc in sorted(emb.allocations.items()):
        for vnf, c in sorted(alloc.items()):
            if c <= 0:
                report.add("instance_presence",
                           f"non-positive allocation {vnf}@{node_id}",
                           (vnf, node_id))
            if vnf not in mapped_types.get(node_id, set()):
                report.add("instance_presence",
                           f"instance {vnf}@{node_id} serves no request",
                           (vnf, node_id))
    for node_id, types in sorted(mapped_types.items()):
        for vnf in sorted(types):
            if vnf not in emb.alloc_at(node_id):
                report.add("instance_presence",
                           f"request mapped to missing instance "
                           f"{vnf}@{node_id}", (vnf, node_id))

    # node capacity including overhead
    for node_id, alloc in sorted(emb.allocations.items()):
        node = net.node(node_id)
        used = sum(alloc.values())
        usable = node.cores - costs.node_processing_overhead(alloc, node)
        if used > usable + TOL:
            report.add("node_capacity",
                       f"node {node_id}: {used:.6f} cores used, "
                       f"{usable:.6f} usable", (node_id,))
        if mode == "sota" and costs.utilization(alloc, node) >= costs.SOTA_P_CAP:
            report.add("latency",
                       f"node {node_id} saturated under baseline model",
                       (node_id,))

    # bandwidth, recomputed from paths
    recomputed: dict[int, float] = {}
    for (sfc_id, _), path in emb.link_paths.items():
        try:
            bw = scenario.sfc(sfc_id).bandwidth
        except KeyError:
            report.add("routing", "path for unknown SFC", (sfc_id,))
            continue
        for link_id in path.links:
            recomputed[link_id] = recomputed.get(link_id, 0.0) + bw
    for link_id, load in sorted(recomputed.items()):
        link = net.link(link_id)
        if load > link.bandwidth + TOL:
            report.add("bandwidth",
                       f"link {link_id}: load {load:.6f} exceeds "
                       f"{link.bandwidth}", (link_id,))
    for link_id in set(recomputed) | set(emb.link_load):
        stored = emb.link_load.get(link_id, 0.0)
        if not math.isclose(stored, recomputed.get(link_id, 0.0),
                            rel_tol=0.0, abs_tol=1e-6):
            report.add("link_load",
                       f"stored load {stored:.6f} != recomputed "
                       f"{recomputed.get(link_id, 0.0):.6f}", (link_id,))

    # end-to-end latency
    for sfc in scenario.sfcs:
        complete = all((sfc.id, v) in emb.link_paths
                       for v in range(sfc.num_virtual_links))
        mapped = all((sfc.id, r.position) in emb.request_map
                     for r in sfc.requests)
        if not (complete and mapped):
            continue  # unmapped requests already reported
        try:
            latency = emb.end_to_end_latency(scenario, sfc.id, mode,
                                             sota_params)
        except Exception:
            continue  # saturation already reported
        if latency > sfc.max_latency + TOL:
            report.add("latency",
                       f"SFC {sfc.id}: {latency:.6f} ms exceeds bound "
                       f"{sfc.max_latency} ms", (sfc.id,))

    # active flags
    should_be = {n for n, alloc in emb.allocations.items() if alloc}
    if emb.active != should_be:
        report.add("active_flags",
                   f"active set {sorted(emb.active)} != nodes with "
                   f"allocations {sorted(should_be)}", ())
    return report


# -- serialization ------------------------------------------------------------

def dump_embedding(emb: Embedding, scenario: Scenario) -> str:
    """Serialize an embedding to YAML (requests, paths, allocations)."""
    doc = {
        "requests": [
            {"sfc": sfc_id, "position": pos, "node": node_id}
            for (sfc_id, pos), node_id in sorted(emb.request_map.items())
        ],
        "paths": [
            {"sfc": sfc_id, "vlink": vlink, "nodes": list(path.nodes)}
            for (sfc_id, vlink), path in sorted(emb.link_paths.items())
        ],
        "allocations": [
            {"node": node_id, "vnf": vnf, "cores": c}
            for node_id, alloc in sorted(emb.allocations.items())
            for vnf, c in sorted(alloc.items())
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False)


def _resolve_path(net: PhysicalNetwork, nodes: list[int]) -> Path:
    if len(nodes) < 2:
        raise ConfigError(f"path node sequence too short: {nodes}")
    if len(nodes) == 2 and nodes[0] == nodes[1]:
        return net.self_loop_path(nodes[0])
    links = []
    latency = 0.0
    for a, b in zip(nodes, nodes[1:]):
        for nbr, link_id, lat in net.adj[a]:
            if nbr == b:
                links.append(link_id)
                latency += lat
                break
        else:
            raise ConfigError(f"no physical link from {a} to {b}")
    return Path(tuple(nodes), tuple(links), latency)


def load_embedding(source, scenario: Scenario) -> Embedding:
    """Rebuild an embedding from its YAML serialization.

    Link loads and active flags are recomputed; structural problems in
    the data surface later through ``validate``, while references to
    nonexistent physical links fail here with ConfigError.
    """
    text = source.read_text() if hasattr(source, "read_text") else str(source)
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed embedding file: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("embedding file must be a mapping")
    unknown = set(doc) - {"requests", "paths", "allocations"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in embedding file")
    emb = Embedding()
    for entry in doc.get("requests", []):
        key = (int(entry["sfc"]), int(entry["position"]))
        emb.request_map[key] = int(entry["node"])
        emb.requests_at.setdefault(int(entry["node"]), set()).add(key)
    for entry in doc.get("allocations", []):
        node_id = int(entry["node"])
        emb.allocations.setdefault(node_id, {})[str(entry["vnf"])] = float(
            entry["cores"])
    emb.active = {n for n, alloc in emb.allocations.items() if alloc}
    for entry in doc.get("paths", []):
        key = (int(entry["sfc"]), int(entry["vlink"]))
        path = _resolve_path(scenario.network,
                             [int(n) for n in entry["nodes"]])
        emb.link_paths[key] = path
        try:
            bw = scenario.sfc(key[0]).bandwidth
        except KeyError:
            continue
        for link_id in path.links:
            emb.link_load[link_id] = emb.link_load.get(link_id, 0.0) + bw
    return emb
