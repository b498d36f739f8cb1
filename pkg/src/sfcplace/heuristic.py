"""Two-phase greedy consolidation heuristic for chain embedding.

Chains are processed in order of increasing latency bound.  Phase 1
walks each chain greedily, preferring to grow the closest existing
instance of the requested VNF type and otherwise placing a new instance
on the fullest node, always steering traffic over latency-shortest
paths.  If the resulting end-to-end latency breaks the chain's bound,
phase 2 discards that attempt and instead stacks the whole chain on one
high-capacity node lying on a low-latency start-to-end path.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from sfcplace import costs
from sfcplace.catalog import Scenario, SfcInstance, VnfRequest
from sfcplace.costs import Allocation, SotaParams
from sfcplace.embedding import TOL, Embedding
from sfcplace.errors import PathNotFoundError, SaturationError
from sfcplace.topology import Path, PhysicalNetwork


@dataclass(frozen=True)
class HcaConfig:
    mode: str = "sharing"            # or "sota"
    sota_params: SotaParams = field(default_factory=SotaParams)
    k_max: int = 64                  # phase-2 path search cap
    self_check: bool = True          # early-exit on the candidate's own bound
    phase2_inactive_only: bool = False

    def __post_init__(self):
        if self.mode not in ("sharing", "sota"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


@dataclass
class HcaOutcome:
    status: str                      # "success" or "infeasible"
    embedding: Embedding
    per_sfc_latency: dict[int, float] = field(default_factory=dict)
    stats: dict[str, float] = field(default_factory=dict)

    @property
    def success(self) -> bool:
        return self.status == "success"

    @property
    def active_nodes(self) -> int:
        return len(self.embedding.active)


class _Engine:
    def __init__(self, scenario: Scenario, config: HcaConfig):
        self.scenario = scenario
        self.config = config
        self.net: PhysicalNetwork = scenario.network
        self.emb = Embedding()
        self.stats = {"scale_up_attempts": 0, "scale_up_successes": 0,
                      "phase2_activations": 0}

    # -- cost / feasibility checks --------------------------------------------

    def _fits(self, alloc: Allocation, node_id: int) -> bool:
        node = self.net.node(node_id)
        if costs.residual_capacity(alloc, node) < -TOL:
            return False
        if (self.config.mode == "sota"
                and costs.utilization(alloc, node) >= costs.SOTA_P_CAP):
            return False
        return True

    def _residents_ok(self, node_id: int, alloc: Allocation,
                      skip_sfc: int) -> bool:
        """True when growing node_id's allocation to ``alloc`` keeps every
        already-embedded chain with a request there within its bound."""
        override = {node_id: alloc}
        for sfc_id in {s for s, _ in self.emb.requests_at.get(node_id, set())}:
            if sfc_id == skip_sfc:
                continue
            sfc = self.scenario.sfc(sfc_id)
            try:
                lat = self.emb.path_latency(sfc_id) + self.emb.sfc_overhead(
                    self.scenario, sfc_id, self.config.mode,
                    self.config.sota_params, override)
            except SaturationError:
                return False
            if lat > sfc.max_latency + TOL:
                return False
        return True

    def _self_ok(self, sfc: SfcInstance, node_id: int, alloc: Allocation,
                 extra_path_latency: float) -> bool:
        """Partial-chain latency check for the chain being embedded."""
        if not self.config.self_check:
            return True
        override = {node_id: alloc}
        try:
            overhead = self.emb.sfc_overhead(
                self.scenario, sfc.id, self.config.mode,
                self.config.sota_params, override)
            # the request about to be mapped is not in request_map yet
            node = self.net.node(node_id)
            if self.config.mode == "sharing":
                overhead += costs.node_latency(alloc, node, self._pending_vnf)
            else:
                overhead += costs.sota_latency(alloc, node,
                                               self.config.sota_params)
        except SaturationError:
            return False
        lat = self.emb.path_latency(sfc.id) + extra_path_latency + overhead
        return lat <= sfc.max_latency + TOL

    def try_scale_up(self, sfc: SfcInstance, request: VnfRequest,
                     node_id: int, path: Path) -> bool:
        """Tentatively grow the instance for ``request`` on ``node_id``;
        commit only if capacity and every latency bound survive."""
        self.stats["scale_up_attempts"] += 1
        proc = self.scenario.proc(request)
        alloc = dict(self.emb.alloc_at(node_id))
        alloc[request.vnf] = alloc.get(request.vnf, 0.0) + proc
        if not self._fits(alloc, node_id):
            return False
        if not self._residents_ok(node_id, alloc, skip_sfc=sfc.id):
            return False
        self._pending_vnf = request.vnf
        if not self._self_ok(sfc, node_id, alloc, path.total_latency):
            return False
        self.emb.apply_mapping(self.scenario, request, node_id, path)
        self.stats["scale_up_successes"] += 1
        return True

    # -- phase 1 --------------------------------------------------------------

    def phase1(self, sfc: SfcInstance) -> bool:
        current = sfc.start
        for request in sfc.requests:
            placed_node = self._place_request(sfc, request, current)
            if placed_node is None:
                return False
            current = placed_node
        self.emb.set_final_path(self.scenario, sfc,
                                self.net.shortest_path(current, sfc.end))
        return True

    def _place_request(self, sfc: SfcInstance, request: VnfRequest,
                       current: int) -> int | None:
        # (a) grow the closest existing instance of this VNF type
        hosts = [n for n, alloc in self.emb.allocations.items()
                 if request.vnf in alloc]
        hosts.sort(key=lambda n: (self.net.sp_latency(current, n), n))
        for node_id in hosts:
            path = self.net.shortest_path(current, node_id)
            if self.try_scale_up(sfc, request, node_id, path):
                return node_id
        # (b) new instance, fullest NFV node first
        candidates = [n.id for n in self.net.nfv_nodes
                      if request.vnf not in self.emb.alloc_at(n.id)]
        candidates.sort(
            key=lambda n: (costs.residual_capacity(
                self.emb.alloc_at(n), self.net.node(n)), n))
        for node_id in candidates:
            path = self.net.shortest_path(current, node_id)
            if self.try_scale_up(sfc, request, node_id, path):
                return node_id
        return None

    # -- phase 2 --------------------------------------------------------------

    def phase2(self, sfc: SfcInstance) -> bool:
        self.emb.release_sfc(self.scenario, sfc.id)
        path = self._first_hosting_path(sfc)
        if path is None:
            return False
        return self._latency(sfc) <= sfc.max_latency + TOL

    def _first_hosting_path(self, sfc: SfcInstance) -> Path | None:
        """First (lowest-latency) start-to-end path with an NFV node that
        can absorb the whole chain; commits the placement on success."""
        k = 4
        checked = 0
        while True:
            try:
                paths = self.net.k_shortest_paths(sfc.start, sfc.end, k)
            except PathNotFoundError:
                return None
            for path in paths[checked:]:
                node_id = self._pick_host(sfc, path)
                if node_id is not None:
                    self._commit_stacked(sfc, path, node_id)
                    return path
            if len(paths) < k or k >= self.config.k_max:
                return None
            checked = len(paths)
            k = min(k * 2, self.config.k_max)

    def _pick_host(self, sfc: SfcInstance, path: Path) -> int | None:
        candidates = []
        for node_id in dict.fromkeys(path.nodes):
            node = self.net.node(node_id)
            if not node.is_nfv:
                continue
            if self.config.phase2_inactive_only and node_id in self.emb.active:
                continue
            if self._can_stack(sfc, node_id):
                candidates.append(node_id)
        if not candidates:
            return None
        # highest capacity wins, lowest id on ties
        return min(candidates, key=lambda n: (-self.net.node(n).cores, n))

    def _stacked_alloc(self, sfc: SfcInstance, node_id: int) -> Allocation:
        alloc = dict(self.emb.alloc_at(node_id))
        for request in sfc.requests:
            alloc[request.vnf] = (alloc.get(request.vnf, 0.0)
                                  + self.scenario.proc(request))
        return alloc

    def _can_stack(self, sfc: SfcInstance, node_id: int) -> bool:
        alloc = self._stacked_alloc(sfc, node_id)
        return (self._fits(alloc, node_id)
                and self._residents_ok(node_id, alloc, skip_sfc=sfc.id))

    def _commit_stacked(self, sfc: SfcInstance, path: Path,
                        node_id: int) -> None:
        if node_id not in self.emb.active:
            self.stats["phase2_activations"] += 1
        split = path.nodes.index(node_id)
        prefix = self._subpath(path, 0, split, node_id)
        suffix = self._subpath(path, split, len(path.nodes) - 1, node_id)
        loop = self.net.self_loop_path(node_id)
        for request in sfc.requests:
            self.emb.apply_mapping(
                self.scenario, request, node_id,
                prefix if request.position == 0 else loop)
        self.emb.set_final_path(self.scenario, sfc, suffix)

    def _subpath(self, path: Path, i: int, j: int, node_id: int) -> Path:
        if i == j:
            return self.net.self_loop_path(node_id)
        nodes = path.nodes[i:j + 1]
        links = path.links[i:j]
        return Path(nodes, links,
                    sum(self.net.link(l).latency for l in links))

    # -- driver ---------------------------------------------------------------

    def _latency(self, sfc: SfcInstance) -> float:
        return self.emb.end_to_end_latency(
            self.scenario, sfc.id, self.config.mode, self.config.sota_params)

    def run(self) -> HcaOutcome:
        started = time.perf_counter()
        order = sorted(self.scenario.sfcs,
                       key=lambda s: (s.max_latency, s.id))
        per_sfc_latency: dict[int, float] = {}
        for sfc in order:
            ok = self.phase1(sfc)
            if ok and self._latency(sfc) <= sfc.max_latency + TOL:
                per_sfc_latency[sfc.id] = self._latency(sfc)
                continue
            if ok:
                self.stats["phase2_invocations"] = (
                    self.stats.get("phase2_invocations", 0) + 1)
            else:
                self.emb.release_sfc(self.scenario, sfc.id)
            if not self.phase2(sfc):
                self.emb.release_sfc(self.scenario, sfc.id)
                self.stats["runtime_s"] = time.perf_counter() - started
                return HcaOutcome("infeasible", self.emb, per_sfc_latency,
                                  self.stats)
            per_sfc_latency[sfc.id] = self._latency(sfc)
        self.stats["runtime_s"] = time.perf_counter() - started
        return HcaOutcome("success", self.emb, per_sfc_latency, self.stats)


def run_hca(scenario: Scenario, config: HcaConfig | None = None) -> HcaOutcome:
    """Embed every chain of the scenario, or report infeasibility.

    On success the returned embedding satisfies every constraint family
    of the placement model (see ``sfcplace.embedding.validate``).
    """
    return _Engine(scenario, config or HcaConfig()).run()
