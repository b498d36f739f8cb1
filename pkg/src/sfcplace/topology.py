"""Physical network topology and latency-shortest-path queries.

Nodes carry a core count plus the four per-node cost parameters
(context-switching latency/processing, upscaling latency/processing).
Every node with cores > 0 automatically gets a zero-latency,
infinite-bandwidth self-loop, which is the path used whenever two
consecutive chain positions land on the same node.
"""

from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Iterable

import yaml

from sfcplace.errors import ConfigError, PathNotFoundError, TopologyError

INF = math.inf


@dataclass(frozen=True)
class PhysicalNode:
    id: int
    cores: float
    csw_latency: float = 0.0      # added latency per process on the node, ms
    csw_processing: float = 0.0   # cores consumed per process
    up_latency: float = 0.0       # added latency per core of one instance, ms
    up_processing: float = 0.0    # cores consumed per core of one instance
    name: str = ""

    def __post_init__(self):
        for attr in ("cores", "csw_latency", "csw_processing",
                     "up_latency", "up_processing"):
            val = getattr(self, attr)
            if not math.isfinite(val) or val < 0:
                raise TopologyError(
                    f"node {self.id}: {attr} must be finite and >= 0, got {val}")

    @property
    def is_nfv(self) -> bool:
        return self.cores > 0


@dataclass(frozen=True)
class PhysicalLink:
    id: int
    src: int
    dst: int
    latency: float          # ms
    bandwidth: float = INF  # Mb/s

    @property
    def is_self_loop(self) -> bool:
        return self.src == self.dst


@dataclass(frozen=True)
class Path:
    """A directed walk given as node sequence plus the traversed link ids.

    A path from a node to itself is exactly that node's self-loop.
    """

    nodes: tuple[int, ...]
    links: tuple[int, ...]
    total_latency: float

    @property
    def endpoints(self) -> tuple[int, int]:
        return self.nodes[0], self.nodes[-1]


class PhysicalNetwork:
    """Immutable directed graph with per-node cost parameters.

    Construction validates all structural invariants; path queries are
    pure functions so the object can be shared across workers.
    """

    def __init__(self, nodes: Iterable[PhysicalNode],
                 links: Iterable[PhysicalLink]):
        self.nodes: list[PhysicalNode] = sorted(nodes, key=lambda n: n.id)
        self._node_by_id = {n.id: n for n in self.nodes}
        if len(self._node_by_id) != len(self.nodes):
            raise TopologyError("duplicate node ids")

        self.links: list[PhysicalLink] = list(links)
        self.self_loop: dict[int, int] = {}
        # adjacency over non-self-loop links only
        self.adj: dict[int, list[tuple[int, int, float]]] = {
            n.id: [] for n in self.nodes}
        for lk in self.links:
            if lk.src not in self._node_by_id or lk.dst not in self._node_by_id:
                raise TopologyError(f"link {lk.id} references unknown node")
            if lk.latency < 0 or not math.isfinite(lk.latency):
                raise TopologyError(f"link {lk.id}: negative or non-finite latency")
            if lk.bandwidth <= 0:
                raise TopologyError(f"link {lk.id}: bandwidth must be > 0")
            if lk.is_self_loop:
                node = self._node_by_id[lk.src]
                if not node.is_nfv:
                    raise TopologyError(
                        f"self-loop on forwarding-only node {lk.src}")
                if lk.latency != 0 or lk.bandwidth != INF:
                    raise TopologyError(
                        f"self-loop on node {lk.src} must have latency 0 "
                        "and infinite bandwidth")
                if lk.src in self.self_loop:
                    raise TopologyError(f"duplicate self-loop on node {lk.src}")
                self.self_loop[lk.src] = lk.id
            else:
                self.adj[lk.src].append((lk.dst, lk.id, lk.latency))
        for node in self.nodes:
            if node.is_nfv and node.id not in self.self_loop:
                raise TopologyError(f"NFV node {node.id} is missing a self-loop")
        for nbrs in self.adj.values():
            nbrs.sort()

        self._check_connectivity()
        self._warn_on_asymmetric_links()
        self._link_by_id = {lk.id: lk for lk in self.links}
        if len(self._link_by_id) != len(self.links):
            raise TopologyError("duplicate link ids")
        self._sp_cache: dict[tuple[int, int], Path] = {}
        # (a, b) -> (paths found so far, whether the path set is exhausted)
        self._ksp_cache: dict[tuple[int, int], tuple[list[Path], bool]] = {}

    # -- construction helpers -------------------------------------------------

    def _check_connectivity(self):
        # weak connectivity on the undirected projection, ignoring self-loops
        if not self.nodes:
            raise TopologyError("empty topology")
        undirected: dict[int, set[int]] = {n.id: set() for n in self.nodes}
        for lk in self.links:
            if not lk.is_self_loop:
                undirected[lk.src].add(lk.dst)
                undirected[lk.dst].add(lk.src)
        seen = {self.nodes[0].id}
        stack = [self.nodes[0].id]
        while stack:
            for nbr in undirected[stack.pop()]:
                if nbr not in seen:
                    seen.add(nbr)
                    stack.append(nbr)
        if len(seen) != len(self.nodes):
            raise TopologyError("topology is not (weakly) connected")

    def _warn_on_asymmetric_links(self):
        pairs = {(lk.src, lk.dst) for lk in self.links if not lk.is_self_loop}
        for src, dst in sorted(pairs):
            if (dst, src) not in pairs:
                warnings.warn(
                    f"link ({src}, {dst}) has no reverse direction",
                    stacklevel=3)

    # -- accessors ------------------------------------------------------------

    def node(self, node_id: int) -> PhysicalNode:
        try:
            return self._node_by_id[node_id]
        except KeyError:
            raise TopologyError(f"unknown node id {node_id}") from None

    def link(self, link_id: int) -> PhysicalLink:
        return self._link_by_id[link_id]

    @property
    def nfv_nodes(self) -> list[PhysicalNode]:
        return [n for n in self.nodes if n.is_nfv]

    def self_loop_path(self, node_id: int) -> Path:
        if node_id not in self.self_loop:
            raise PathNotFoundError(
                f"node {node_id} has no self-loop (forwarding-only)")
        return Path((node_id, node_id), (self.self_loop[node_id],), 0.0)

    def with_cost_params(self, *, omega: float, kappa: float,
                         h: float = 0.01,
                         orientation: str = "proc_from_lat") -> PhysicalNetwork:
        """Copy of the network with uniform cost parameters on every node.

        ``orientation`` selects how the latency and processing parameters
        are coupled through ``h``: ``proc_from_lat`` sets
        processing = h * latency, ``lat_from_proc`` the literal inverse
        (processing = latency / h, infeasible for realistic values and
        kept only as an explicit switch).
        """
        if orientation == "proc_from_lat":
            xi, mu = h * omega, h * kappa
        elif orientation == "lat_from_proc":
            if h == 0:
                raise ValueError("orientation lat_from_proc requires h > 0")
            xi, mu = omega / h, kappa / h
        else:
            raise ValueError(f"unknown coupling orientation {orientation!r}")
        nodes = [replace(n, csw_latency=omega, csw_processing=xi,
                         up_latency=kappa, up_processing=mu)
                 for n in self.nodes]
        return PhysicalNetwork(nodes, self.links)

    # -- path queries ---------------------------------------------------------

    def shortest_path(self, a: int, b: int) -> Path:
        """Minimum-latency loopless path a -> b over non-self-loop links.

        Ties are broken lexicographically on the node sequence so results
        are deterministic.  ``a == b`` returns the self-loop path.
        """
        self.node(a), self.node(b)
        if a == b:
            return self.self_loop_path(a)
        key = (a, b)
        if key not in self._sp_cache:
            self._sp_cache[key] = self._dijkstra(a, b)
        return self._sp_cache[key]

    def sp_latency(self, a: int, b: int) -> float:
        return self.shortest_path(a, b).total_latency

    def _dijkstra(self, a: int, b: int,
                  banned_nodes: frozenset[int] = frozenset(),
                  banned_links: frozenset[int] = frozenset()) -> Path:
        # heap entries carry the node sequence so equal-latency paths pop
        # in lexicographic order
        heap: list[tuple[float, tuple[int, ...], tuple[int, ...]]] = [
            (0.0, (a,), ())]
        done: set[int] = set()
        while heap:
            dist, nodes, links = heapq.heappop(heap)
            tail = nodes[-1]
            if tail == b:
                return Path(nodes, links, dist)
            if tail in done:
                continue
            done.add(tail)
            for nbr, link_id, lat in self.adj[tail]:
                if nbr in done or nbr in banned_nodes or link_id in banned_links:
                    continue
                heapq.heappush(
                    heap, (dist + lat, nodes + (nbr,), links + (link_id,)))
        raise PathNotFoundError(f"no path from {a} to {b}")

    def k_shortest_paths(self, a: int, b: int, k: int) -> list[Path]:
        """Up to k loopless paths a -> b in ascending latency (Yen).

        Ties are broken lexicographically on the node sequence; the first
        entry equals ``shortest_path(a, b)``.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if a == b:
            try:
                return [self.self_loop_path(a)]
            except PathNotFoundError:
                return []
        cached, exhausted = self._ksp_cache.get((a, b), ([], False))
        if exhausted or len(cached) >= k:
            return cached[:k]
        try:
            first = self.shortest_path(a, b)
        except PathNotFoundError:
            self._ksp_cache[(a, b)] = ([], True)
            return []
        found = [first]
        # candidate heap keyed by (latency, node sequence) for determinism
        candidates: list[tuple[float, tuple[int, ...], tuple[int, ...]]] = []
        seen = {first.nodes}
        while len(found) < k:
            prev = found[-1]
            for i in range(len(prev.nodes) - 1):
                spur = prev.nodes[i]
                root_nodes = prev.nodes[: i + 1]
                root_links = prev.links[:i]
                root_lat = sum(self.link(l).latency for l in root_links)
                banned_links = frozenset(
                    p.links[i] for p in found
                    if len(p.nodes) > i + 1 and p.nodes[: i + 1] == root_nodes)
                banned_nodes = frozenset(root_nodes[:-1])
                try:
                    spur_path = self._dijkstra(
                        spur, b, banned_nodes, banned_links)
                except PathNotFoundError:
                    continue
                nodes = root_nodes + spur_path.nodes[1:]
                if nodes in seen:
                    continue
                seen.add(nodes)
                links = root_links + spur_path.links
                heapq.heappush(
                    candidates,
                    (root_lat + spur_path.total_latency, nodes, links))
            if not candidates:
                break
            lat, nodes, links = heapq.heappop(candidates)
            found.append(Path(nodes, links, lat))
        self._ksp_cache[(a, b)] = (found, len(found) < k)
        return found

    def first_nfv_path(self, a: int, b: int, k_max: int = 64) -> Path:
        """Lowest-latency loopless path a -> b touching a node with cores > 0.

        Iterates the k-shortest-path list with k = 4, 8, ... up to k_max.
        """
        if not self.nfv_nodes:
            raise PathNotFoundError("network has no NFV nodes")
        if self.node(a).is_nfv or self.node(b).is_nfv:
            return self.shortest_path(a, b)
        k = 4
        checked = 0
        while True:
            paths = self.k_shortest_paths(a, b, k)
            for path in paths[checked:]:
                if any(self.node(v).is_nfv for v in path.nodes):
                    return path
            if len(paths) < k or k >= k_max:
                raise PathNotFoundError(
                    f"no path from {a} to {b} through an NFV node "
                    f"(searched k={min(k, k_max)})")
            checked = len(paths)
            k = min(k * 2, k_max) if k < k_max else k_max


# -- config ingestion ---------------------------------------------------------

_NODE_KEYS = {"id", "name", "cores", "omega", "xi", "kappa", "mu"}
_LINK_KEYS = {"from", "to", "latency_ms", "bandwidth_mbps"}


def _check_keys(entry: dict, allowed: set[str], what: str):
    unknown = set(entry) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in {what} entry")


def _parse_bandwidth(raw) -> float:
    if raw in (None, "inf", "infinity"):
        return INF
    try:
        val = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"bad bandwidth value {raw!r}") from None
    return val


def load_topology(source) -> PhysicalNetwork:
    """Build a validated network from YAML text, a dict, or a file path.

    Schema::

        bidirectional: true          # optional, expands each link both ways
        nodes:
          - {id: 0, cores: 16, omega: 0.4, xi: 0.004, kappa: 0.0, mu: 0.0}
        links:
          - {from: 0, to: 1, latency_ms: 7.0, bandwidth_mbps: inf}

    Self-loops are inserted automatically on every node with cores > 0;
    declaring them explicitly is a config error.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = source.read_text() if hasattr(source, "read_text") else str(source)
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed topology config: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("topology config must be a mapping")
    _check_keys(doc, {"bidirectional", "nodes", "links"}, "topology")
    if "nodes" not in doc:
        raise ConfigError("topology config missing 'nodes'")
    bidirectional = bool(doc.get("bidirectional", False))

    nodes = []
    for entry in doc["nodes"]:
        if not isinstance(entry, dict):
            raise ConfigError("each node entry must be a mapping")
        _check_keys(entry, _NODE_KEYS, "node")
        try:
            nodes.append(PhysicalNode(
                id=int(entry["id"]),
                cores=float(entry.get("cores", 0.0)),
                csw_latency=float(entry.get("omega", 0.0)),
                csw_processing=float(entry.get("xi", 0.0)),
                up_latency=float(entry.get("kappa", 0.0)),
                up_processing=float(entry.get("mu", 0.0)),
                name=str(entry.get("name", "")),
            ))
        except KeyError as exc:
            raise ConfigError(f"node entry missing key {exc}") from None

    links = []
    next_id = 0
    for entry in doc.get("links", []):
        if not isinstance(entry, dict):
            raise ConfigError("each link entry must be a mapping")
        _check_keys(entry, _LINK_KEYS, "link")
        try:
            src, dst = int(entry["from"]), int(entry["to"])
            lat = float(entry["latency_ms"])
        except KeyError as exc:
            raise ConfigError(f"link entry missing key {exc}") from None
        if src == dst:
            raise ConfigError(
                f"explicit self-loop on node {src}: self-loops are implicit")
        bw = _parse_bandwidth(entry.get("bandwidth_mbps"))
        links.append(PhysicalLink(next_id, src, dst, lat, bw))
        next_id += 1
        if bidirectional:
            links.append(PhysicalLink(next_id, dst, src, lat, bw))
            next_id += 1
    for node in nodes:
        if node.cores > 0:
            links.append(PhysicalLink(next_id, node.id, node.id, 0.0, INF))
            next_id += 1
    return PhysicalNetwork(nodes, links)


_DEFAULT_BASE: PhysicalNetwork | None = None


def _default_base() -> PhysicalNetwork:
    global _DEFAULT_BASE
    if _DEFAULT_BASE is None:
        text = resources.files("sfcplace").joinpath("data/internet2_like.yaml")
        _DEFAULT_BASE = load_topology(text.read_text())
    return _DEFAULT_BASE


def default_topology(*, omega: float | None = None, kappa: float | None = None,
                     h: float = 0.01,
                     orientation: str = "proc_from_lat") -> PhysicalNetwork:
    """The shipped 10-node / 15-bidirectional-link continental fixture.

    All nodes have 16 cores and link latencies lie in [3, 13.5] ms.  When
    omega/kappa are given, the per-node cost parameters are set uniformly
    with processing coupled to latency through ``h``.
    """
    net = _default_base()
    if omega is not None or kappa is not None:
        net = net.with_cost_params(omega=omega or 0.0, kappa=kappa or 0.0,
                                   h=h, orientation=orientation)
    return net
