"""VNF and service-chain catalogs, and concrete chain instances.

A chain template lists VNF types in traversal order together with an
end-to-end latency bound and a per-user bandwidth.  Instantiating a
template fixes its start/end nodes and the aggregated user count, which
scales both the per-request processing demand and the per-virtual-link
bandwidth linearly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import yaml

from sfcplace.errors import ConfigError
from sfcplace.topology import PhysicalNetwork


@dataclass(frozen=True)
class VnfType:
    id: str
    name: str
    proc_per_user: float  # CPU cores per served user

    def __post_init__(self):
        if not (self.proc_per_user > 0 and math.isfinite(self.proc_per_user)):
            raise ConfigError(
                f"VNF {self.id}: proc_per_user must be finite and > 0")


@dataclass(frozen=True)
class SfcTemplate:
    name: str
    chain: tuple[str, ...]       # VNF type ids in traversal order
    max_latency: float           # ms, end to end
    bw_per_user: float           # Mb/s, uniform across virtual links

    def __post_init__(self):
        if len(self.chain) < 1:
            raise ConfigError(f"template {self.name}: empty chain")
        if not self.max_latency > 0:
            raise ConfigError(f"template {self.name}: max_latency must be > 0")
        if not self.bw_per_user > 0:
            raise ConfigError(f"template {self.name}: bw_per_user must be > 0")


@dataclass(frozen=True)
class VnfRequest:
    sfc: int        # owning chain instance id
    position: int   # index in the chain
    vnf: str        # VNF type id


@dataclass(frozen=True)
class SfcInstance:
    id: int
    template: SfcTemplate
    start: int
    end: int
    users: int

    def __post_init__(self):
        if self.users < 1:
            raise ConfigError(f"SFC {self.id}: users must be >= 1")

    @property
    def requests(self) -> tuple[VnfRequest, ...]:
        return tuple(VnfRequest(self.id, i, f)
                     for i, f in enumerate(self.template.chain))

    @property
    def num_virtual_links(self) -> int:
        # start->first, between consecutive requests, last->end
        return len(self.template.chain) + 1

    @property
    def bandwidth(self) -> float:
        """Aggregated Mb/s demanded on every virtual link."""
        return self.users * self.template.bw_per_user

    @property
    def max_latency(self) -> float:
        return self.template.max_latency


@dataclass(frozen=True)
class Catalog:
    vnfs: dict[str, VnfType]
    templates: dict[str, SfcTemplate]

    def __post_init__(self):
        for tpl in self.templates.values():
            for f in tpl.chain:
                if f not in self.vnfs:
                    raise ConfigError(
                        f"template {tpl.name} references unknown VNF {f!r}")

    def proc_per_request(self, vnf_id: str, users: int) -> float:
        """Cores one request of ``vnf_id`` needs at ``users`` aggregation."""
        return users * self.vnfs[vnf_id].proc_per_user


@dataclass(frozen=True)
class Scenario:
    """A concrete embedding problem: network, catalog, chain instances."""

    network: PhysicalNetwork
    catalog: Catalog
    sfcs: tuple[SfcInstance, ...]

    def __post_init__(self):
        by_id = {s.id: s for s in self.sfcs}
        if len(by_id) != len(self.sfcs):
            raise ConfigError("duplicate SFC instance ids")
        object.__setattr__(self, "_by_id", by_id)
        for sfc in self.sfcs:
            self.network.node(sfc.start)
            self.network.node(sfc.end)
            if sfc.template.name not in self.catalog.templates:
                raise ConfigError(
                    f"SFC {sfc.id} uses template {sfc.template.name!r} "
                    "not in the catalog")

    def sfc(self, sfc_id: int) -> SfcInstance:
        return self._by_id[sfc_id]

    def proc(self, request: VnfRequest) -> float:
        """Cores the given request needs on whichever node hosts it."""
        return self.catalog.proc_per_request(
            request.vnf, self.sfc(request.sfc).users)


def default_catalog() -> Catalog:
    """Six middlebox VNF types and the four reference service chains."""
    vnfs = [
        VnfType("NAT", "Network Address Translator", 0.00092),
        VnfType("FW", "Firewall", 0.0009),
        VnfType("TM", "Traffic Monitor", 0.0133),
        VnfType("WOC", "WAN Optimization Controller", 0.0054),
        VnfType("IDPS", "Intrusion Detection Prevention System", 0.0107),
        VnfType("VOC", "Video Optimization Controller", 0.0054),
    ]
    templates = [
        SfcTemplate("WebService", ("NAT", "FW", "TM", "WOC", "IDPS"),
                    max_latency=500.0, bw_per_user=0.1),
        SfcTemplate("VoIP", ("NAT", "FW", "TM", "FW", "NAT"),
                    max_latency=100.0, bw_per_user=0.064),
        SfcTemplate("VideoStreaming", ("NAT", "FW", "TM", "VOC", "IDPS"),
                    max_latency=100.0, bw_per_user=4.0),
        SfcTemplate("CloudGaming", ("NAT", "FW", "VOC", "WOC", "IDPS"),
                    max_latency=60.0, bw_per_user=4.0),
    ]
    return Catalog({v.id: v for v in vnfs}, {t.name: t for t in templates})


def instantiate(catalog: Catalog, template_name: str, start: int, end: int,
                users: int, sfc_id: int = 0) -> SfcInstance:
    """Materialize one chain instance of a catalog template."""
    try:
        tpl = catalog.templates[template_name]
    except KeyError:
        raise ConfigError(f"unknown template {template_name!r}") from None
    return SfcInstance(sfc_id, tpl, start, end, users)


# -- config ingestion / serialization -----------------------------------------

_VNF_KEYS = {"id", "name", "proc_per_user"}
_TPL_KEYS = {"name", "chain", "max_latency_ms", "bw_per_user_mbps"}


def load_catalog(source) -> Catalog:
    """Parse a catalog from YAML text, a dict, or a file path.

    Schema::

        vnfs:
          - {id: NAT, name: "...", proc_per_user: 0.00092}
        chains:
          - {name: VoIP, chain: [NAT, FW, TM, FW, NAT],
             max_latency_ms: 100, bw_per_user_mbps: 0.064}
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = source.read_text() if hasattr(source, "read_text") else str(source)
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed catalog config: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("catalog config must be a mapping")
    unknown = set(doc) - {"vnfs", "chains"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in catalog config")
    vnfs = {}
    for entry in doc.get("vnfs", []):
        unknown = set(entry) - _VNF_KEYS
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)} in vnf entry")
        try:
            v = VnfType(str(entry["id"]), str(entry.get("name", entry["id"])),
                        float(entry["proc_per_user"]))
        except KeyError as exc:
            raise ConfigError(f"vnf entry missing key {exc}") from None
        if v.id in vnfs:
            raise ConfigError(f"duplicate VNF id {v.id!r}")
        vnfs[v.id] = v
    templates = {}
    for entry in doc.get("chains", []):
        unknown = set(entry) - _TPL_KEYS
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)} in chain entry")
        try:
            t = SfcTemplate(str(entry["name"]),
                            tuple(str(f) for f in entry["chain"]),
                            float(entry["max_latency_ms"]),
                            float(entry["bw_per_user_mbps"]))
        except KeyError as exc:
            raise ConfigError(f"chain entry missing key {exc}") from None
        if t.name in templates:
            raise ConfigError(f"duplicate chain name {t.name!r}")
        templates[t.name] = t
    return Catalog(vnfs, templates)


_SFC_KEYS = {"template", "start", "end", "users"}


def load_scenario(source, network: PhysicalNetwork,
                  catalog: Catalog) -> Scenario:
    """Parse a scenario (list of chain instances) from YAML.

    Schema::

        sfcs:
          - {template: VoIP, start: 0, end: 9, users: 300}

    Instance ids are assigned by position in the list.
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = source.read_text() if hasattr(source, "read_text") else str(source)
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed scenario config: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("scenario config must be a mapping")
    unknown = set(doc) - {"sfcs"}
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in scenario config")
    sfcs = []
    for idx, entry in enumerate(doc.get("sfcs", [])):
        unknown = set(entry) - _SFC_KEYS
        if unknown:
            raise ConfigError(f"unknown keys {sorted(unknown)} in sfc entry")
        try:
            sfcs.append(instantiate(catalog, str(entry["template"]),
                                    int(entry["start"]), int(entry["end"]),
                                    int(entry["users"]), sfc_id=idx))
        except KeyError as exc:
            raise ConfigError(f"sfc entry missing key {exc}") from None
    return Scenario(network, catalog, tuple(sfcs))


def dump_catalog(catalog: Catalog) -> str:
    """Serialize a catalog back to the ``load_catalog`` YAML schema."""
    doc = {
        "vnfs": [
            {"id": v.id, "name": v.name, "proc_per_user": v.proc_per_user}
            for v in catalog.vnfs.values()
        ],
        "chains": [
            {"name": t.name, "chain": list(t.chain),
             "max_latency_ms": t.max_latency,
             "bw_per_user_mbps": t.bw_per_user}
            for t in catalog.templates.values()
        ],
    }
    return yaml.safe_dump(doc, sort_keys=False)
