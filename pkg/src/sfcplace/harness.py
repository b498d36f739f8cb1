"""Seeded randomized experiment harness with CSV emission.

An experiment sweeps a grid of (cost setting) x (load size) points; each
point runs a number of independently seeded scenario instances through
the heuristic and aggregates mean active nodes, mean end-to-end latency,
95% confidence intervals, and the infeasibility rate.  Instance RNG
streams are derived from (seed, instance index) only, so results are
reproducible and independent of execution order, and paired model
comparisons can share the exact same scenarios.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from sfcplace.catalog import (Catalog, Scenario, SfcInstance, default_catalog,
                              load_catalog)
from sfcplace.costs import SotaParams
from sfcplace.errors import ConfigError
from sfcplace.heuristic import HcaConfig, run_hca
from sfcplace.topology import PhysicalNetwork, default_topology, load_topology


@dataclass(frozen=True)
class CostSetting:
    omega: float = 0.0
    kappa: float = 0.0


@dataclass(frozen=True)
class LoadSize:
    num_sfcs: int
    users: int


@dataclass(frozen=True)
class ExperimentSpec:
    sizes: tuple[LoadSize, ...]
    cost_grid: tuple[CostSetting, ...]
    iterations: int = 100
    seed: int = 0
    kind: str = "mixed"                  # or "homogeneous"
    template: str | None = None          # homogeneous only
    cg_fraction: float | None = None     # mixed only: share of CloudGaming
    mode: str = "sharing"
    h: float = 0.01
    coupling_orientation: str = "proc_from_lat"
    sota_params: SotaParams = field(default_factory=SotaParams)
    allow_same_endpoints: bool = True
    topology: PhysicalNetwork | None = None   # default fixture when None
    catalog: Catalog | None = None            # default catalog when None

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if not self.sizes or not self.cost_grid:
            raise ConfigError("sizes and cost_grid must be non-empty")
        if self.kind not in ("mixed", "homogeneous"):
            raise ConfigError(f"unknown scenario kind {self.kind!r}")
        if self.kind == "homogeneous" and not self.template:
            raise ConfigError("homogeneous experiments need a template")

    def resolved_topology(self) -> PhysicalNetwork:
        return self.topology if self.topology is not None else default_topology()

    def resolved_catalog(self) -> Catalog:
        return self.catalog if self.catalog is not None else default_catalog()


@dataclass
class InstanceRow:
    index: int
    feasible: bool
    active_nodes: int | None
    mean_latency: float | None
    runtime_s: float


@dataclass
class GridPointResult:
    omega: float
    kappa: float
    num_sfcs: int
    users: int
    mode: str
    instances: list[InstanceRow]

    def _feasible(self, attr):
        return [getattr(r, attr) for r in self.instances if r.feasible]

    @staticmethod
    def _mean(values) -> float | None:
        return float(np.mean(values)) if values else None

    @staticmethod
    def _ci95(values) -> float | None:
        if not values:
            return None
        if len(values) < 2:
            return 0.0
        return float(1.96 * np.std(values, ddof=1) / math.sqrt(len(values)))

    @property
    def mean_active(self):
        return self._mean(self._feasible("active_nodes"))

    @property
    def ci95_active(self):
        return self._ci95(self._feasible("active_nodes"))

    @property
    def mean_latency(self):
        return self._mean(self._feasible("mean_latency"))

    @property
    def ci95_latency(self):
        return self._ci95(self._feasible("mean_latency"))

    @property
    def infeasible_pct(self) -> float:
        total = len(self.instances)
        bad = sum(1 for r in self.instances if not r.feasible)
        return 100.0 * bad / total if total else 0.0

    @property
    def mean_runtime_s(self) -> float:
        return float(np.mean([r.runtime_s for r in self.instances]))


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    points: list[GridPointResult]


# -- scenario generation -------------------------------------------------------

def gen_scenario(spec: ExperimentSpec, size: LoadSize,
                 instance_index: int) -> Scenario:
    """Deterministic scenario for one (seed, instance index) pair.

    The RNG stream depends only on the spec seed and the instance index,
    never on the cost grid point, so paired runs across cost settings or
    node models see identical scenarios.
    """
    net = spec.resolved_topology()
    cat = spec.resolved_catalog()
    rng = np.random.default_rng(
        np.random.SeedSequence([spec.seed, instance_index, size.num_sfcs,
                                size.users]))
    template_names = list(cat.templates)
    node_ids = [n.id for n in net.nodes]
    sfcs = []
    for i in range(size.num_sfcs):
        if spec.kind == "homogeneous":
            name = spec.template
        elif spec.cg_fraction is not None:
            n_cg = round(spec.cg_fraction * size.num_sfcs)
            others = [t for t in template_names if t != "CloudGaming"]
            name = ("CloudGaming" if i < n_cg
                    else others[rng.integers(len(others))])
        else:
            name = template_names[rng.integers(len(template_names))]
        start = node_ids[rng.integers(len(node_ids))]
        end = node_ids[rng.integers(len(node_ids))]
        while not spec.allow_same_endpoints and end == start:
            end = node_ids[rng.integers(len(node_ids))]
        sfcs.append(SfcInstance(i, cat.templates[name], start, end,
                                size.users))
    return Scenario(net, cat, tuple(sfcs))


# -- execution -----------------------------------------------------------------

def _run_instance(spec: ExperimentSpec, cost: CostSetting, size: LoadSize,
                  index: int) -> InstanceRow:
    base = gen_scenario(spec, size, index)
    net = base.network.with_cost_params(
        omega=cost.omega, kappa=cost.kappa, h=spec.h,
        orientation=spec.coupling_orientation)
    scenario = Scenario(net, base.catalog, base.sfcs)
    config = HcaConfig(mode=spec.mode, sota_params=spec.sota_params)
    outcome = run_hca(scenario, config)
    if outcome.success:
        latencies = list(outcome.per_sfc_latency.values())
        return InstanceRow(index, True, outcome.active_nodes,
                           float(np.mean(latencies)) if latencies else 0.0,
                           outcome.stats.get("runtime_s", 0.0))
    return InstanceRow(index, False, None, None,
                       outcome.stats.get("runtime_s", 0.0))


def _run_instance_args(args):
    return _run_instance(*args)


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ExperimentResult:
    """Run the heuristic over the whole grid; infeasible instances are
    counted, never fatal."""
    points = []
    for cost in spec.cost_grid:
        for size in spec.sizes:
            tasks = [(spec, cost, size, i) for i in range(spec.iterations)]
            if jobs > 1:
                with ProcessPoolExecutor(max_workers=jobs) as pool:
                    rows = list(pool.map(_run_instance_args, tasks))
            else:
                rows = [_run_instance(*t) for t in tasks]
            rows.sort(key=lambda r: r.index)
            points.append(GridPointResult(cost.omega, cost.kappa,
                                          size.num_sfcs, size.users,
                                          spec.mode, rows))
    return ExperimentResult(spec, points)


def run_paired_comparison(spec: ExperimentSpec,
                          jobs: int = 1) -> tuple[ExperimentResult,
                                                  ExperimentResult]:
    """Same seeds under the resource-sharing and the baseline node model."""
    sharing = run_experiment(replace(spec, mode="sharing"), jobs)
    sota = run_experiment(replace(spec, mode="sota"), jobs)
    return sharing, sota


# -- CSV -----------------------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


# runtime stays out of the results file so identical specs produce
# byte-identical CSV; per-instance runtimes live in the audit file
RESULT_COLUMNS = ["omega", "kappa", "num_sfcs", "users", "mode",
                  "mean_active_nodes", "ci95_active_nodes",
                  "mean_latency_ms", "ci95_latency_ms",
                  "infeasible_pct"]

AUDIT_COLUMNS = ["omega", "kappa", "num_sfcs", "users", "mode", "instance",
                 "feasible", "active_nodes", "mean_latency_ms", "runtime_s"]


def emit_csv(result: ExperimentResult,
             filter_infeasible: float | None = None) -> str:
    """One row per grid point; deterministic bytes for identical specs.

    ``filter_infeasible`` drops points whose infeasibility percentage is
    at or above the given threshold (e.g. 20.0).
    """
    out = io.StringIO()
    out.write(",".join(RESULT_COLUMNS) + "\n")
    for p in result.points:
        if (filter_infeasible is not None
                and p.infeasible_pct >= filter_infeasible):
            continue
        row = [p.omega, p.kappa, p.num_sfcs, p.users, p.mode,
               p.mean_active, p.ci95_active, p.mean_latency, p.ci95_latency,
               p.infeasible_pct]
        out.write(",".join(_cell(v) for v in row) + "\n")
    return out.getvalue()


def emit_audit_csv(result: ExperimentResult) -> str:
    """One row per instance, for recomputing every aggregate downstream."""
    out = io.StringIO()
    out.write(",".join(AUDIT_COLUMNS) + "\n")
    for p in result.points:
        for r in p.instances:
            row = [p.omega, p.kappa, p.num_sfcs, p.users, p.mode, r.index,
                   r.feasible, r.active_nodes, r.mean_latency, r.runtime_s]
            out.write(",".join(_cell(v) for v in row) + "\n")
    return out.getvalue()


def emit_comparison_csv(sharing: ExperimentResult,
                        sota: ExperimentResult) -> str:
    """Paired per-point rows with deltas (sharing minus baseline)."""
    cols = ["omega", "kappa", "num_sfcs", "users",
            "sharing_mean_active", "sota_mean_active", "delta_active",
            "sharing_mean_latency_ms", "sota_mean_latency_ms",
            "delta_latency_ms"]
    out = io.StringIO()
    out.write(",".join(cols) + "\n")
    for a, b in zip(sharing.points, sota.points):
        d_active = (None if a.mean_active is None or b.mean_active is None
                    else a.mean_active - b.mean_active)
        d_lat = (None if a.mean_latency is None or b.mean_latency is None
                 else a.mean_latency - b.mean_latency)
        row = [a.omega, a.kappa, a.num_sfcs, a.users,
               a.mean_active, b.mean_active, d_active,
               a.mean_latency, b.mean_latency, d_lat]
        out.write(",".join(_cell(v) for v in row) + "\n")
    return out.getvalue()


# -- spec files ----------------------------------------------------------------

_SPEC_KEYS = {"kind", "template", "sizes", "cost_grid", "iterations", "seed",
              "cg_fraction", "mode", "h", "coupling_orientation",
              "sota_k", "sota_l", "allow_same_endpoints", "topology",
              "catalog"}


def load_experiment_spec(source, base_dir=None) -> ExperimentSpec:
    """Parse an experiment spec from YAML text, a dict, or a file path.

    Schema::

        kind: mixed
        sizes: [{num_sfcs: 3, users: 300}]
        cost_grid: [{omega: 0.0, kappa: 0.0}, {omega: 0.4, kappa: 0.0}]
        iterations: 100
        seed: 7
        mode: sharing
    """
    if isinstance(source, dict):
        doc = source
    else:
        text = source.read_text() if hasattr(source, "read_text") else str(source)
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed experiment spec: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("experiment spec must be a mapping")
    unknown = set(doc) - _SPEC_KEYS
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)} in experiment spec")
    try:
        sizes = tuple(LoadSize(int(s["num_sfcs"]), int(s["users"]))
                      for s in doc["sizes"])
        grid = tuple(CostSetting(float(g.get("omega", 0.0)),
                                 float(g.get("kappa", 0.0)))
                     for g in doc["cost_grid"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad sizes/cost_grid entry: {exc}") from exc
    topology = None
    if doc.get("topology"):
        path = doc["topology"]
        if base_dir is not None:
            path = base_dir / path
        topology = load_topology(open(path).read())
    catalog = None
    if doc.get("catalog"):
        path = doc["catalog"]
        if base_dir is not None:
            path = base_dir / path
        catalog = load_catalog(open(path).read())
    return ExperimentSpec(
        sizes=sizes,
        cost_grid=grid,
        iterations=int(doc.get("iterations", 100)),
        seed=int(doc.get("seed", 0)),
        kind=str(doc.get("kind", "mixed")),
        template=doc.get("template"),
        cg_fraction=(None if doc.get("cg_fraction") is None
                     else float(doc["cg_fraction"])),
        mode=str(doc.get("mode", "sharing")),
        h=float(doc.get("h", 0.01)),
        coupling_orientation=str(doc.get("coupling_orientation",
                                         "proc_from_lat")),
        sota_params=SotaParams(int(doc.get("sota_k", 100)),
                               float(doc.get("sota_l", 10.0))),
        allow_same_endpoints=bool(doc.get("allow_same_endpoints", True)),
        topology=topology,
        catalog=catalog,
    )
