"""Cost-aware placement of chained virtual network functions.

The package models an NFV-capable ISP network where hosting several
virtual network functions on the same multi-core node incurs context
switching and upscaling penalties, both in latency and in usable
processing capacity.  On top of that model it provides:

* a greedy two-phase consolidation heuristic (``sfcplace.heuristic``),
* an exportable mixed-integer linear model and a small-instance exact
  solver (``sfcplace.ilp``),
* an independent constraint validator for candidate embeddings
  (``sfcplace.embedding``),
* a seeded randomized experiment harness with CSV output
  (``sfcplace.harness``).
"""

from sfcplace.topology import (
    PhysicalNode,
    PhysicalLink,
    PhysicalNetwork,
    Path,
    load_topology,
    default_topology,
)
from sfcplace.catalog import (
    VnfType,
    SfcTemplate,
    SfcInstance,
    VnfRequest,
    Scenario,
    default_catalog,
    load_catalog,
    instantiate,
)
from sfcplace.embedding import Embedding, ValidationReport, validate
from sfcplace.heuristic import HcaConfig, HcaOutcome, run_hca
from sfcplace.ilp import build_model, export_lp, solve_exact

__all__ = [
    "PhysicalNode",
    "PhysicalLink",
    "PhysicalNetwork",
    "Path",
    "load_topology",
    "default_topology",
    "VnfType",
    "SfcTemplate",
    "SfcInstance",
    "VnfRequest",
    "Scenario",
    "default_catalog",
    "load_catalog",
    "instantiate",
    "Embedding",
    "ValidationReport",
    "validate",
    "HcaConfig",
    "HcaOutcome",
    "run_hca",
    "build_model",
    "export_lp",
    "solve_exact",
]
