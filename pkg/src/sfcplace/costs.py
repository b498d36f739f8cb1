"""Processing-resource sharing cost formulas.

Two penalty families are modeled per NFV node:

* context switching: latency and processing overhead linear in the total
  number of processes on the node, where each VNF instance sized at c
  cores contributes ceil(c) processes;
* upscaling: latency and processing overhead of load-balancing one
  instance across its ceil(c) cores.

A baseline utilization-only latency model (``sota_latency``) is also
provided for comparison runs; it is blind to how cores are split among
instances and saturates as utilization approaches 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from sfcplace.errors import SaturationError
from sfcplace.topology import PhysicalNode

# absolute slack applied before taking ceilings, so that allocations
# assembled from many float increments do not spuriously cross an
# integer boundary
CEIL_EPS = 1e-9

# node utilization at/above which the baseline latency model is treated
# as saturated (the formula diverges at utilization 1)
SOTA_P_CAP = 0.999

# VNF type id -> assigned cores on one node; entries are > 0 by
# convention (an absent entry means no instance)
Allocation = dict[str, float]


@dataclass(frozen=True)
class SotaParams:
    K: int = 100
    L: float = 10.0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if not self.L > 0:
            raise ValueError("L must be > 0")


def core_count(c: float) -> int:
    """Number of cores (= processes) an instance of size c occupies."""
    if c <= CEIL_EPS:
        return 0
    return math.ceil(c - CEIL_EPS)


def process_count(alloc: Allocation) -> int:
    """Total processes on a node across all hosted instances."""
    return sum(core_count(c) for c in alloc.values())


def csw_latency(alloc: Allocation, node: PhysicalNode) -> float:
    """Context-switching latency the node adds to every traversal, ms."""
    return process_count(alloc) * node.csw_latency


def csw_processing(alloc: Allocation, node: PhysicalNode) -> float:
    """Cores lost to context switching on the node."""
    return process_count(alloc) * node.csw_processing


def up_latency(c: float, node: PhysicalNode) -> float:
    """Load-balancing latency of one instance sized at c cores, ms."""
    return core_count(c) * node.up_latency


def up_processing(c: float, node: PhysicalNode) -> float:
    """Cores lost to load balancing for one instance sized at c cores."""
    return core_count(c) * node.up_processing


def node_processing_overhead(alloc: Allocation, node: PhysicalNode) -> float:
    """Total overhead cores on the node (context switching + upscaling)."""
    return csw_processing(alloc, node) + sum(
        up_processing(c, node) for c in alloc.values())


def residual_capacity(alloc: Allocation, node: PhysicalNode) -> float:
    """Cores still assignable: capacity minus overhead minus allocations."""
    return node.cores - node_processing_overhead(alloc, node) - sum(
        alloc.values())


def node_latency(alloc: Allocation, node: PhysicalNode, vnf_id: str) -> float:
    """Latency the node adds for a request served by instance ``vnf_id``.

    Context switching is paid against the whole node, upscaling against
    the one instance the request is mapped to.
    """
    return csw_latency(alloc, node) + up_latency(alloc.get(vnf_id, 0.0), node)


def utilization(alloc: Allocation, node: PhysicalNode) -> float:
    """Fraction of the node's cores assigned to instances."""
    return sum(alloc.values()) / node.cores


def sota_latency(alloc: Allocation, node: PhysicalNode,
                 params: SotaParams) -> float:
    """Baseline node latency as a function of utilization only, ms.

    Identical for every instance on the node.  Raises SaturationError
    when utilization reaches the saturation cap.
    """
    p = utilization(alloc, node)
    if p < 0:
        raise ValueError(f"negative utilization {p}")
    if p == 0:
        return 0.0
    if p >= SOTA_P_CAP:
        raise SaturationError(
            f"node {node.id} utilization {p:.6f} >= cap {SOTA_P_CAP}")
    k, L = params.K, params.L
    p_k = p ** k          # underflows harmlessly to 0 for small p
    p_k1 = p_k * p
    num = p - (1.0 + k * (1.0 - p)) * p_k1
    den = L * (1.0 - p) * (1.0 - p_k)
    return num / den
