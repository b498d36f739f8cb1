"""Embed a handful of service chains and inspect the result.

Runs the two-phase heuristic on the shipped topology with moderate cost
parameters, prints where every chain landed, and re-checks the embedding
with the independent validator.
"""

from sfcplace import Scenario, default_catalog, default_topology, run_hca
from sfcplace.catalog import instantiate
from sfcplace.embedding import validate

net = default_topology(omega=0.4, kappa=1.75)
cat = default_catalog()
sfcs = tuple(
    instantiate(cat, name, start, end, users, sfc_id=i)
    for i, (name, start, end, users) in enumerate([
        ("WebService", 0, 9, 300),
        ("VoIP", 2, 7, 300),
        ("CloudGaming", 4, 8, 150),
    ]))
scenario = Scenario(net, cat, sfcs)

outcome = run_hca(scenario)
print(f"status: {outcome.status}, active nodes: {outcome.active_nodes}")
for sfc in sfcs:
    hosts = [outcome.embedding.request_map[(sfc.id, r.position)]
             for r in sfc.requests]
    print(f"  {sfc.template.name:>14} {sfc.start}->{sfc.end}: "
          f"requests on {hosts}, "
          f"{outcome.per_sfc_latency[sfc.id]:6.2f} / "
          f"{sfc.max_latency:.0f} ms")

print("\nPer-node allocations:")
for node_id, alloc in sorted(outcome.embedding.allocations.items()):
    pretty = ", ".join(f"{f}={c:.3f}" for f, c in sorted(alloc.items()))
    print(f"  node {node_id}: {pretty}")

print(f"\nindependent validator: {validate(outcome.embedding, scenario)}")
