"""Walk through the shipped topology and its deterministic path queries."""

from sfcplace import default_topology

net = default_topology()
print(f"{len(net.nodes)} nodes, "
      f"{sum(1 for lk in net.links if not lk.is_self_loop)} directed links")
print(f"every node: {net.nodes[0].cores:.0f} cores "
      f"(self-loop for co-located chain hops)")

print("\nShortest paths from node 0:")
for target in (3, 6, 9):
    path = net.shortest_path(0, target)
    print(f"  0 -> {target}: {' -> '.join(map(str, path.nodes))}  "
          f"({path.total_latency:.1f} ms)")

print("\nFour cheapest loopless routes 0 -> 9:")
for path in net.k_shortest_paths(0, 9, 4):
    print(f"  {path.total_latency:5.1f} ms  {path.nodes}")

diameter = max(net.sp_latency(a.id, b.id)
               for a in net.nodes for b in net.nodes)
print(f"\nLatency diameter: {diameter:.1f} ms")
