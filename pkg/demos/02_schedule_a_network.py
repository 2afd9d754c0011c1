"""From a deployment to a frame: backbone, per-query trees, region colors, windows.

Run: python demos/02_schedule_a_network.py
"""

import numpy as np

from rtcollect import netmodel as nm
from rtcollect.queries import (Query, delay_feasible, necessary_condition, relay_loads,
                               sufficient_condition, total_load)
from rtcollect.routing import build_cds, build_trees
from rtcollect.scheduler import build_frame
from rtcollect.sim import interference_audit, simulate

rng = np.random.default_rng(42)
net = nm.Network.from_positions(nm.random_connected_positions(60, rng), sink=0, tx_range=50.0)
model = nm.RtsCts()
print(f"{len(net.nodes)} nodes, {len(net.links)} links, sink eccentricity {net.sink_eccentricity()} hops")

cds = build_cds(net)
print(f"CDS: {len(cds.dominators)} dominators + {len(cds.connectors)} connectors")

# Two light queries: loads far below the sufficient threshold.
queries = [Query(0, {7, 19, 33, 51}, 0.25, 5000.0), Query(1, {12, 40}, 0.5, 8000.0)]
frame_t = 1.25 * max(q.period for q in queries)
bound = nm.c2(model) * frame_t * 2 * net.sink_eccentricity()
queries = [Query(q.id, q.sources, q.chi, q.period, 0.0, bound) for q in queries]

print("total load", total_load(queries))
print("necessary:", necessary_condition(net, queries, model))
print("sufficient:", sufficient_condition(net, queries, model))
print("delay:", "PASS" if delay_feasible(net, queries, model, frame_t).ok else "FAIL")

trees = build_trees(net, queries, model)
for qid, tree in trees.items():
    print(f"query {qid}: {len(tree.members)} tree nodes, height {tree.height()}")

lam = nm.interference_radius(model, net.tx_range)
busiest = sorted(relay_loads(net, queries, trees, lam).per_region.items(), key=lambda kv: -kv[1])[:3]
print("busiest regions:", [(f"({g.v},{g.h})", round(v, 6)) for g, v in busiest])

frame = build_frame(net, queries, trees, model, frame_t)
print(f"frame length {frame.frame_length} = {frame.color_count} colors x T={frame_t}")
for color, v, h, u, start, dur in frame.records()[:8]:
    print(f"  color {color} region ({v},{h}) node {u:2d} sends in [{start:8.1f}, {start + dur:8.1f})")

res = simulate(net, queries, model, frame_t, 6 * bound)
print(res.metrics.to_text().splitlines()[0], "| rounds", res.metrics.rounds,
      "| audit violations", len(interference_audit(res.trace, net, model)))
