"""Overloaded networks: which queries to admit.

Run: python demos/03_query_selection.py
"""

import numpy as np

from rtcollect import netmodel as nm
from rtcollect.queries import Query, sufficient_threshold
from rtcollect.selection import approximation_check, select_queries

model = nm.RtsCts()
d = sufficient_threshold(model)
print(f"packing capacity d = {d:.3e}")

# One big, valuable query and many small ones.
big = Query(0, {1}, 0.9, 1.0, weight=100.0)
small = [Query(i, {1}, d / 10, 1.0, weight=5.0) for i in range(1, 11)]
sel = select_queries([big] + small, model)
print(f"chosen {sel.ids} ({sel.phase}), weight {sel.weight}; packing alone gives {sel.packed.weight}")

# Random instances against the exhaustive optimum of the unit knapsack.
rng = np.random.default_rng(1)
ratios = []
for _ in range(100):
    n = int(rng.integers(2, 14))
    sizes = np.exp(rng.uniform(np.log(d / 20), np.log(1.2), n))
    qs = [Query(i, {1}, float(s), 1.0, weight=float(w))
          for i, (s, w) in enumerate(zip(sizes, rng.uniform(1, 10, n)))]
    ratios.append(approximation_check(qs, model).ratio)
ratios = np.array(ratios)
print(f"w(A)/OPT over 100 instances: min {ratios.min():.3f}, median {np.median(ratios):.3f}; "
      f"guarantee d/2 = {d / 2:.2e}")
