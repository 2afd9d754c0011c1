"""Success ratio as the network grows and as queries get more sources.

Queries are released one after another while every active query keeps
meeting its deadline; the run ends when none does.  Takes about a minute.

Run: python demos/04_evaluation_trend.py [seeds]
"""

import sys
from dataclasses import replace

from rtcollect.scenario import TREND_CONFIG, mean_by_value, sweep

# Few seeds give a noisy curve; the trend settles around 20.
seeds = range(int(sys.argv[1]) if len(sys.argv) > 1 else 8)

rows = sweep(TREND_CONFIG, "node_count", [50, 100, 150, 200, 250], seeds)
print("network size -> mean success ratio")
for v, m in mean_by_value(rows):
    print(f"  {v:4d}  {m:.3f}  " + "#" * int(40 * m))

rows = sweep(replace(TREND_CONFIG, node_count=200), "source_count", [10, 40, 70, 100], seeds)
print("sources per query (200 nodes) -> mean success ratio")
for v, m in mean_by_value(rows):
    print(f"  {v:4d}  {m:.3f}  " + "#" * int(40 * m))
