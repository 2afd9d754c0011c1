"""Interference models and the constants the schedulability tests are built on.

Run: python demos/01_constants.py
"""

import numpy as np

from rtcollect import netmodel as nm

models = {
    "PrIM rho=2": nm.PrIM(2.0),
    "PrIM rho=3.5": nm.PrIM(3.5),
    "RTS/CTS": nm.RtsCts(),
    "PhIM P/N0=100, kappa=4": nm.PhIM(100.0, 1.0, 2.0, 4.0),
}

print(f"{'model':26s} {'lambda':>8s} {'c1':>6s} {'c2':>4s} {'K':>3s} {'c3':>5s}")
for name, m in models.items():
    lam = nm.interference_radius(m, 1.0)
    print(f"{name:26s} {lam:8.3f} {nm.c1(m):6d} {nm.c2(m):4d} {nm.k_factor(m):3d} {nm.c3(m):5d}")

# The PhIM color count comes from a bound on the interference summed over
# rings of same-colored regions.  It drops fast as regions spread out.
m = models["PhIM P/N0=100, kappa=4"]
budget = (m.shrink ** -m.kappa - 1) / m.beta
for k in range(2, 7):
    bound = nm.phim_interference_bound(m, k)
    print(f"K={k}: interference bound {bound:8.4f}  budget {budget:.4f}  {'ok' if bound <= budget else '-'}")

# Lambda really is the largest sender distance at which two links collide.
rng = np.random.default_rng(0)
m, lam = nm.PrIM(2.0), 3.0
far = 0.0
for _ in range(5000):
    s1, s2 = rng.uniform(-3, 3, 2), rng.uniform(-3, 3, 2)
    a1, a2 = rng.uniform(0, 2 * np.pi, 2)
    l1 = (tuple(s1), (s1[0] + np.cos(a1), s1[1] + np.sin(a1)))
    l2 = (tuple(s2), (s2[0] + np.cos(a2), s2[1] + np.sin(a2)))
    if nm.conflicts(l1, l2, m, 1.0):
        far = max(far, float(np.hypot(*(s1 - s2))))
print(f"farthest conflicting senders in 5000 random pairs: {far:.3f} (lambda = {lam})")
