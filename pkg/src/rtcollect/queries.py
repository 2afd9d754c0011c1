"""Periodic data-collection queries, load accounting and schedulability tests."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from . import netmodel as nm

# Liu-Layland limit n * (2^(1/n) - 1) as n grows, rounded as used throughout.
RM_LIMIT = 0.69


@dataclass(frozen=True)
class Query:
    id: int
    sources: frozenset
    chi: float
    period: float
    release: float = 0.0
    deadline: float = math.inf
    weight: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "sources", frozenset(self.sources))
        if not self.sources:
            raise ValueError(f"query {self.id} has no sources")
        if not (self.chi > 0 and self.period > 0 and self.deadline > 0 and self.weight > 0):
            raise ValueError(f"query {self.id}: chi, period, deadline and weight must be positive")
        if self.release < 0:
            raise ValueError(f"query {self.id}: release time must be >= 0")

    @property
    def rate(self) -> float:
        """Per-source load ``chi / period``."""
        return self.chi / self.period

    @property
    def load(self) -> float:
        """Load this query puts on the sink: ``|S| * chi / period``."""
        return len(self.sources) * self.rate

    def instance_release(self, t: int) -> float:
        return self.release + (t - 1) * self.period

    def instance_deadline(self, t: int) -> float:
        return self.release + (t - 1) * self.period + self.deadline


@dataclass(frozen=True)
class Verdict:
    ok: bool
    clause: str | None = None
    value: float | None = None
    limit: float | None = None
    region: nm.RegionIndex | None = None
    note: str | None = None

    def __bool__(self):
        return self.ok

    def __str__(self):
        if self.ok:
            return "PASS" + (f" ({self.note})" if self.note else "")
        if self.clause == "delay":
            return f"FAIL (deadline {self.value:.6g} < {self.limit:.6g})"
        where = f" ({self.region.v},{self.region.h})" if self.region is not None else ""
        return f"FAIL ({self.clause}{where} load {self.value:.6g} > {self.limit:.6g})"


@dataclass
class LoadMap:
    per_node: dict = field(default_factory=dict)
    per_region: dict = field(default_factory=dict)


def total_load(queries) -> float:
    return sum(q.load for q in queries)


def initial_load_node(node, queries) -> float:
    return sum(q.rate for q in queries if node in q.sources)


def initial_loads(net: nm.Network, queries, lam: float) -> LoadMap:
    """Initial loads of every node and every non-empty region."""
    lm = LoadMap()
    for q in queries:
        for s in q.sources:
            lm.per_node[s] = lm.per_node.get(s, 0.0) + q.rate
    regions = defaultdict(float)
    for u in net.ids:
        regions[nm.region_of(net.pos(u), lam)] += lm.per_node.get(u, 0.0)
    lm.per_region = dict(regions)
    return lm


def initial_load_region(region, queries, net: nm.Network, lam: float) -> float:
    return sum(initial_load_node(u, queries)
               for u in net.ids if nm.region_of(net.pos(u), lam) == region)


def relay_load_node(node, queries, trees) -> float:
    """Transmission demand of ``node``: data units it forwards per unit time.

    Every source in the subtree of ``node`` (itself included) sends one unit
    of ``chi`` per period through it.
    """
    total = 0.0
    for q in queries:
        tree = trees[q.id]
        if node in tree.members:
            total += tree.carried.get(node, 0) * q.rate
    return total


def relay_loads(net: nm.Network, queries, trees, lam: float) -> LoadMap:
    lm = LoadMap()
    for q in queries:
        tree = trees[q.id]
        for u, k in tree.carried.items():
            if k:
                lm.per_node[u] = lm.per_node.get(u, 0.0) + k * q.rate
    regions = defaultdict(float)
    for u in net.ids:
        regions[nm.region_of(net.pos(u), lam)] += lm.per_node.get(u, 0.0)
    lm.per_region = dict(regions)
    return lm


def necessary_condition(net: nm.Network, queries, model) -> Verdict:
    """Schedulable sets keep every region's initial load <= c1 and sink load <= 1."""
    queries = list(queries)
    lam = nm.interference_radius(model, net.tx_range)
    cap = nm.c1(model)
    lm = initial_loads(net, queries, lam)
    for region in sorted(lm.per_region):
        load = lm.per_region[region]
        if load > cap + 1e-12:
            return Verdict(False, "region", load, cap, region)
    sink_load = total_load(queries)
    if sink_load > 1 + 1e-12:
        return Verdict(False, "sink", sink_load, 1.0)
    return Verdict(True)


def sufficient_threshold(model) -> float:
    return RM_LIMIT / (nm.c2(model) * nm.c3(model))


def sufficient_condition(net: nm.Network, queries, model) -> Verdict:
    limit = sufficient_threshold(model)
    load = total_load(queries)
    if load > limit:
        return Verdict(False, "sufficient", load, limit)
    return Verdict(True)


@dataclass(frozen=True)
class DelayReport:
    radius: int
    bound: float
    verdicts: dict
    frame_shorter_than_period: bool

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())


def delay_feasible(net: nm.Network, queries, model, frame_t: float) -> DelayReport:
    """Check ``d_i >= c2 * T * 2R`` for every query, R the sink's hop eccentricity.

    Also flags frames with ``T <= max period``, which the analysis assumes away.
    """
    if not frame_t > 0:
        raise ValueError("frame_t must be positive")
    depth = net.hop_distances()
    if len(depth) != len(net.nodes):
        raise nm.NetworkError("network is disconnected")
    radius = max(depth.values())
    bound = nm.c2(model) * frame_t * 2 * radius
    verdicts = {}
    for q in queries:
        if q.deadline >= bound:
            verdicts[q.id] = Verdict(True)
        else:
            verdicts[q.id] = Verdict(False, "delay", q.deadline, bound)
    short = any(frame_t <= q.period for q in queries)
    return DelayReport(radius, bound, verdicts, short)


def rm_utilization_bound(n: int) -> float:
    if n < 1:
        raise ValueError("need at least one flow")
    return n * (2.0 ** (1.0 / n) - 1.0)
