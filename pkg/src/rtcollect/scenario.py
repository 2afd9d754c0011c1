"""Random scenarios, the evaluation flow, parameter sweeps and the tightness fixture."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import netmodel as nm
from .queries import Query, delay_feasible, relay_loads, initial_loads, total_load
from .routing import build_trees
from .sim import Metrics, Simulator


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    area: tuple = (400.0, 400.0)
    node_count: int = 100
    tx_range: float = 50.0
    model: object = field(default_factory=nm.RtsCts)
    frame_t: float | None = None  # default: 1.25 * longest period
    max_queries: int = 20
    buffer_limit: int | None = None
    source_mode: str = "random"  # random | fraction | count
    source_param: float = 0.5
    duration: float = 20000.0
    loss_scale: float = 0.0
    chi: float = 1.0
    chi_range: tuple | None = None  # draw chi uniformly from here instead
    period_range: tuple = (100.0, 200.0)
    deadline: float | None = None  # default: the delay bound c2 * T * 2R
    staggered: bool = True

    def __post_init__(self):
        if self.area[0] <= 0 or self.area[1] <= 0:
            raise ValueError("area dimensions must be positive")
        if self.node_count < 2:
            raise ValueError("need at least two nodes")
        if self.tx_range <= 0 or self.duration <= 0 or self.chi <= 0:
            raise ValueError("tx_range, duration and chi must be positive")
        if self.buffer_limit is not None and self.buffer_limit < 1:
            raise ValueError("buffer_limit must be >= 1")
        if self.source_mode not in ("random", "fraction", "count"):
            raise ValueError(f"unknown source_mode {self.source_mode!r}")
        lo, hi = self.period_range
        if not 0 < lo <= hi:
            raise ValueError("period_range must satisfy 0 < lo <= hi")
        if not 0 <= self.loss_scale < 1:
            raise ValueError("loss_scale must be in [0, 1)")
        if self.chi_range is not None and not 0 < self.chi_range[0] <= self.chi_range[1]:
            raise ValueError("chi_range must satisfy 0 < lo <= hi")
        if self.frame_t is not None and self.frame_t <= 0:
            raise ValueError("frame_t must be positive")

    @property
    def effective_frame_t(self) -> float:
        return self.frame_t if self.frame_t is not None else 1.25 * self.period_range[1]


def random_network(n, rng, area=(400.0, 400.0), tx_range=50.0) -> nm.Network:
    return nm.Network.from_positions(nm.random_connected_positions(n, rng, area, tx_range),
                                     sink=0, tx_range=tx_range)


def _pick_sources(net, cfg: SimConfig, rng):
    others = [u for u in net.ids if u != net.sink]
    if cfg.source_mode == "random":
        k = int(rng.integers(1, len(others) + 1))
    elif cfg.source_mode == "fraction":
        k = max(1, int(round(cfg.source_param * len(net.ids))))
    else:
        k = int(cfg.source_param)
    k = min(k, len(others))
    return frozenset(int(x) for x in rng.choice(others, size=k, replace=False))


def generate_queries(net: nm.Network, cfg: SimConfig, rng) -> list[Query]:
    """Up to ``max_queries`` queries drawn from the config's distributions."""
    lo, hi = cfg.period_range
    frame_t = cfg.effective_frame_t
    if cfg.deadline is None:
        deadline = nm.c2(cfg.model) * frame_t * 2 * max(1, net.sink_eccentricity())
    else:
        deadline = cfg.deadline
    out = []
    for i in range(cfg.max_queries):
        sources = _pick_sources(net, cfg, rng)
        period = float(rng.uniform(lo, hi))
        weight = float(rng.uniform(1.0, 10.0))
        chi = cfg.chi if cfg.chi_range is None else float(rng.uniform(*cfg.chi_range))
        out.append(Query(i, sources, chi, period, 0.0, deadline, weight))
    return out


def run_scenario(cfg: SimConfig, record_trace=False):
    """Topology, queries and simulation, all derived from ``cfg.seed``."""
    # Separate streams, so the same seed draws the same deployment prefix and
    # the same query parameters across a sweep (common random numbers).
    topo_rng, query_rng = (np.random.default_rng([cfg.seed, k]) for k in (0, 1))
    net = random_network(cfg.node_count, topo_rng, cfg.area, cfg.tx_range)
    queries = generate_queries(net, cfg, query_rng)
    sim = Simulator(net, queries, cfg.model, cfg.effective_frame_t,
                    buffer_limit=cfg.buffer_limit, loss_scale=cfg.loss_scale,
                    seed=cfg.seed, staggered=cfg.staggered,
                    max_queries=cfg.max_queries, record_trace=record_trace)
    return sim.run(cfg.duration)


# Settings of the evaluation-flow sweeps: chi varies per query so that the
# number of admitted queries changes smoothly with load, and the deadline is
# short next to the run so that steady-state rounds dominate.
TREND_CONFIG = SimConfig(chi_range=(0.25, 1.25), deadline=6000.0, duration=40000.0)

SWEEP_COLUMNS = ("parameter", "value", "seed", "node_count", "success_ratio", "rounds",
                 "drops", "offered_load", "queries_released")


def sweep(base: SimConfig, parameter: str, values, seeds, workers: int = 1) -> list[dict]:
    """One row per ``(value, seed)``, ordered by value then seed."""
    values, seeds = list(values), list(seeds)
    if not values or not seeds:
        raise ValueError("sweep needs at least one value and one seed")
    jobs = []
    for v in values:
        for s in seeds:
            if parameter == "source_count":
                cfg = replace(base, seed=s, source_mode="count", source_param=v)
            else:
                cfg = replace(base, seed=s, **{parameter: v})
            jobs.append((parameter, v, s, cfg))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as pool:
            metrics = list(pool.map(_run_metrics, [j[3] for j in jobs]))
    else:
        metrics = [_run_metrics(j[3]) for j in jobs]
    rows = []
    for (param, v, s, cfg), m in zip(jobs, metrics):
        rows.append({"parameter": param, "value": v, "seed": s, "node_count": cfg.node_count,
                     "success_ratio": m.success_ratio, "rounds": m.rounds, "drops": m.drops,
                     "offered_load": m.offered_load, "queries_released": m.queries_released})
    return rows


def _run_metrics(cfg) -> Metrics:
    return run_scenario(cfg).metrics


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def mean_by_value(rows) -> list[tuple]:
    acc = {}
    for r in rows:
        acc.setdefault(r["value"], []).append(r["success_ratio"])
    return [(v, float(np.mean(acc[v]))) for v in sorted(acc)]


# ---------------------------------------------------------------------------
# Tightness fixture


@dataclass
class TightnessFixture:
    network: nm.Network
    queries: list
    model: object
    region: nm.RegionIndex
    path: list

    def region_initial_load(self) -> float:
        lam = nm.interference_radius(self.model, self.network.tx_range)
        return initial_loads(self.network, self.queries, lam).per_region.get(self.region, 0.0)

    def region_relay_load(self) -> float:
        lam = nm.interference_radius(self.model, self.network.tx_range)
        trees = build_trees(self.network, self.queries, self.model)
        return relay_loads(self.network, self.queries, trees, lam).per_region.get(self.region, 0.0)

    def overloaded(self) -> bool:
        """Relay load of the region exceeds what c1 concurrent senders can carry."""
        return self.region_relay_load() > nm.c1(self.model)


def build_tightness_fixture(model, query_shapes=((3, 1.0, 1000.0), (2, 1.0, 500.0)),
                            eps=0.01) -> TightnessFixture:
    """Serpentine path of exactly ``c3`` nodes through region (0, 0).

    Columns of nodes ``eps`` more than one link apart, joined by bridge
    nodes, so the only route from the residual network (holding every
    source) to the sink runs through all ``c3`` region nodes.
    ``query_shapes`` lists ``(source count, chi, period)`` per query.

    Raises ``ValueError`` when the region cannot hold such a path, which is
    always the case under PrIM (``8 (rho+4)^2`` exceeds what a unit-disk
    shortest path can pack into a ``(1+rho)``-sided square).
    """
    if isinstance(model, nm.PhIM):
        link = model.shrink * model.max_radius
    else:
        link = 1.0
    lam = nm.interference_radius(model, link)
    need = nm.c3(model)
    y_lo, y_hi = 0.7 * link, lam - 0.7 * link
    if y_hi <= y_lo:
        raise ValueError("interference-aware region is too small for the fixture")
    m = math.ceil((y_hi - y_lo) / link) + 1
    step = (y_hi - y_lo) / (m - 1)
    if not step > 0.5 * link:
        raise ValueError("interference-aware region is too small for the fixture")
    gap = (1 + eps) * link
    extra_cols = max(0, math.ceil((need - m) / (m + 1)))
    first = need - extra_cols * (m + 1)
    n_cols = extra_cols + 1
    x0 = 0.5 * link
    if x0 + (n_cols - 1) * gap >= lam:
        raise ValueError(f"a {lam / link:.3g}-link region cannot hold a forced path of {need} nodes")

    rows = [y_lo + j * step for j in range(m)]
    pts, path = [], []

    def add(x, y):
        pts.append((x, y))
        return len(pts) - 1

    sink = add(x0 - 0.9 * link, rows[m - first])
    up = True
    for c in range(n_cols):
        x = x0 + c * gap
        col = rows[m - first:] if c == 0 else (rows if up else rows[::-1])
        for y in col:
            path.append(add(x, y))
        if c < n_cols - 1:
            by = rows[-1] + 0.5 * link if up else rows[0] - 0.5 * link
            path.append(add(x + gap / 2, by))
            up = not up
    # Residual network hangs off the far end of the last column.
    x_last = x0 + (n_cols - 1) * gap
    if up:
        exit_y, direction = rows[-1] + 0.8 * link, 1
    else:
        exit_y, direction = rows[0] - 0.8 * link, -1
    residual = [add(x_last, exit_y)]
    n_src = sum(k for k, _, _ in query_shapes)
    for j in range(1, n_src + 1):
        residual.append(add(x_last, exit_y + direction * 0.9 * link * j))

    net = nm.Network.from_positions(pts, sink=sink, tx_range=link)
    sources = residual[1:]
    queries, used = [], 0
    for i, (k, chi, period) in enumerate(query_shapes):
        queries.append(Query(i, frozenset(sources[used:used + k]), chi, period))
        used += k
    return TightnessFixture(net, queries, model, nm.RegionIndex(0, 0), path)


# ---------------------------------------------------------------------------
# Random instance families used by the acceptance checks


def sufficient_instance(rng, model=None, n=None, load_fraction=None, tx_range=50.0):
    """Random network and queries meeting both the load bound and the delay bound."""
    from .queries import sufficient_threshold
    model = model or nm.RtsCts()
    n = int(n or rng.integers(10, 41))
    net = random_network(n, rng, (400.0, 400.0), tx_range)
    limit = sufficient_threshold(model)
    target = limit * (load_fraction if load_fraction is not None else rng.uniform(0.3, 1.0))
    nq = int(rng.integers(1, 5))
    others = [u for u in net.ids if u != net.sink]
    raw = []
    for i in range(nq):
        k = int(rng.integers(1, min(len(others), 15) + 1))
        src = frozenset(int(x) for x in rng.choice(others, size=k, replace=False))
        chi = float(rng.uniform(0.5, 2.0))
        share = float(rng.uniform(0.5, 2.0))
        raw.append((src, chi, share))
    shares = sum(s for _, _, s in raw)
    specs = []
    for src, chi, share in raw:
        # query load |S| chi / p = target * share / shares
        period = len(src) * chi * shares / (target * share)
        specs.append((src, chi, period))
    frame_t = 1.25 * max(p for _, _, p in specs)
    bound = nm.c2(model) * frame_t * 2 * net.sink_eccentricity()
    queries = [Query(i, src, chi, p, float(rng.uniform(0, p)), bound, 1.0)
               for i, (src, chi, p) in enumerate(specs)]
    assert total_load(queries) <= limit * (1 + 1e-9)
    assert delay_feasible(net, queries, model, frame_t).ok
    return net, queries, frame_t
