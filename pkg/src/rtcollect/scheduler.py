"""Interference-aware node scheduling and rate-monotonic packet selection.

A frame lasts ``c2 * T``.  Regions get one of ``c2 = K^2`` colors from their
grid index, color ``k`` is active during ``[k*T, (k+1)*T)`` of every frame,
and inside an active region the nodes transmit one after another, each for
a share of ``T`` proportional to its relay load.
"""

from __future__ import annotations

import heapq
import math
from collections import defaultdict
from dataclasses import dataclass, field

from . import netmodel as nm
from .queries import relay_loads

TIME_EPS = 1e-9


def time_le(a: float, b: float) -> bool:
    """``a <= b`` up to a magnitude-relative tolerance."""
    return a <= b + TIME_EPS * (1.0 + abs(b))


def region_color(region: nm.RegionIndex, k: int) -> int:
    # Python's % is already non-negative for positive k.
    return (region.v % k) * k + (region.h % k)


def color_regions(regions, model) -> dict:
    k = nm.k_factor(model)
    return {g: region_color(g, k) for g in regions}


def assign_times(loads: dict, frame_t: float) -> dict:
    """Split ``frame_t`` among nodes of one region in proportion to ``loads``."""
    if not frame_t > 0:
        raise ValueError("frame_t must be positive")
    total = sum(loads.values())
    if total <= 0:
        return {u: 0.0 for u in loads}
    return {u: frame_t * load / total for u, load in loads.items()}


@dataclass(frozen=True)
class Window:
    node: int
    start: float
    end: float


@dataclass
class FrameSchedule:
    frame_t: float
    color_count: int
    region_colors: dict
    allotments: dict
    offsets: dict = field(default_factory=dict)
    node_region: dict = field(default_factory=dict)

    @property
    def frame_length(self) -> float:
        return self.color_count * self.frame_t

    def window(self, node, frame_start: float) -> Window | None:
        """Absolute transmission window of ``node`` in the frame starting at ``frame_start``."""
        dur = self.allotments.get(node, 0.0)
        if dur <= 0:
            return None
        start = frame_start + self.offsets[node]
        return Window(node, start, start + dur)

    def windows(self, frame_start: float) -> list[Window]:
        out = [self.window(u, frame_start) for u in self.allotments]
        out = [w for w in out if w is not None]
        out.sort(key=lambda w: (w.start, w.node))
        return out

    def records(self):
        """``(color, v, h, node, start_offset, duration)`` rows in frame order."""
        rows = []
        for u, dur in self.allotments.items():
            if dur > 0:
                g = self.node_region[u]
                rows.append((self.region_colors[g], g.v, g.h, u, self.offsets[u], dur))
        rows.sort(key=lambda r: (r[4], r[3]))
        return rows


def build_frame(net: nm.Network, queries, trees, model, frame_t: float) -> FrameSchedule:
    """Color the occupied regions and lay out every node's window in a frame.

    The sink only receives, so it gets no transmission time.  Nodes of a
    region transmit in ascending id order.
    """
    if not frame_t > 0:
        raise ValueError("frame_t must be positive")
    lam = nm.interference_radius(model, net.tx_range)
    k = nm.k_factor(model)
    count = nm.c2(model)
    loads = relay_loads(net, list(queries), trees, lam).per_node

    members = defaultdict(list)
    node_region = {}
    for u in net.ids:
        g = nm.region_of(net.pos(u), lam)
        node_region[u] = g
        members[g].append(u)
    colors = {g: region_color(g, k) for g in members}

    allotments, offsets = {}, {}
    for g in sorted(members):
        nodes = sorted(u for u in members[g] if u != net.sink)
        shares = assign_times({u: loads.get(u, 0.0) for u in nodes}, frame_t)
        t = colors[g] * frame_t
        for u in nodes:
            allotments[u] = shares[u]
            offsets[u] = t
            t += shares[u]
    if net.sink not in allotments:
        allotments[net.sink] = 0.0
        offsets[net.sink] = colors[node_region[net.sink]] * frame_t
    return FrameSchedule(frame_t, count, colors, allotments, offsets, node_region)


@dataclass(frozen=True)
class Packet:
    query_id: int
    instance: int
    source: int
    created_at: float
    deadline_at: float
    period: float
    chi: float

    def is_current(self, now: float) -> bool:
        """Produced during the period window that contains ``now``."""
        return self.created_at <= now + TIME_EPS and now < self.created_at + self.period - TIME_EPS


def rm_key(pkt: Packet, now: float) -> tuple:
    """Sort key, smaller is more urgent.

    Previous-period packets beat current ones; then shorter period, query
    id, and FIFO on creation time within a query.
    """
    return (1 if pkt.is_current(now) else 0, pkt.period, pkt.query_id,
            pkt.created_at, pkt.instance, pkt.source)


def rm_compare(a: Packet, b: Packet, now: float) -> int:
    ka, kb = rm_key(a, now), rm_key(b, now)
    return (ka > kb) - (ka < kb)


class TransmissionPlan:
    """Buffered packets of one node, one FIFO heap per query."""

    def __init__(self, node, entries=(), limit=None):
        self.node = node
        self.entries = {q.id: q for q in entries}
        self.limit = limit
        self._heaps = defaultdict(list)
        self._size = 0

    def __len__(self):
        return self._size

    def push(self, pkt: Packet) -> bool:
        """Buffer ``pkt``; False (packet dropped) if the buffer is full."""
        if self.limit is not None and self._size >= self.limit:
            return False
        heapq.heappush(self._heaps[pkt.query_id],
                       (pkt.created_at, pkt.instance, pkt.source, pkt))
        self._size += 1
        return True

    def packets(self) -> list[Packet]:
        return [item[-1] for h in self._heaps.values() for item in h]

    def head(self, now: float, remaining: float = math.inf) -> Packet | None:
        best, best_key = None, None
        for heap in self._heaps.values():
            if not heap:
                continue
            pkt = heap[0][-1]
            # All packets of a query share chi: if the head does not fit, none does.
            if not time_le(pkt.chi, remaining):
                continue
            key = rm_key(pkt, now)
            if best_key is None or key < best_key:
                best, best_key = pkt, key
        return best

    def pop(self, pkt: Packet) -> None:
        heap = self._heaps[pkt.query_id]
        if not heap or heap[0][-1] is not pkt:
            raise ValueError("can only pop the head packet of a query")
        heapq.heappop(heap)
        self._size -= 1


def next_transmission(plan: TransmissionPlan, now: float, remaining: float) -> Packet | None:
    """Most urgent buffered packet that fits in ``remaining``; None means idle."""
    return plan.head(now, remaining)


@dataclass(frozen=True)
class RmReport:
    sent: int
    misses: int
    busy: float


def rm_replay(flows, frame: int, allotment: int, periods: int = 1000) -> RmReport:
    """Replay rate-monotonic packet selection on a single node.

    ``flows`` holds ``(packets, period)`` pairs: every ``period`` the flow
    releases ``packets`` unit-length packets, each due by the next release.
    The node may send during ``[j*frame, j*frame + allotment)`` of every
    frame ``j``.  Periods must be multiples of ``frame`` and times are whole
    slots, so the non-preemptive plan behaves like a preemptive processor
    running ``allotment`` slots per frame.  Runs ``periods`` periods of the
    longest flow.
    """
    if not 0 < allotment <= frame:
        raise ValueError("need 0 < allotment <= frame")
    for count, period in flows:
        if count < 1 or period % frame:
            raise ValueError("each flow needs >= 1 packet and a period that is a multiple of frame")
    horizon = periods * max(p for _, p in flows)
    plan = TransmissionPlan(0)
    releases = sorted((k * p, qid, count, p) for qid, (count, p) in enumerate(flows)
                      for k in range(horizon // p))
    nxt, sent, misses = 0, 0, 0
    for start in range(0, horizon, frame):
        while nxt < len(releases) and releases[nxt][0] <= start:
            rel, qid, count, p = releases[nxt]
            for src in range(count):
                plan.push(Packet(qid, rel // p + 1, src, float(rel), float(rel + p), float(p), 1.0))
            nxt += 1
        for slot in range(start, start + allotment):
            pkt = plan.head(float(slot), float(start + allotment - slot))
            if pkt is None:
                break
            plan.pop(pkt)
            sent += 1
            misses += int(slot + 1 > pkt.deadline_at)
    misses += len(plan)  # never sent at all
    return RmReport(sent, misses, sent / horizon)
