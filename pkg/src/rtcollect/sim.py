"""Deterministic discrete-event simulation of the frame scheduler.

The event loop handles three kinds of events: frame starts (apply a pending
query activation and lay out the windows of the frame), node windows, and
round deadlines.  A node's window is processed as one batch: its children
never transmit while it does (a child sits in the same region, where nodes
take turns, or in an adjacent region, which has another color), so no
packet can reach a node during its own window.

Ties between events are broken by ``(time, node id, kind, sequence)``.
"""

from __future__ import annotations

import hashlib
import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import netmodel as nm
from .queries import Query
from .routing import build_cds, build_spanning_tree, prune_tree, reduced_graph
from .scheduler import TIME_EPS, Packet, TransmissionPlan, build_frame, time_le

_FRAME, _DEADLINE, _WINDOW = 0, 1, 2
_GLOBAL = -1


@dataclass(frozen=True)
class Transmission:
    start: float
    end: float
    sender: int
    receiver: int
    query_id: int
    instance: int
    source: int
    ok: bool = True


@dataclass(frozen=True)
class RoundRecord:
    query_id: int
    instance: int
    released_at: float
    deadline_at: float
    delivered: frozenset
    success: bool


@dataclass
class Metrics:
    rounds: int = 0
    successes: int = 0
    per_query: dict = field(default_factory=dict)
    drops: int = 0
    transmissions: int = 0
    max_latency: float = 0.0
    queries_released: int = 0
    offered_load: float = 0.0
    end_time: float = 0.0
    stopped_early: bool = False
    trace_hash: str = ""

    @property
    def success_ratio(self) -> float:
        return 1.0 if self.rounds == 0 else self.successes / self.rounds

    def to_text(self) -> str:
        lines = [
            f"success_ratio {self.success_ratio!r}",
            f"rounds {self.rounds}",
            f"successes {self.successes}",
            f"drops {self.drops}",
            f"transmissions {self.transmissions}",
            f"max_latency {self.max_latency!r}",
            f"queries_released {self.queries_released}",
            f"offered_load {self.offered_load!r}",
            f"end_time {self.end_time!r}",
            f"stopped_early {int(self.stopped_early)}",
            f"trace_hash {self.trace_hash}",
        ]
        for qid in sorted(self.per_query):
            n, ok = self.per_query[qid]
            ratio = 1.0 if n == 0 else ok / n
            lines.append(f"query {qid} rounds {n} successes {ok} success_ratio {ratio!r}")
        return "\n".join(lines) + "\n"


@dataclass
class SimResult:
    metrics: Metrics
    records: list
    trace: list
    network: nm.Network
    queries: list
    schedule: object = None


def success_ratio(records) -> float:
    records = list(records)
    if not records:
        return 1.0
    return sum(1 for r in records if r.success) / len(records)


class Simulator:
    """One run over a fixed topology.

    ``staggered=True`` follows the evaluation flow: the first query starts at
    time 0, the next one is activated (at the next frame boundary) once every
    active query's latest resolved round succeeded, and the run stops when
    every active query's latest round failed.  Otherwise all queries run
    from their own release times under a single static schedule.
    """

    def __init__(self, net: nm.Network, queries, model, frame_t, *, buffer_limit=None,
                 loss_scale=0.0, seed=0, staggered=False, max_queries=None, record_trace=True):
        if not frame_t > 0:
            raise ValueError("frame_t must be positive")
        if buffer_limit is not None and buffer_limit < 1:
            raise ValueError("buffer_limit must be >= 1")
        if not 0 <= loss_scale < 1:
            raise ValueError("loss_scale must be in [0, 1)")
        self.net = net
        self.model = model
        self.frame_t = frame_t
        self.loss_scale = loss_scale
        self.rng = np.random.default_rng(seed)
        self.staggered = staggered
        self.record_trace = record_trace
        self.pending = list(queries)
        if max_queries is not None:
            self.pending = self.pending[:max_queries]
        ids = [q.id for q in self.pending]
        if len(set(ids)) != len(ids):
            raise ValueError("query ids must be unique")
        routing_net = reduced_graph(net, model) if isinstance(model, nm.PhIM) else net
        self.spanning = build_spanning_tree(routing_net, build_cds(routing_net))
        self.active: list[Query] = []
        self.trees = {}
        self.schedule = None
        self.plans = {u: TransmissionPlan(u, limit=buffer_limit) for u in net.ids}
        self.inbox = {u: [] for u in net.ids}  # (time, seq, packet)
        self.streams = {u: [] for u in net.ids}  # [query, next instance]
        self.delivered = {}
        self.resolved = set()
        self.by_id = {}
        self.until = math.inf
        self.latest = {}
        self.records: list[RoundRecord] = []
        self.trace: list[Transmission] = []
        self.metrics = Metrics()
        self._hash = hashlib.sha256()
        self._events = []
        self._seq = 0
        self._activate_next = False
        self._stop = False

    # -- event plumbing -------------------------------------------------
    def _push(self, time, node, kind, payload=None):
        self._seq += 1
        heapq.heappush(self._events, (time, node, kind, self._seq, payload))

    def _log(self, line: str):
        self._hash.update(line.encode())
        self._hash.update(b"\n")

    # -- query lifecycle --------------------------------------------------
    def _activate(self, query: Query, at: float | None = None):
        if at is not None:
            query = Query(query.id, query.sources, query.chi, query.period, at,
                          query.deadline, query.weight)
        self.active.append(query)
        self.by_id[query.id] = query
        self.trees[query.id] = prune_tree(self.spanning, query)
        self.latest[query.id] = None
        self.metrics.queries_released += 1
        self.metrics.per_query[query.id] = (0, 0)
        for s in sorted(query.sources):
            self.streams[s].append([query, 1])
        self._push(query.instance_deadline(1), _GLOBAL, _DEADLINE, (query, 1))
        self._log(f"activate {query.id} {query.release!r}")

    def _rebuild(self):
        self.schedule = build_frame(self.net, self.active, self.trees, self.model, self.frame_t)

    # -- packet movement --------------------------------------------------
    def _collect(self, u, upto):
        """Move everything generated at or delivered to ``u`` by ``upto`` into its buffer."""
        incoming = [(t, 0, seq, pkt) for t, seq, pkt in self.inbox[u] if time_le(t, upto)]
        if incoming:
            self.inbox[u] = [e for e in self.inbox[u] if not time_le(e[0], upto)]
        for stream in self.streams[u]:
            q, t = stream
            while time_le(q.instance_release(t), upto):
                rel = q.instance_release(t)
                pkt = Packet(q.id, t, u, rel, q.instance_deadline(t), q.period, q.chi)
                incoming.append((rel, 1, q.id, pkt))
                t += 1
            stream[1] = t
        incoming.sort(key=lambda e: (e[0], e[1], e[2], e[3].instance, e[3].source))
        for _, _, _, pkt in incoming:
            if u == self.net.sink:
                self._deliver(pkt, pkt.created_at)
            elif not self.plans[u].push(pkt):
                self.metrics.drops += 1
                self._log(f"drop {u} {pkt.query_id} {pkt.instance} {pkt.source}")

    def _next_generation(self, u):
        times = [s[0].instance_release(s[1]) for s in self.streams[u]]
        return min(times, default=math.inf)

    def _deliver(self, pkt: Packet, when: float):
        key = (pkt.query_id, pkt.instance)
        if key in self.resolved:
            return
        got = self.delivered.setdefault(key, {})
        got.setdefault(pkt.source, when)
        self.metrics.max_latency = max(self.metrics.max_latency, when - pkt.created_at)
        self._log(f"rx {when!r} {pkt.query_id} {pkt.instance} {pkt.source}")
        query = self.by_id[pkt.query_id]
        if self.net.sink in query.sources:
            got.setdefault(self.net.sink, pkt.created_at)
        if (len(got) == len(query.sources) and time_le(when, pkt.deadline_at)
                and time_le(pkt.deadline_at, self.until)):
            # Complete before its deadline: the round is known to succeed now.
            self._resolve(query, pkt.instance, when)

    def _run_window(self, u, start, end):
        plan = self.plans[u]
        parent = self.spanning.parent[u]
        dist = self.net.dist(u, parent)
        p_ok = 1.0 - (dist / self.net.tx_range) * self.loss_scale
        t = start
        self._collect(u, t)
        nxt = self._next_generation(u)
        while True:
            if time_le(nxt, t):
                self._collect(u, t)
                nxt = self._next_generation(u)
            pkt = plan.head(t, end - t)
            if pkt is None:
                if t < nxt < end:
                    t = nxt
                    continue
                return
            finish = t + pkt.chi
            ok = True if self.loss_scale == 0 else bool(self.rng.random() < p_ok)
            tx = Transmission(t, finish, u, parent, pkt.query_id, pkt.instance, pkt.source, ok)
            self.metrics.transmissions += 1
            if self.record_trace:
                self.trace.append(tx)
            self._log(f"tx {t!r} {finish!r} {u} {parent} {pkt.query_id} {pkt.instance} {pkt.source} {int(ok)}")
            if ok:
                plan.pop(pkt)
                if parent == self.net.sink:
                    self._deliver(pkt, finish)
                else:
                    self._seq += 1
                    self.inbox[parent].append((finish, self._seq, pkt))
            t = finish

    # -- rounds -----------------------------------------------------------
    def _resolve(self, query: Query, t: int, now: float):
        if (query.id, t) in self.resolved:
            return
        self.resolved.add((query.id, t))
        if now >= query.instance_deadline(t) - TIME_EPS:
            self._collect(self.net.sink, now)  # the sink's own readings
        got = self.delivered.pop((query.id, t), {})
        deadline = query.instance_deadline(t)
        on_time = frozenset(s for s, when in got.items() if time_le(when, deadline))
        success = on_time == query.sources
        rec = RoundRecord(query.id, t, query.instance_release(t), deadline, on_time, success)
        self.records.append(rec)
        n, ok = self.metrics.per_query[query.id]
        self.metrics.per_query[query.id] = (n + 1, ok + int(success))
        self.metrics.rounds += 1
        self.metrics.successes += int(success)
        self.latest[query.id] = success
        self._log(f"round {query.id} {t} {int(success)}")
        if not self.staggered:
            return
        states = [self.latest[q.id] for q in self.active]
        if all(s is False for s in states):
            self._stop = True
            self.metrics.stopped_early = True
        elif self.pending and not self._activate_next and all(s is True for s in states):
            self._activate_next = True

    # -- main loop ----------------------------------------------------------
    def run(self, until: float) -> SimResult:
        self.until = until
        if self.staggered:
            if self.pending:
                self._activate(self.pending.pop(0), at=0.0)
        else:
            for q in self.pending:
                self._activate(q)
            self.pending = []
        self.metrics.offered_load = sum(q.load for q in self.active)
        self._rebuild()
        self._push(0.0, _GLOBAL, _FRAME)
        while self._events and not self._stop:
            time, node, kind, _, payload = heapq.heappop(self._events)
            if time > until + TIME_EPS:
                break
            if kind == _FRAME:
                if self._activate_next and self.pending:
                    self._activate(self.pending.pop(0), at=time)
                    self._activate_next = False
                    self.metrics.offered_load = sum(q.load for q in self.active)
                    self._rebuild()
                for w in self.schedule.windows(time):
                    self._push(w.start, w.node, _WINDOW, w.end)
                self._push(time + self.schedule.frame_length, _GLOBAL, _FRAME)
            elif kind == _WINDOW:
                self._run_window(node, time, payload)
            else:
                query, t = payload
                self._resolve(query, t, time)
                nxt = query.instance_deadline(t + 1)
                if nxt <= until + TIME_EPS:
                    self._push(nxt, _GLOBAL, _DEADLINE, (query, t + 1))
            self.metrics.end_time = time
        self.metrics.trace_hash = self._hash.hexdigest()
        return SimResult(self.metrics, self.records, self.trace, self.net,
                         list(self.active), self.schedule)


def simulate(net, queries, model, frame_t, until, **kw) -> SimResult:
    return Simulator(net, queries, model, frame_t, **kw).run(until)


# ---------------------------------------------------------------------------
# Interference audit


@dataclass(frozen=True)
class Violation:
    time: float
    links: tuple
    reason: str
    value: Optional[float] = None


def interference_audit(trace, net: nm.Network, model) -> list[Violation]:
    """Check every set of simultaneously active links.

    Pairs of overlapping transmissions must not conflict under ``model``;
    under PhIM each active link must also keep its cumulative SINR >= beta.
    """
    txs = sorted(trace, key=lambda x: (x.start, x.sender))
    positions = {u: net.pos(u) for u in net.ids}
    out, active = [], []
    for tx in txs:
        active = [a for a in active if a.end > tx.start + TIME_EPS * max(1.0, abs(tx.start))]
        link = (tx.sender, tx.receiver)
        for a in active:
            other = (a.sender, a.receiver)
            if nm.conflicts(other, link, model, net.tx_range, positions):
                out.append(Violation(tx.start, (other, link), "conflict"))
        active.append(tx)
        if isinstance(model, nm.PhIM) and len(active) > 1:
            senders = [a.sender for a in active]
            for a in active:
                if a.receiver in senders:
                    continue  # already reported as a shared-endpoint conflict
                ratio = nm.sinr(senders, a.sender, a.receiver, model, positions)
                if ratio < model.beta * (1 - 1e-12):
                    out.append(Violation(tx.start, ((a.sender, a.receiver),), "sinr", ratio))
    return out


def region_overlap_audit(trace, schedule) -> list[Violation]:
    """Transmissions that leave their node's window or overlap inside a region.

    Only meaningful for runs whose schedule never changed (no staggered
    query activation).
    """
    out = []
    by_region = {}
    length = schedule.frame_length
    for tx in trace:
        w = schedule.window(tx.sender, math.floor(tx.start / length + TIME_EPS) * length)
        if w is None or not (time_le(w.start, tx.start) and time_le(tx.end, w.end)):
            out.append(Violation(tx.start, ((tx.sender, tx.receiver),), "window"))
        by_region.setdefault(schedule.node_region[tx.sender], []).append(tx)
    for txs in by_region.values():
        txs.sort(key=lambda x: (x.start, x.sender))
        for a, b in zip(txs, txs[1:]):
            if b.start < a.end - TIME_EPS * max(1.0, abs(a.end)):
                out.append(Violation(b.start, ((a.sender, a.receiver), (b.sender, b.receiver)), "region"))
    return out
