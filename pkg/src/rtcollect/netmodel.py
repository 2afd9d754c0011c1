"""Geometric network model, interference predicates and model constants.

Nodes live in the plane; two nodes share a link when they are within the
transmission range of each other.  Three interference models are supported:

* ``PrIM``   protocol model with interference range ``rho * tx_range``
* ``RtsCts`` RTS/CTS handshake model, every endpoint silences a disk
* ``PhIM``   physical (SINR) model with power ``P``, noise ``N0``,
  threshold ``beta`` and path-loss exponent ``kappa``

The plane is cut into square interference-aware regions of side ``lam``
(the interference radius of the model); region ``(v, h)`` is the half-open
cell ``[v*lam, (v+1)*lam) x [h*lam, (h+1)*lam)``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Union

import numpy as np


class NetworkError(ValueError):
    """Raised for malformed or disconnected topologies."""


@dataclass(frozen=True)
class Node:
    id: int
    pos: tuple[float, float]

    def __post_init__(self):
        if not all(math.isfinite(c) for c in self.pos):
            raise NetworkError(f"node {self.id} has a non-finite position {self.pos}")


@dataclass(frozen=True)
class PrIM:
    rho: float = 2.0

    def __post_init__(self):
        if not self.rho > 1:
            raise ValueError(f"PrIM needs rho > 1, got {self.rho}")


@dataclass(frozen=True)
class RtsCts:
    # Interference range as a multiple of tx_range.
    interference: float = 1.0

    def __post_init__(self):
        if not self.interference > 0:
            raise ValueError("RtsCts interference range must be positive")


@dataclass(frozen=True)
class PhIM:
    power: float = 1.0
    noise: float = 0.01
    beta: float = 2.0
    kappa: float = 4.0
    # Routing trees only use links up to shrink * max_radius (reduced graph).
    shrink: float = 0.7

    def __post_init__(self):
        if not (self.power > 0 and self.noise > 0 and self.beta > 0):
            raise ValueError("PhIM needs power, noise and beta > 0")
        if not self.kappa > 0:
            raise ValueError(f"PhIM needs kappa > 0, got {self.kappa}")
        if not 0 < self.shrink <= 1:
            raise ValueError("PhIM shrink factor must be in (0, 1]")

    @property
    def max_radius(self) -> float:
        """Largest sender-receiver distance reachable with no interference."""
        return (self.power / (self.noise * self.beta)) ** (1.0 / self.kappa)

    @classmethod
    def for_range(cls, tx_range, beta=2.0, kappa=4.0, noise=1.0, shrink=0.7):
        """Pick the power so that ``shrink * max_radius == tx_range``."""
        r = tx_range / shrink
        return cls(power=noise * beta * r**kappa, noise=noise, beta=beta,
                   kappa=kappa, shrink=shrink)


Model = Union[PrIM, RtsCts, PhIM]


def distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def build_links(nodes: list[Node], tx_range: float) -> frozenset[tuple[int, int]]:
    """All unordered pairs ``(i, j)`` with ``i < j`` at distance <= ``tx_range``."""
    if len(nodes) < 2:
        raise NetworkError("need at least two nodes to build links")
    ids = np.array([n.id for n in nodes])
    xy = np.array([n.pos for n in nodes], dtype=float)
    d = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1])
    ii, jj = np.nonzero(np.triu(d <= tx_range, k=1))
    links = set()
    for a, b in zip(ids[ii].tolist(), ids[jj].tolist()):
        links.add((a, b) if a < b else (b, a))
    return frozenset(links)


def _components(ids, adj) -> list[list[int]]:
    seen, comps = set(), []
    for s in sorted(ids):
        if s in seen:
            continue
        comp, queue = [], deque([s])
        seen.add(s)
        while queue:
            u = queue.popleft()
            comp.append(u)
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        comps.append(sorted(comp))
    return comps


@dataclass(frozen=True)
class Network:
    """Immutable communication graph with a distinguished sink.

    ``links`` defaults to the unit-disk links at ``tx_range``.  Construction
    fails if the graph is disconnected.
    """

    nodes: tuple[Node, ...]
    sink: int
    tx_range: float
    links: frozenset = None
    _adj: dict = field(default=None, init=False, repr=False, compare=False)
    _pos: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if not self.tx_range > 0:
            raise NetworkError("tx_range must be positive")
        ids = [n.id for n in nodes]
        if len(set(ids)) != len(ids):
            raise NetworkError("node ids must be unique")
        pos = {n.id: n.pos for n in nodes}
        if self.sink not in pos:
            raise NetworkError(f"sink {self.sink} is not a node")
        if self.links is None:
            links = build_links(nodes, self.tx_range) if len(nodes) > 1 else frozenset()
        else:
            links = frozenset((a, b) if a < b else (b, a) for a, b in self.links)
            for a, b in links:
                if a not in pos or b not in pos:
                    raise NetworkError(f"link ({a}, {b}) references an unknown node")
                if distance(pos[a], pos[b]) > self.tx_range * (1 + 1e-12):
                    raise NetworkError(f"link ({a}, {b}) is longer than tx_range")
        object.__setattr__(self, "links", links)
        adj = {i: [] for i in ids}
        for a, b in links:
            adj[a].append(b)
            adj[b].append(a)
        adj = {i: tuple(sorted(v)) for i, v in adj.items()}
        comps = _components(ids, adj)
        if len(comps) > 1:
            shown = "; ".join(str(c[:8]) + ("..." if len(c) > 8 else "") for c in comps[:5])
            raise NetworkError(f"communication graph is disconnected: {len(comps)} components: {shown}")
        object.__setattr__(self, "_adj", adj)
        object.__setattr__(self, "_pos", pos)

    @classmethod
    def from_positions(cls, positions, sink=0, tx_range=1.0, links=None):
        nodes = tuple(Node(i, (float(x), float(y))) for i, (x, y) in enumerate(positions))
        return cls(nodes, sink, tx_range, links)

    @property
    def ids(self) -> list[int]:
        return [n.id for n in self.nodes]

    def pos(self, node_id) -> tuple[float, float]:
        return self._pos[node_id]

    def neighbors(self, node_id) -> tuple[int, ...]:
        return self._adj[node_id]

    def dist(self, a, b) -> float:
        return distance(self._pos[a], self._pos[b])

    def hop_distances(self, source=None) -> dict[int, int]:
        """BFS hop count from ``source`` (default: the sink)."""
        source = self.sink if source is None else source
        depth = {source: 0}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for w in self._adj[u]:
                if w not in depth:
                    depth[w] = depth[u] + 1
                    queue.append(w)
        return depth

    def sink_eccentricity(self) -> int:
        return max(self.hop_distances().values())


@dataclass(frozen=True, order=True)
class RegionIndex:
    v: int
    h: int


def region_of(pos, lam: float) -> RegionIndex:
    if not lam > 0:
        raise ValueError("region side must be positive")
    return RegionIndex(math.floor(pos[0] / lam), math.floor(pos[1] / lam))


def interference_radius(model: Model, tx_range: float) -> float:
    """Sender-to-sender distance beyond which two links never interfere.

    PrIM: a receiver sits within ``tx_range`` of its sender, so senders more
    than ``tx_range * (1 + rho)`` apart keep every receiver outside the other
    sender's interference disk.  RtsCts: endpoints are within ``tx_range`` of
    their sender, so ``2 * tx_range + interference range`` separates every
    endpoint pair.  PhIM: the maximum transmission radius.
    """
    if isinstance(model, PrIM):
        return tx_range * (1.0 + model.rho)
    if isinstance(model, RtsCts):
        return tx_range * (2.0 + model.interference)
    if isinstance(model, PhIM):
        return model.max_radius
    raise TypeError(f"unknown interference model {model!r}")


def sinr(transmitters: Iterable, sender, receiver, model: PhIM, positions=None) -> float:
    """SINR at ``receiver`` for ``sender`` while every node in ``transmitters`` is on.

    With ``positions`` given, nodes are ids looked up in it; otherwise they
    are coordinates.
    """
    where = (lambda n: positions[n]) if positions is not None else (lambda n: n)
    rx = where(receiver)
    d = distance(where(sender), rx)
    if d == 0:
        raise ValueError("sender and receiver are co-located")
    signal = model.power * d ** (-model.kappa)
    interference = 0.0
    for k in transmitters:
        if k == sender:
            continue
        dk = distance(where(k), rx)
        if dk == 0:
            return 0.0
        interference += model.power * dk ** (-model.kappa)
    return signal / (model.noise + interference)


def conflicts(tx_a, tx_b, model: Model, tx_range: float, positions=None) -> bool:
    """True when links ``tx_a`` and ``tx_b`` cannot be active together.

    Links are ``(sender, receiver)`` pairs of ids (looked up in ``positions``)
    or of coordinates.  Links sharing an endpoint always conflict.
    """
    where = (lambda n: positions[n]) if positions is not None else (lambda n: n)
    (sa, ra), (sb, rb) = tx_a, tx_b
    if len({sa, ra, sb, rb}) < 4:
        return True
    psa, pra, psb, prb = where(sa), where(ra), where(sb), where(rb)
    if isinstance(model, PrIM):
        reach = model.rho * tx_range
        return distance(psb, pra) <= reach or distance(psa, prb) <= reach
    if isinstance(model, RtsCts):
        reach = model.interference * tx_range
        return any(distance(p, q) <= reach for p in (psa, pra) for q in (psb, prb))
    if isinstance(model, PhIM):
        pts = {0: psa, 1: pra, 2: psb, 3: prb}
        return (sinr((0, 2), 0, 1, model, pts) < model.beta
                or sinr((0, 2), 2, 3, model, pts) < model.beta)
    raise TypeError(f"unknown interference model {model!r}")


def c1(model: Model) -> int:
    """Max number of concurrent transmitters inside one interference-aware region."""
    if isinstance(model, PrIM):
        rho = model.rho
        return math.floor(16 * rho * rho / (rho - 1) ** 2 + 1e-9)
    if isinstance(model, RtsCts):
        return 36
    if isinstance(model, PhIM):
        return math.floor(2**model.kappa * model.power / (model.noise * model.beta**2) + 1e-9)
    raise TypeError(f"unknown interference model {model!r}")


def phim_interference_bound(model: PhIM, k: int, terms: int = 2000) -> float:
    """Upper bound on ``I / (N0 * beta)`` at a receiver under K-coloring.

    One transmitter per same-color region; regions have side ``r`` (the max
    radius) and the receiver lies within ``shrink * r`` of its sender.  Ring
    ``j`` of same-color regions (Chebyshev offset ``j*k`` cells) holds ``8j``
    regions whose points are at least ``r * (j*k - 1 - shrink)`` from the
    receiver.  The sum is truncated after ``terms`` rings and the tail bounded
    by an integral.  Returns ``inf`` when the first ring can touch the receiver.
    """
    s, kap = model.shrink, model.kappa
    gap = k - 1 - s
    if gap <= 0:
        return math.inf
    j = np.arange(1, terms + 1, dtype=float)
    head = float(np.sum(8 * j * (j * k - 1 - s) ** (-kap)))
    # For j > J: j*k - 1 - s >= j * (k - (1+s)/(J+1)).
    kk = k - (1 + s) / (terms + 1)
    tail = 8 * kk ** (-kap) * terms ** (2 - kap) / (kap - 2)
    return head + tail


@lru_cache(maxsize=None)
def _phim_k(model: PhIM) -> int:
    if not model.kappa > 2:
        # Ring j contributes ~ j^(1-kappa): the plane-wide sum diverges.
        raise ValueError(f"region coloring needs kappa > 2, got {model.kappa}")
    # SINR >= beta for a link of length shrink*r needs I <= N0 * (shrink^-kappa - 1).
    budget = (model.shrink ** (-model.kappa) - 1.0) / model.beta
    if budget <= 0:
        raise ValueError("PhIM links of length shrink * max_radius leave no interference budget; "
                         "use shrink < 1")
    for k in range(2, 10_000):
        if phim_interference_bound(model, k) <= budget:
            return k
    raise ValueError(f"no finite region separation satisfies SINR >= beta for {model!r}")


def k_factor(model: Model) -> int:
    """Same-color regions are separated by ``k_factor - 1`` regions."""
    return math.ceil(math.sqrt(c2(model)) - 1e-12)


def c2(model: Model) -> int:
    """Number of region colors (chromatic number of the region coloring)."""
    if isinstance(model, (PrIM, RtsCts)):
        return 4
    if isinstance(model, PhIM):
        return _phim_k(model) ** 2
    raise TypeError(f"unknown interference model {model!r}")


def c3(model: Model) -> int:
    """Maximum CDS size inside one interference-aware region, plus one."""
    if isinstance(model, PrIM):
        return math.floor(8 * (model.rho + 4) ** 2 + 1e-9)
    if isinstance(model, (RtsCts, PhIM)):
        return 200
    raise TypeError(f"unknown interference model {model!r}")


def random_connected_positions(n, rng, area=(400.0, 400.0), tx_range=50.0, sink_at_center=True):
    """Grow a connected deployment: each new node lands within range of an old one."""
    w, h = area
    pts = [(w / 2, h / 2) if sink_at_center else (rng.uniform(0, w), rng.uniform(0, h))]
    while len(pts) < n:
        ax, ay = pts[rng.integers(len(pts))]
        rad = tx_range * math.sqrt(rng.uniform(0.0, 1.0))
        ang = rng.uniform(0.0, 2 * math.pi)
        x, y = ax + rad * math.cos(ang), ay + rad * math.sin(ang)
        if 0 <= x <= w and 0 <= y <= h and math.hypot(x - ax, y - ay) <= tx_range:
            pts.append((x, y))
    return pts
