"""Routing backbone: connected dominating set, spanning tree and per-query trees.

The CDS follows the usual MIS-plus-connectors recipe: a breadth-first
layering from the sink ranks nodes by ``(hop level, id)``, a maximal
independent set is picked greedily in rank order, and the BFS parent of
every non-sink dominator becomes a connector.  Redundant leaves of the
backbone are then pruned.  The spanning tree hangs every non-CDS node off its
shallowest neighboring CDS node; per-query trees keep only the nodes whose
subtree contains a source of the query.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .netmodel import Network, NetworkError, PhIM


@dataclass(frozen=True)
class Cds:
    dominators: frozenset
    connectors: frozenset

    @property
    def nodes(self) -> frozenset:
        return self.dominators | self.connectors


@dataclass
class RoutingTree:
    """Parent-pointer tree rooted at the sink.

    ``carried[u]`` is the number of the query's sources in the subtree of
    ``u``, i.e. how many data units ``u`` forwards per period.
    """

    query_id: int | None
    sink: int
    parent: dict = field(default_factory=dict)
    members: frozenset = frozenset()
    carried: dict = field(default_factory=dict)

    def children(self) -> dict:
        kids = {u: [] for u in self.members}
        for u, p in self.parent.items():
            kids[p].append(u)
        return {u: sorted(v) for u, v in kids.items()}

    def depth(self, node) -> int:
        d = 0
        while node != self.sink:
            node = self.parent[node]
            d += 1
        return d

    def path_to_sink(self, node) -> list:
        path = [node]
        while node != self.sink:
            node = self.parent[node]
            path.append(node)
        return path

    def height(self) -> int:
        return max((self.depth(u) for u in self.members), default=0)

    def subtree(self, node) -> set:
        kids = self.children()
        out, stack = set(), [node]
        while stack:
            u = stack.pop()
            out.add(u)
            stack.extend(kids[u])
        return out

    def records(self):
        """``(query_id, child, parent)`` rows sorted by child id."""
        qid = -1 if self.query_id is None else self.query_id
        return [(qid, c, self.parent[c]) for c in sorted(self.parent)]


def _is_connected(nodes, net: Network) -> bool:
    if not nodes:
        return False
    start = min(nodes)
    seen, queue = {start}, deque([start])
    while queue:
        u = queue.popleft()
        for w in net.neighbors(u):
            if w in nodes and w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(nodes)


def _dominates(nodes, net: Network) -> bool:
    return all(u in nodes or any(w in nodes for w in net.neighbors(u)) for u in net.ids)


def build_cds(net: Network) -> Cds:
    level = net.hop_distances()
    if len(level) != len(net.nodes):
        raise NetworkError("network is disconnected")
    rank = sorted(net.ids, key=lambda u: (level[u], u))

    mis, blocked = set(), set()
    for u in rank:
        if u not in blocked:
            mis.add(u)
            blocked.add(u)
            blocked.update(net.neighbors(u))

    # BFS parent: lowest-id neighbor one level up.
    def bfs_parent(u):
        return min(w for w in net.neighbors(u) if level[w] == level[u] - 1)

    backbone = set(mis)
    for u in mis:
        if u != net.sink:
            backbone.add(bfs_parent(u))

    # Drop backbone leaves that are dominated by the rest, farthest first.
    changed = True
    while changed and len(backbone) > 1:
        changed = False
        for u in sorted(backbone, key=lambda x: (level[x], x), reverse=True):
            inner = [w for w in net.neighbors(u) if w in backbone]
            if len(inner) != 1:
                continue
            rest = backbone - {u}
            if _dominates(rest, net):
                backbone = rest
                changed = True
                break

    doms = frozenset(u for u in backbone if any(w not in backbone for w in net.neighbors(u)))
    if not doms:  # every node is in the backbone
        doms = frozenset(backbone)
    return Cds(doms, frozenset(backbone) - doms)


def validate_cds(cds: Cds, net: Network) -> None:
    nodes = cds.nodes
    if not _is_connected(set(nodes), net):
        raise AssertionError("CDS does not induce a connected subgraph")
    for u in net.ids:
        if u not in nodes and not any(w in cds.dominators for w in net.neighbors(u)):
            raise AssertionError(f"node {u} is not dominated")


def build_spanning_tree(net: Network, cds: Cds) -> RoutingTree:
    """Spanning tree rooted at the sink; non-CDS nodes are leaves of the backbone."""
    inner = set(cds.nodes) | {net.sink}
    depth = {net.sink: 0}
    parent = {}
    queue = deque([net.sink])
    while queue:
        u = queue.popleft()
        for w in net.neighbors(u):  # neighbors are sorted, so lowest id parents first
            if w in inner and w not in depth:
                depth[w] = depth[u] + 1
                parent[w] = u
                queue.append(w)
    if len(depth) != len(inner):
        raise NetworkError("CDS backbone is not connected to the sink")
    for u in net.ids:
        if u in inner:
            continue
        anchors = [w for w in net.neighbors(u) if w in inner]
        if not anchors:
            raise NetworkError(f"node {u} has no neighbor in the CDS")
        parent[u] = min(anchors, key=lambda w: (depth[w], w))
    tree = RoutingTree(None, net.sink, parent, frozenset(net.ids))
    tree.carried = {u: 1 for u in net.ids}
    _accumulate(tree)
    return tree


def _accumulate(tree: RoutingTree) -> None:
    # Push per-node counts up to the root, deepest first.
    order = sorted(tree.members, key=tree.depth, reverse=True)
    for u in order:
        if u != tree.sink:
            tree.carried[tree.parent[u]] = tree.carried.get(tree.parent[u], 0) + tree.carried[u]


def prune_tree(spanning: RoutingTree, query) -> RoutingTree:
    """Keep node ``u`` iff the spanning-tree subtree of ``u`` holds a source of ``query``."""
    sources = set(query.sources)
    unknown = sources - set(spanning.members)
    if unknown:
        raise ValueError(f"query {query.id} has sources outside the network: {sorted(unknown)}")
    keep = {spanning.sink}
    for s in sources:
        u = s
        while u not in keep:
            keep.add(u)
            u = spanning.parent[u]
    parent = {u: spanning.parent[u] for u in keep if u != spanning.sink}
    tree = RoutingTree(query.id, spanning.sink, parent, frozenset(keep))
    tree.carried = {u: int(u in sources) for u in keep}
    _accumulate(tree)
    return tree


def build_trees(net: Network, queries, model=None) -> dict:
    """Routing tree per query id (reduced graph first under PhIM)."""
    if isinstance(model, PhIM):
        net = reduced_graph(net, model)
    spanning = build_spanning_tree(net, build_cds(net))
    return {q.id: prune_tree(spanning, q) for q in queries}


def reduced_graph(net: Network, model: PhIM, shrink: float | None = None) -> Network:
    """Same nodes, only links no longer than ``shrink * max_radius``."""
    shrink = model.shrink if shrink is None else shrink
    if not 0 < shrink <= 1:
        raise ValueError("shrink factor must be in (0, 1]")
    limit = shrink * model.max_radius
    links = frozenset(l for l in net.links if net.dist(*l) <= limit * (1 + 1e-12))
    try:
        return Network(net.nodes, net.sink, min(net.tx_range, limit), links)
    except NetworkError as exc:
        raise NetworkError(f"reduced graph (link length <= {limit:.6g}) breaks connectivity: {exc}") from None
