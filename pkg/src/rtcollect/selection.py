"""Weighted query admission for overloaded networks.

Each query is a knapsack item of size ``|S| * chi / p`` and value ``w``.
The selection returns the heavier of the best feasible singleton (size <= 1)
and the optimal packing into ``d = 0.69 / (c2 * c3)``; its weight is at
least ``d/2`` times the optimum of the unit-capacity knapsack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .queries import sufficient_threshold

EXACT_LIMIT = 25
FPTAS_EPS = 0.01
_TOL = 1e-12


@dataclass(frozen=True)
class KnapsackItem:
    query_id: int
    size: float
    weight: float

    def __post_init__(self):
        if not (self.size > 0 and self.weight > 0):
            raise ValueError(f"item {self.query_id}: size and weight must be positive")


@dataclass(frozen=True)
class KnapsackResult:
    ids: tuple
    weight: float
    size: float
    exact: bool


def items_from_queries(queries) -> list[KnapsackItem]:
    return [KnapsackItem(q.id, q.load, q.weight) for q in queries]


def _result(items, chosen, exact) -> KnapsackResult:
    chosen = sorted(chosen, key=lambda it: it.query_id)
    return KnapsackResult(tuple(it.query_id for it in chosen),
                          sum(it.weight for it in chosen),
                          sum(it.size for it in chosen), exact)


def _branch_and_bound(items, capacity):
    # Density order for the fractional (Dantzig) upper bound.
    order = sorted(items, key=lambda it: (-it.weight / it.size, it.query_id))
    n = len(order)
    best_w, best_ids, best_set = 0.0, (), []

    def bound(i, room, value):
        for it in order[i:]:
            if it.size <= room:
                room -= it.size
                value += it.weight
            else:
                return value + it.weight * room / it.size
        return value

    def visit(i, room, value, taken):
        nonlocal best_w, best_ids, best_set
        if i == n:
            ids = tuple(sorted(it.query_id for it in taken))
            if value > best_w + _TOL or (abs(value - best_w) <= _TOL and ids < best_ids):
                best_w, best_ids, best_set = value, ids, list(taken)
            return
        if bound(i, room, value) < best_w - _TOL:
            return
        it = order[i]
        if it.size <= room + _TOL:
            taken.append(it)
            visit(i + 1, room - it.size, value + it.weight, taken)
            taken.pop()
        visit(i + 1, room, value, taken)

    visit(0, capacity, 0.0, [])
    return best_set


def _fptas(items, capacity, eps):
    # Profit scaling; DP over scaled profit keeps the smallest total size.
    vmax = max(it.weight for it in items)
    scale = eps * vmax / len(items)
    profits = [int(math.floor(it.weight / scale)) for it in items]
    top = sum(profits)
    size = np.full(top + 1, np.inf)
    size[0] = 0.0
    take = np.zeros((len(items), top + 1), dtype=bool)
    for i, (it, p) in enumerate(zip(items, profits)):
        if p == 0:
            continue
        cand = size[:-p] + it.size
        better = cand < size[p:]
        size[p:] = np.where(better, cand, size[p:])
        take[i, p:] = better
    reach = np.nonzero(size <= capacity + _TOL)[0]
    p = int(reach.max())
    chosen = []
    for i in range(len(items) - 1, -1, -1):
        if take[i, p]:
            chosen.append(items[i])
            p -= profits[i]
    return chosen


def knapsack(items, capacity: float, exact_limit: int = EXACT_LIMIT, eps: float = FPTAS_EPS) -> KnapsackResult:
    """0-1 knapsack over real sizes.

    Exact branch-and-bound up to ``exact_limit`` items; above that a
    ``(1 - eps)`` FPTAS.  Among equal-weight optima the lexicographically
    smallest id tuple wins.
    """
    if capacity < 0:
        raise ValueError("capacity must be >= 0")
    fit = [it for it in items if it.size <= capacity + _TOL]
    if not fit:
        return KnapsackResult((), 0.0, 0.0, True)
    if len(fit) <= exact_limit:
        return _result(fit, _branch_and_bound(fit, capacity), True)
    return _result(fit, _fptas(fit, capacity, eps), False)


def brute_force_knapsack(items, capacity: float) -> KnapsackResult:
    """Exhaustive optimum over every subset (at most ~20 items)."""
    items = list(items)
    n = len(items)
    if n > 22:
        raise ValueError("too many items for exhaustive search")
    if n == 0:
        return KnapsackResult((), 0.0, 0.0, True)
    masks = ((np.arange(2**n)[:, None] >> np.arange(n)) & 1).astype(float)
    sizes = masks @ np.array([it.size for it in items])
    weights = masks @ np.array([it.weight for it in items])
    weights[sizes > capacity + _TOL] = -1.0
    best = weights.max()
    ties = np.nonzero(weights >= best - _TOL)[0]
    picks = [tuple(sorted(items[j].query_id for j in range(n) if masks[r, j])) for r in ties]
    ids = min(picks)
    chosen = [it for it in items if it.query_id in ids]
    return _result(items, chosen, True)


@dataclass(frozen=True)
class Selection:
    ids: tuple
    weight: float
    phase: str
    singleton: KnapsackResult
    packed: KnapsackResult
    capacity: float


def select_queries(queries, model) -> Selection:
    """Heavier of the best feasible singleton and the knapsack packing into d."""
    queries = list(queries)
    d = sufficient_threshold(model)
    single = [q for q in queries if q.load <= 1 + _TOL]
    if single:
        top = max(single, key=lambda q: (q.weight, -q.id))
        first = KnapsackResult((top.id,), top.weight, top.load, True)
    else:
        first = KnapsackResult((), 0.0, 0.0, True)
    second = knapsack(items_from_queries(queries), d)
    if first.weight > second.weight:
        return Selection(first.ids, first.weight, "singleton", first, second, d)
    return Selection(second.ids, second.weight, "knapsack", first, second, d)


@dataclass(frozen=True)
class ApproximationReport:
    weight: float
    optimum: float
    d: float

    @property
    def ratio(self) -> float:
        return 1.0 if self.optimum == 0 else self.weight / self.optimum

    @property
    def holds(self) -> bool:
        return self.weight >= self.d / 2 * self.optimum - _TOL


def approximation_check(queries, model, max_queries: int = 20) -> ApproximationReport:
    """Compare the selection against the exhaustive unit-capacity optimum."""
    queries = list(queries)
    if len(queries) > max_queries:
        raise ValueError(f"exhaustive oracle limited to {max_queries} queries, got {len(queries)}")
    sel = select_queries(queries, model)
    opt = brute_force_knapsack(items_from_queries(queries), 1.0)
    return ApproximationReport(sel.weight, opt.weight, sel.capacity)
