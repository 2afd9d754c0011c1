"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line PASS/FAIL verdict (shown in the terminal summary
and printed to stdout) before asserting.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from rtcollect import netmodel as nm
from rtcollect.queries import (Query, delay_feasible, necessary_condition, rm_utilization_bound,
                               sufficient_condition, sufficient_threshold, total_load)
from rtcollect.scenario import (TREND_CONFIG, build_tightness_fixture, run_scenario,
                                sufficient_instance, sweep)
from rtcollect.scheduler import rm_replay
from rtcollect.selection import (brute_force_knapsack, items_from_queries, knapsack,
                                 select_queries)
from rtcollect.sim import interference_audit, region_overlap_audit, simulate


def verdict(n, title, ok, detail):
    line = f"[{n}] {'PASS' if ok else 'FAIL'} {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _random_queries(rng, net, count, max_sources, chi, periods):
    others = [u for u in net.ids if u != net.sink]
    out = []
    for i in range(count):
        k = int(rng.integers(1, min(max_sources, len(others)) + 1))
        src = set(int(x) for x in rng.choice(others, size=k, replace=False))
        out.append(Query(i, src, chi, float(rng.uniform(*periods)), float(rng.uniform(0, 50))))
    return out


def test_1_constants():
    t0 = time.perf_counter()
    got = {
        "c1(RtsCts)": nm.c1(nm.RtsCts()),
        "c3(RtsCts)": nm.c3(nm.RtsCts()),
        "c3(PhIM)": nm.c3(nm.PhIM()),
        "c3(PrIM,2)": nm.c3(nm.PrIM(2.0)),
        "c2(PrIM)": nm.c2(nm.PrIM(2.0)),
        "c2(RtsCts)": nm.c2(nm.RtsCts()),
        "K(PrIM)": nm.k_factor(nm.PrIM(2.0)),
        "K(RtsCts)": nm.k_factor(nm.RtsCts()),
    }
    want = {"c1(RtsCts)": 36, "c3(RtsCts)": 200, "c3(PhIM)": 200, "c3(PrIM,2)": 288,
            "c2(PrIM)": 4, "c2(RtsCts)": 4, "K(PrIM)": 2, "K(RtsCts)": 2}
    elapsed = time.perf_counter() - t0
    verdict(1, "constants", got == want and elapsed < 1.0,
            f"{got} in {elapsed * 1000:.1f} ms")


MODELS = {"RtsCts": nm.RtsCts(), "PrIM(2)": nm.PrIM(2.0), "PhIM": nm.PhIM.for_range(50.0)}


def test_2_interference_free():
    rng = np.random.default_rng(2024)
    per_model = {}
    transmissions = 0
    for name, model in MODELS.items():
        bad = 0
        for _ in range(100):
            n = int(rng.integers(10, 61))
            pts = nm.random_connected_positions(n, rng, (400.0, 400.0), 50.0)
            net = nm.Network.from_positions(pts, tx_range=50.0)
            qs = _random_queries(rng, net, int(rng.integers(1, 4)), 15, 1.0, (50.0, 150.0))
            frame_t = 1.25 * max(q.period for q in qs)
            length = nm.c2(model) * frame_t
            res = simulate(net, qs, model, frame_t, 3 * length, record_trace=True)
            transmissions += len(res.trace)
            bad += len(interference_audit(res.trace, net, model))
            bad += len(region_overlap_audit(res.trace, res.schedule))
        per_model[name] = bad
    verdict(2, "interference-freeness", all(v == 0 for v in per_model.values()) and transmissions > 0,
            f"violations per model {per_model} over 300 topologies, {transmissions} transmissions audited")


def test_3_sufficient_condition_guarantee():
    rng = np.random.default_rng(77)
    instances, rounds, missed = 0, 0, 0
    for i in range(60):
        model = (nm.RtsCts(), nm.PrIM(2.0))[i % 2]
        net, qs, frame_t = sufficient_instance(rng, model=model)
        assert sufficient_condition(net, qs, model) and delay_feasible(net, qs, model, frame_t).ok
        horizon = max(q.release + 10 * q.period + q.deadline for q in qs)
        res = simulate(net, qs, model, frame_t, horizon, record_trace=False)
        instances += 1
        rounds += res.metrics.rounds
        missed += res.metrics.rounds - res.metrics.successes
        assert res.metrics.drops == 0
    verdict(3, "sufficient-condition guarantee", instances >= 50 and missed == 0 and rounds > 0,
            f"{instances} instances, {rounds} rounds, {missed} missed deadlines")


def _necessary_instance(rng, target):
    n = int(rng.integers(6, 26))
    net = nm.Network.from_positions(nm.random_connected_positions(n, rng, (150.0, 150.0), 50.0),
                                    tx_range=50.0)
    others = [u for u in net.ids if u != net.sink]
    nq = int(rng.integers(1, 4))
    shares = rng.uniform(0.5, 2.0, nq)
    qs = []
    for i in range(nq):
        k = int(rng.integers(1, len(others) + 1))
        src = set(int(x) for x in rng.choice(others, size=k, replace=False))
        period = k * 1.0 / (target * shares[i] / shares.sum())
        qs.append(Query(i, src, 1.0, period))
    frame_t = 1.25 * max(q.period for q in qs)
    bound = nm.c2(nm.RtsCts()) * frame_t * 2 * max(1, net.sink_eccentricity())
    qs = [replace(q, deadline=bound) for q in qs]
    return net, qs, frame_t


def _sustained(net, qs, frame_t):
    horizon = max(q.release + 20 * q.period + q.deadline for q in qs) + 1.0
    res = simulate(net, qs, nm.RtsCts(), frame_t, horizon, record_trace=False)
    per_query = res.metrics.per_query
    return all(per_query[q.id][0] >= 20 and per_query[q.id][0] == per_query[q.id][1] for q in qs)


def test_4_necessary_condition_soundness():
    rng = np.random.default_rng(4)
    model = nm.RtsCts()
    sustained, contradictions, randoms = 0, 0, 0
    for _ in range(50):
        target = float(np.exp(rng.uniform(np.log(1e-3), np.log(2.5))))
        net, qs, frame_t = _necessary_instance(rng, target)
        randoms += 1
        if _sustained(net, qs, frame_t):
            sustained += 1
            contradictions += int(not necessary_condition(net, qs, model))
    violators, caught = 0, 0
    for _ in range(15):
        net, qs, frame_t = _necessary_instance(rng, float(rng.uniform(1.05, 2.5)))
        violators += 1
        flagged = not necessary_condition(net, qs, model)
        caught += int(flagged or not _sustained(net, qs, frame_t))
        assert total_load(qs) > 1
    ok = contradictions == 0 and caught == violators and sustained >= 5
    verdict(4, "necessary-condition soundness", ok,
            f"{randoms} random instances ({sustained} sustained 1.0, {contradictions} violate the "
            f"condition); {caught}/{violators} engineered violators failed or flagged")


def test_5_rate_monotonic_bound():
    rng = np.random.default_rng(5)
    frame = 4
    checked, misses = 0, 0
    while checked < 40:
        n = int(rng.integers(1, 6))
        allot = int(rng.integers(1, frame + 1))
        flows = [(int(rng.integers(1, 4)), frame * int(rng.integers(1, 13))) for _ in range(n)]
        util = sum(c / p for c, p in flows) / (allot / frame)
        if util > rm_utilization_bound(n):
            continue
        rep = rm_replay(flows, frame, allot, periods=1000)
        checked += 1
        misses += rep.misses
    over = rm_replay([(1, 4), (2, 8), (1, 8)], frame, 2, periods=1000)  # utilization 1.25
    verdict(5, "rate-monotonic bound", misses == 0 and over.misses > 0,
            f"{checked} flow sets at or under n(2^(1/n)-1), {misses} misses over 1000 periods; "
            f"overloaded set (utilization 1.25) missed {over.misses}")


def test_6_half_d_approximation():
    t0 = time.perf_counter()
    rng = np.random.default_rng(6)
    worst, below, mismatch = math.inf, 0, 0
    for i in range(200):
        model = (nm.RtsCts(), nm.PrIM(2.0), nm.PhIM(100.0, 1.0, 2.0, 4.0))[i % 3]
        d = sufficient_threshold(model)
        n = int(rng.integers(1, 16))
        sizes = np.exp(rng.uniform(np.log(d / 30), np.log(1.5), n))
        qs = [Query(j, {1}, float(s), 1.0, weight=float(w))
              for j, (s, w) in enumerate(zip(sizes, rng.uniform(0.1, 10.0, n)))]
        items = items_from_queries(qs)
        opt = brute_force_knapsack(items, 1.0).weight
        sel = select_queries(qs, model)
        if opt > 0:
            worst = min(worst, sel.weight / opt)
        below += int(sel.weight < d / 2 * opt - 1e-12)
        for cap in (d, 1.0):
            mismatch += int(abs(knapsack(items, cap).weight - brute_force_knapsack(items, cap).weight) > 1e-9)
    elapsed = time.perf_counter() - t0
    verdict(6, "d/2 approximation", below == 0 and mismatch == 0 and elapsed < 60,
            f"200 instances, {below} below (d/2)*OPT, worst ratio {worst:.3g}, "
            f"{mismatch} knapsack mismatches, {elapsed:.1f} s")


def test_7_tightness_fixture():
    results = []
    for model in (nm.RtsCts(interference=12.0), nm.PhIM(100.0, 1.0, 2.0, 4.0, shrink=0.05)):
        fx = build_tightness_fixture(model)
        want = nm.c3(model) * total_load(fx.queries)
        got = fx.region_relay_load()
        results.append((fx.region_initial_load(), abs(got - want) / want))
    ok = all(init == 0 and rel <= 1e-9 for init, rel in results)
    verdict(7, "tightness fixture", ok,
            "initial load / relative relay-load error per model: "
            + ", ".join(f"{i} / {r:.1e}" for i, r in results))


def _trend(rows, values):
    """Per-value means, paired-by-seed rises, and their standard errors."""
    table = {v: {r["seed"]: r["success_ratio"] for r in rows if r["value"] == v} for v in values}
    seeds = sorted(table[values[0]])
    means = [float(np.mean([table[v][s] for s in seeds])) for v in values]
    rises = []
    for a, b in zip(values, values[1:]):
        diff = np.array([table[b][s] - table[a][s] for s in seeds])
        rises.append((float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(len(diff)))))
    return means, rises


def _kendall(xs, ys):
    num = sum(np.sign(xs[j] - xs[i]) * np.sign(ys[j] - ys[i])
              for i in range(len(xs)) for j in range(i + 1, len(xs)))
    return num / (len(xs) * (len(xs) - 1) / 2)


def test_8_trend_replication():
    seeds = list(range(20))
    sizes = list(range(50, 251, 25))
    sources = list(range(10, 101, 10))
    size_rows = sweep(TREND_CONFIG, "node_count", sizes, seeds)
    source_rows = sweep(replace(TREND_CONFIG, node_count=200), "source_count", sources, seeds)
    summary, ok = [], True
    for label, rows, values in (("size", size_rows, sizes), ("sources", source_rows, sources)):
        means, rises = _trend(rows, values)
        # a rise counts only if it stands out of the seed-to-seed noise
        significant = [m for m, se in rises if m > 2 * se]
        tau = _kendall(values, means)
        drop = means[0] - means[-1]
        ok &= not significant and tau <= -0.6 and drop >= 0.2
        summary.append(f"{label}: means {[round(m, 3) for m in means]}, tau {tau:.2f}, "
                       f"drop {drop:.2f}, significant rises {len(significant)}")
    rows = size_rows + source_rows
    under = [r["success_ratio"] for r in rows if r["offered_load"] <= 1.0]
    over = [r["success_ratio"] for r in rows if r["offered_load"] > 1.0]
    gap = float(np.mean(under) - np.mean(over))
    ok &= gap >= 0.15
    summary.append(f"saturation: mean {np.mean(under):.2f} at load <= 1 ({len(under)} runs) vs "
                   f"{np.mean(over):.2f} above ({len(over)} runs)")
    verdict(8, "evaluation-flow trend", ok, "; ".join(summary))


def test_9_determinism():
    cfgs = [replace(TREND_CONFIG, seed=3, node_count=80, duration=8000.0),
            replace(TREND_CONFIG, seed=8, node_count=60, duration=8000.0, loss_scale=0.4,
                    buffer_limit=20, model=nm.PrIM(2.0))]
    same = True
    for cfg in cfgs:
        a = run_scenario(cfg, record_trace=True)
        b = run_scenario(cfg, record_trace=True)
        same &= a.metrics.to_text().encode() == b.metrics.to_text().encode() and a.trace == b.trace
    verdict(9, "determinism", same, f"{len(cfgs)} configs run twice, metrics text byte-identical: {same}")
