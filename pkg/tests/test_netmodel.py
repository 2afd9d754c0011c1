import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from rtcollect import netmodel as nm

coords = st.floats(-200, 200, allow_nan=False)


# -- links and networks ---------------------------------------------------

def test_links_threshold():
    assert nm.build_links([nm.Node(0, (0, 0)), nm.Node(1, (49, 0))], 50) == {(0, 1)}
    assert nm.build_links([nm.Node(0, (0, 0)), nm.Node(1, (51, 0))], 50) == frozenset()


def test_collinear_path():
    net = nm.Network.from_positions([(0, 0), (40, 0), (80, 0)], tx_range=50)
    assert net.links == {(0, 1), (1, 2)}
    assert net.neighbors(1) == (0, 2)


@given(st.lists(st.tuples(coords, coords), min_size=2, max_size=25), st.floats(1, 120))
def test_links_match_pairwise_distances(pts, r):
    nodes = [nm.Node(i, p) for i, p in enumerate(pts)]
    expect = {(i, j) for i in range(len(pts)) for j in range(i + 1, len(pts))
              if math.dist(pts[i], pts[j]) <= r}
    assert nm.build_links(nodes, r) == expect


def test_disconnected_network_is_rejected():
    with pytest.raises(nm.NetworkError, match="disconnected"):
        nm.Network.from_positions([(0, 0), (100, 0)], tx_range=50)


def test_bad_construction():
    with pytest.raises(nm.NetworkError):
        nm.Network.from_positions([(0, 0), (1, 0)], sink=7, tx_range=5)
    with pytest.raises(nm.NetworkError):
        nm.Network((nm.Node(0, (0, 0)), nm.Node(0, (1, 0))), 0, 5)
    with pytest.raises(nm.NetworkError, match="longer"):
        nm.Network.from_positions([(0, 0), (3, 0), (6, 0)], tx_range=5, links={(0, 2), (0, 1)})


def test_hop_distances_agree_with_networkx(rng):
    net = nm.Network.from_positions(nm.random_connected_positions(80, rng), tx_range=50)
    g = nx.Graph(list(net.links))
    assert net.hop_distances() == nx.single_source_shortest_path_length(g, net.sink)
    assert net.sink_eccentricity() == nx.eccentricity(g, net.sink)


def test_random_deployment_connected_inside_area(rng):
    pts = nm.random_connected_positions(120, rng, (300, 200), 40)
    assert all(0 <= x <= 300 and 0 <= y <= 200 for x, y in pts)
    nm.Network.from_positions(pts, tx_range=40)  # would raise if disconnected


# -- model parameters ----------------------------------------------------

def test_phim_radius():
    assert nm.PhIM(1, 0.01, 2, 2).max_radius == pytest.approx(math.sqrt(50))
    for kappa in (2.5, 3, 4, 6):
        assert nm.PhIM(0.02, 0.01, 2, kappa).max_radius == pytest.approx(1.0)


def test_phim_for_range():
    m = nm.PhIM.for_range(50, shrink=0.7)
    assert m.shrink * m.max_radius == pytest.approx(50)


@pytest.mark.parametrize("kw", [dict(power=0), dict(noise=-1), dict(kappa=0), dict(shrink=1.5)])
def test_phim_validation(kw):
    with pytest.raises(ValueError):
        nm.PhIM(**kw)


def test_prim_and_rtscts_validation():
    with pytest.raises(ValueError):
        nm.PrIM(1.0)
    with pytest.raises(ValueError):
        nm.RtsCts(0)


def test_interference_radius_values():
    assert nm.interference_radius(nm.PrIM(2), 1) == 3
    assert nm.interference_radius(nm.RtsCts(), 50) == 150
    m = nm.PhIM(1, 0.01, 2, 2)
    assert nm.interference_radius(m, 1) == pytest.approx(m.max_radius)


@pytest.mark.parametrize("pos, idx", [((0, 0), (0, 0)), ((3, 0), (1, 0)), ((-0.5, 7), (-1, 2)),
                                      ((2.999, -0.001), (0, -1))])
def test_region_of(pos, idx):
    assert nm.region_of(pos, 3) == nm.RegionIndex(*idx)


# -- SINR and conflicts ---------------------------------------------------

def test_sinr_lone_transmitter():
    m = nm.PhIM(1, 0.01, 2, 2)
    assert nm.sinr([(0, 0)], (0, 0), (5, 0), m) == pytest.approx(4.0)
    assert nm.sinr([], (0, 0), (m.max_radius, 0), m) == pytest.approx(m.beta)


def test_sinr_drops_with_interferers():
    m = nm.PhIM(1, 0.01, 2, 3)
    lone = nm.sinr([], (0, 0), (1, 0), m)
    both = nm.sinr([(0, 0), (1, 4), (1, -4)], (0, 0), (1, 0), m)
    assert both < lone
    # same number by hand
    i = 2 * 4.0 ** -3
    assert both == pytest.approx(1.0 / (0.01 + i))


def test_prim_conflict_example():
    m = nm.PrIM(2)
    assert nm.conflicts(((0, 0), (10, 0)), ((11, 0), (60, 0)), m, 50)


@pytest.mark.parametrize("model", [nm.PrIM(2), nm.RtsCts(), nm.PhIM.for_range(1)])
def test_far_links_never_conflict(model):
    lam = nm.interference_radius(model, 1)
    a = ((0, 0), (0.5, 0))
    b = ((3 * lam, 0), (3 * lam + 0.5, 0))
    assert not nm.conflicts(a, b, model, 1)


def test_phim_parallel_short_links():
    m = nm.PhIM(1, 0.01, 2, 2)
    r = m.max_radius
    assert not nm.conflicts(((0, 0), (r / 2, 0)), ((0, 100 * r), (r / 2, 100 * r)), m, r)


def test_shared_endpoint_conflicts():
    assert nm.conflicts((0, 1), (1, 2), nm.RtsCts(), 1, {0: (0, 0), 1: (1, 0), 2: (900, 0)})


def _random_link(rng, r, spread):
    s = rng.uniform(-spread, spread, 2)
    ang, d = rng.uniform(0, 2 * np.pi), r * np.sqrt(rng.uniform(0.01, 1))
    return tuple(s), (s[0] + d * np.cos(ang), s[1] + d * np.sin(ang))


@pytest.mark.parametrize("model", [nm.PrIM(2), nm.PrIM(3.5), nm.RtsCts(), nm.RtsCts(1.5)])
def test_lambda_bounds_every_conflict(model):
    """Brute-force search: conflicting links never have senders more than lambda apart."""
    rng = np.random.default_rng(7)
    lam = nm.interference_radius(model, 1.0)
    worst = 0.0
    for _ in range(20000):
        a, b = _random_link(rng, 1.0, lam / 1.5), _random_link(rng, 1.0, lam / 1.5)
        if nm.conflicts(a, b, model, 1.0):
            worst = max(worst, math.dist(a[0], b[0]))
    assert worst <= lam + 1e-9
    assert worst > 0.8 * lam  # and the radius is not grossly loose


def test_lambda_is_attained():
    # receivers pushed outward along the axis: senders exactly (1 + rho) apart
    m = nm.PrIM(2)
    assert nm.conflicts(((0, 0), (1, 0)), ((3, 0), (4, 0)), m, 1)
    assert not nm.conflicts(((0, 0), (1, 0)), ((3.001, 0), (4, 0)), m, 1)


# -- constants --------------------------------------------------------------

def test_c1_values():
    assert nm.c1(nm.RtsCts()) == 36
    assert nm.c1(nm.PrIM(2)) == 64
    assert nm.c1(nm.PhIM(1, 0.01, 2, 2)) == 100


def test_c2_c3_values():
    for m in (nm.PrIM(2), nm.RtsCts()):
        assert nm.c2(m) == 4 and nm.k_factor(m) == 2
    assert nm.c3(nm.RtsCts()) == 200
    assert nm.c3(nm.PhIM()) == 200
    assert nm.c3(nm.PrIM(2)) == 288


def test_phim_c2_needs_kappa_above_two():
    with pytest.raises(ValueError, match="kappa > 2"):
        nm.c2(nm.PhIM(1, 0.01, 2, 2))


def test_phim_c2_finite_and_square():
    m = nm.PhIM(100, 1, 2, 4)
    k = nm.k_factor(m)
    assert 2 <= k < 50 and nm.c2(m) == k * k


@given(st.lists(st.tuples(st.floats(0, 2.999), st.floats(0, 2.999)), min_size=2, max_size=40))
def test_greedy_packing_in_a_region_stays_below_c1(senders):
    """Transmitters of a region that pairwise avoid conflicts never exceed c1."""
    model = nm.PrIM(2)
    kept = []
    for s in senders:
        link = (s, (s[0] + 1.0, s[1]))
        if all(not nm.conflicts(link, other, model, 1.0) for other in kept):
            kept.append(link)
    assert len(kept) <= nm.c1(model)


def _worst_case_sinr(model, k, rings=60):
    """Oracle: one sender per same-colored region, each at the corner nearest the receiver."""
    r, s = model.max_radius, model.shrink
    rx = np.array([s * r, 0.0])  # sender at the origin corner of region (0, 0)
    idx = np.arange(-rings, rings + 1) * k
    gv, gh = np.meshgrid(idx, idx)
    gv, gh = gv.ravel(), gh.ravel()
    keep = (gv != 0) | (gh != 0)
    gv, gh = gv[keep], gh[keep]
    # closest point of region [v*r, (v+1)r) x [h*r, (h+1)r) to the receiver
    x = np.clip(rx[0], gv * r, (gv + 1) * r)
    y = np.clip(rx[1], gh * r, (gh + 1) * r)
    d = np.hypot(x - rx[0], y - rx[1])
    interference = np.sum(model.power * d ** (-model.kappa))
    signal = model.power * (s * r) ** (-model.kappa)
    return signal / (model.noise + interference)


@pytest.mark.parametrize("model", [nm.PhIM(100, 1, 2, 4), nm.PhIM.for_range(50),
                                   nm.PhIM(1, 0.01, 1.5, 3, 0.6), nm.PhIM(5, 1, 3, 5, 0.8)])
def test_phim_k_survives_adversarial_placement(model):
    assert _worst_case_sinr(model, nm.k_factor(model)) >= model.beta


def test_phim_interference_bound_decreasing_in_k():
    m = nm.PhIM(100, 1, 2, 4)
    vals = [nm.phim_interference_bound(m, k) for k in range(2, 8)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert nm.phim_interference_bound(m, 1) == math.inf
