import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from mwdefect.config import AdjacencyThreshold, LayoutConfig
from mwdefect.evidence import Bounds
from mwdefect.layout import (build_adjacency, center_distance, edge_gap, reading_order,
                             resolve_threshold, serialize_metadata)

from conftest import W

H_DEFAULT = AdjacencyThreshold(20, 120, 0.04)
V_DEFAULT = AdjacencyThreshold(20, 150, 0.06)


def test_center_distance():
    b = Bounds(3, 4, 50, 60)
    assert center_distance(b, b) == 0
    assert center_distance(Bounds(0, 0, 10, 10), Bounds(6, 8, 16, 18)) == pytest.approx(10.0)
    assert center_distance(Bounds(0, 0, 2, 2), Bounds(4, 0, 6, 2)) == pytest.approx(4.0)


def test_edge_gap():
    assert edge_gap(Bounds(0, 0, 100, 50), Bounds(50, 0, 150, 50), "horizontal") == 0
    assert edge_gap(Bounds(0, 0, 100, 50), Bounds(130, 0, 200, 50), "horizontal") == 30
    assert edge_gap(Bounds(130, 0, 200, 50), Bounds(0, 0, 100, 50), "horizontal") == 30
    assert edge_gap(Bounds(0, 0, 100, 50), Bounds(0, 90, 100, 140), "vertical") == 40


def test_resolve_threshold():
    assert resolve_threshold(H_DEFAULT, 1080) == 43
    assert resolve_threshold(V_DEFAULT, 1920) == 115
    assert resolve_threshold(H_DEFAULT, 100) == 20
    assert resolve_threshold(H_DEFAULT, 10_000) == 120


def test_adjacency_examples():
    side = [W(0, "Button", "a", (0, 0, 100, 50)), W(1, "Button", "b", (130, 10, 230, 60))]
    g = build_adjacency(side, screen_size=(1080, 1920))
    assert g.has_edge(0, 1)
    assert g.distance(0, 1) == pytest.approx(math.hypot(130, 10))
    stacked = [W(0, text="a", box=(0, 0, 100, 50)), W(1, text="b", box=(0, 250, 100, 300))]
    assert not build_adjacency(stacked, screen_size=(1080, 1920)).edges
    diagonal = [W(0, text="a", box=(0, 0, 100, 50)), W(1, text="b", box=(110, 60, 200, 100))]
    assert not build_adjacency(diagonal, screen_size=(1080, 1920)).edges


def test_threshold_boundary_inclusive():
    ws = [W(0, text="a", box=(0, 0, 100, 50)), W(1, text="b", box=(143, 0, 200, 50))]
    assert build_adjacency(ws, screen_size=(1080, 1920)).has_edge(0, 1)
    ws[1] = W(1, text="b", box=(144, 0, 200, 50))
    assert not build_adjacency(ws, screen_size=(1080, 1920)).has_edge(0, 1)


def order(ws, screen=(1080, 1920)):
    return list(reading_order(build_adjacency(ws, screen_size=screen), ws).sequence)


def test_single_widget():
    assert order([W(4, text="x")]) == [4]


def test_three_in_a_row():
    ws = [W(2, text="right", box=(260, 0, 360, 50)), W(0, text="left", box=(0, 0, 100, 50)),
          W(1, text="mid", box=(130, 0, 230, 50))]
    assert order(ws) == [0, 1, 2]


def test_two_clusters():
    a = W(0, text="A", box=(0, 0, 100, 50))
    b = W(1, text="B", box=(120, 0, 220, 50))
    c = W(2, text="C", box=(0, 70, 100, 120))
    d = W(3, text="D", box=(0, 1500, 100, 1550))
    e = W(4, text="E", box=(130, 1500, 230, 1550))
    # A's nearest neighbour is C (70) before B (120); C is a dead end, so back to B
    assert order([e, d, c, b, a]) == [0, 2, 1, 3, 4]


def test_equal_distance_tie_goes_to_lower_id():
    centre = W(5, text="c", box=(200, 200, 300, 300))
    left = W(9, text="l", box=(90, 200, 190, 300))
    right = W(3, text="r", box=(310, 200, 410, 300))
    up = W(7, text="u", box=(200, 0, 300, 100))
    # u is top-left minimal; from u only c is adjacent, then r (id 3) before l (id 9)
    assert order([centre, left, right, up]) == [7, 5, 3, 9]


# independent oracle: edges from the definition, recursive DFS
def oracle_order(ws, tau_h, tau_v):
    def overlap(a1, a2, b1, b2):
        return min(a2, b2) - max(a1, b1) > 0

    def gap(a1, a2, b1, b2):
        return max(0, max(a1, b1) - min(a2, b2))

    nbrs = {w.id: [] for w in ws}
    for i, p in enumerate(ws):
        for q in ws[i + 1:]:
            a, b = p.bounds, q.bounds
            if ((overlap(a.y1, a.y2, b.y1, b.y2) and gap(a.x1, a.x2, b.x1, b.x2) <= tau_h)
                    or (overlap(a.x1, a.x2, b.x1, b.x2) and gap(a.y1, a.y2, b.y1, b.y2) <= tau_v)):
                d = math.dist(((a.x1 + a.x2) / 2, (a.y1 + a.y2) / 2),
                              ((b.x1 + b.x2) / 2, (b.y1 + b.y2) / 2))
                nbrs[p.id].append((d, q.id))
                nbrs[q.id].append((d, p.id))
    seen, out = set(), []

    def visit(i):
        seen.add(i)
        out.append(i)
        for _, j in sorted(nbrs[i]):
            if j not in seen:
                visit(j)

    for w in sorted(ws, key=lambda w: (w.bounds.y1, w.bounds.x1, w.id)):
        if w.id not in seen:
            visit(w.id)
    return out


def random_widgets(rng, n, span=(1080, 1920)):
    ws = []
    for i in rng.sample(range(4 * n + 1), n):
        x, y = rng.randrange(0, span[0] - 20), rng.randrange(0, span[1] - 20)
        ws.append(W(i, text=f"t{i}",
                    box=(x, y, x + rng.randint(5, 300), y + rng.randint(5, 200))))
    return ws


@settings(max_examples=150, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(0, 30))
def test_graph_and_order_properties(rng, n):
    ws = random_widgets(rng, n)
    g = build_adjacency(ws, screen_size=(1080, 1920))
    for i, nb in g.neighbors.items():
        assert i not in nb
        for j in nb:
            assert i in g.neighbors[j]
            assert g.distance(i, j) == g.distance(j, i)
    seq = list(reading_order(g, ws).sequence)
    assert sorted(seq) == sorted(w.id for w in ws)
    if ws:
        first = min(ws, key=lambda w: (w.bounds.y1, w.bounds.x1, w.id))
        assert seq[0] == first.id
    assert seq == oracle_order(ws, 43, 115)
    shuffled = list(ws)
    rng.shuffle(shuffled)
    assert order(shuffled) == seq


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False), st.integers(1, 20), st.integers(2, 4))
def test_uniform_scaling_keeps_edges(rng, n, k):
    # frac * extent lands on an integer so the scaled threshold is exactly k times larger
    cfg = LayoutConfig(AdjacencyThreshold(1, 10**6, 0.04), AdjacencyThreshold(1, 10**6, 0.06))
    ws = random_widgets(rng, n, (1000, 2000))
    big = [W(w.id, text=w.text, box=tuple(k * c for c in w.bounds.as_list())) for w in ws]
    g1 = build_adjacency(ws, cfg, (1000, 2000))
    g2 = build_adjacency(big, cfg, (1000 * k, 2000 * k))
    assert set(g1.edges) == set(g2.edges)


def test_metadata():
    assert serialize_metadata(reading_order(build_adjacency([]), []), []).items == ()
    ws = [W(i, "Button" if i % 2 else "TextView", f"w{i}", (i * 100, 0, i * 100 + 90, 50),
            clickable=bool(i % 3), rid=f"id/w{i}" if i % 2 else None) for i in range(10)]
    ordered = reading_order(build_adjacency(ws), ws)
    meta = serialize_metadata(ordered, ws)
    by_id = {w.id: w for w in ws}
    assert [it.id for it in meta.items] == list(ordered.sequence)
    for it in meta.items:
        w = by_id[it.id]
        assert (it.type, it.text, it.bounds, it.clickable, it.resource_id) == (
            w.widget_type, w.text, w.bounds, w.clickable, w.resource_id)


def test_repeat_runs_identical():
    rng = random.Random(3)
    ws = random_widgets(rng, 40)
    first = order(ws)
    assert all(order(ws) == first for _ in range(10))
