import json
import logging

import pytest
from hypothesis import given, settings, strategies as st

from mwdefect.evidence import (Bounds, ContextInvalid, DimensionMismatch, MalformedDocument,
                               MissingBounds, RuntimeContext, WindowMode, dump_hierarchy,
                               load_context, load_triplet, parse_hierarchy)

from conftest import ctx_for, view, write_triplet


def doc(*views):
    return json.dumps({"views": list(views)}).encode()


def test_single_node_field_mapping():
    raw = doc(view(0, "TextView", ((0, 0), (100, 40)), text="OK", clickable=False))
    [w] = parse_hierarchy(raw)
    assert w.widget_type == "TextView"
    assert w.text == "OK"
    assert w.bounds == Bounds(0, 0, 100, 40)
    assert w.clickable is False
    assert w.resource_id is None and w.content_present is None


def test_empty_views():
    assert parse_hierarchy(doc()) == []


def test_seven_node_tree_dfs_preorder():
    # root(10) -> a(11) -> [a1(13), a2(14)] ; b(12) -> [b1(15) -> b1x(16)]
    views = [
        view(16, bounds=((6, 6), (7, 7))),
        view(10, "android.widget.FrameLayout", ((0, 0), (100, 100)), children=[11, 12]),
        view(12, bounds=((0, 50), (100, 100)), children=[15]),
        view(11, bounds=((0, 0), (100, 50)), children=[13, 14]),
        view(13, bounds=((0, 0), (50, 50))),
        view(14, bounds=((50, 0), (100, 50))),
        view(15, bounds=((0, 50), (50, 100)), children=[16]),
    ]
    widgets = parse_hierarchy(doc(*views))
    assert [w.id for w in widgets] == [10, 11, 13, 14, 12, 15, 16]
    assert [w.document_order for w in widgets] == list(range(7))
    assert widgets[0].widget_type == "FrameLayout"


def test_malformed_json():
    with pytest.raises(MalformedDocument):
        parse_hierarchy(b"{not json")
    with pytest.raises(MalformedDocument):
        parse_hierarchy(b'{"nodes": []}')


def test_missing_bounds_skipped_with_warning(caplog):
    raw = doc(view(0, children=[1]), view(1, bounds=None, children=[2]), view(2))
    with caplog.at_level(logging.WARNING):
        widgets = parse_hierarchy(raw)
    assert [w.id for w in widgets] == [0, 2]
    assert "no bounds" in caplog.text
    with pytest.raises(MissingBounds):
        parse_hierarchy(raw, strict=True)


def test_inverted_and_negative_bounds_normalised():
    [w] = parse_hierarchy(doc(view(0, bounds=((50, 60), (10, 20)))))
    assert w.bounds == Bounds(10, 20, 50, 60)
    [w] = parse_hierarchy(doc(view(0, bounds=((-5, -8), (10, 20)))))
    assert w.bounds == Bounds(0, 0, 10, 20)


def test_flat_bounds_accepted():
    raw = json.dumps({"views": [{"temp_id": 0, "class": "View", "bounds": [1, 2, 3, 4]}]})
    assert parse_hierarchy(raw)[0].bounds == Bounds(1, 2, 3, 4)


node_st = st.builds(
    lambda x, y, w, h, text, click, rid, content: dict(
        bounds=((x, y), (x + w, y + h)), text=text, clickable=click, resource_id=rid,
        content_present=content),
    st.integers(0, 1000), st.integers(0, 1000), st.integers(0, 300), st.integers(0, 300),
    st.one_of(st.none(), st.text(max_size=8)), st.booleans(),
    st.one_of(st.none(), st.text(min_size=1, max_size=8)), st.one_of(st.none(), st.booleans()),
)


@settings(max_examples=60, deadline=None)
@given(st.lists(node_st, max_size=12), st.randoms(use_true_random=False))
def test_count_and_dump_roundtrip(nodes, rnd):
    views = []
    for i, n in enumerate(nodes):
        children = [j for j in range(i + 1, len(nodes)) if rnd.random() < 0.2]
        views.append(view(i, children=children, **n))
    # a node claimed by two parents is still visited once
    raw = doc(*views)
    first = parse_hierarchy(raw)
    assert len(first) == len(nodes)
    assert parse_hierarchy(raw) == first  # stable order across parses
    again = parse_hierarchy(dump_hierarchy(first))
    assert again == first


def test_context_split_ratio_rules():
    with pytest.raises(ContextInvalid):
        ctx_for(ratio=0.5)
    with pytest.raises(ContextInvalid):
        ctx_for(mode=WindowMode.SPLIT_SCREEN)
    with pytest.raises(ContextInvalid):
        ctx_for(window=(0, 0, 1200, 1920))
    ok = ctx_for((0, 0, 1080, 960), mode=WindowMode.SPLIT_SCREEN, ratio=0.5)
    assert RuntimeContext.from_json(ok.to_json()) == ok


def test_load_triplet_ok(tmp_path):
    ctx = ctx_for()
    d = write_triplet(tmp_path / "t", [view(0, bounds=((0, 0), (100, 40)), text="Hi")], ctx)
    t = load_triplet(d / "screen.png", d / "hierarchy.json", d / "context.json")
    assert t.image.size == (1080, 1920)
    assert len(t.widgets) == 1 and t.context == ctx


def test_load_triplet_dimension_mismatch(tmp_path):
    ctx = ctx_for((0, 0, 720, 1280), (720, 1280))
    d = write_triplet(tmp_path / "t", [], ctx, image_size=(1080, 1920))
    with pytest.raises(DimensionMismatch):
        load_triplet(d / "screen.png", d / "hierarchy.json", d / "context.json")


def test_load_triplet_context_invalid(tmp_path):
    d = write_triplet(tmp_path / "t", [], ctx_for())
    data = json.loads((d / "context.json").read_text())
    data["split_ratio"] = 0.5
    (d / "context.json").write_text(json.dumps(data))
    with pytest.raises(ContextInvalid):
        load_context(d / "context.json")


def test_offscreen_widget_marked_invisible(tmp_path):
    ctx = ctx_for((0, 0, 400, 600), (400, 600))
    d = write_triplet(tmp_path / "t", [view(0, bounds=((500, 700), (600, 800)), text="x")], ctx)
    t = load_triplet(d / "screen.png", d / "hierarchy.json", d / "context.json")
    assert t.widgets[0].visible is False
