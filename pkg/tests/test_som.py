import io
import random

import pytest
from PIL import Image, ImageChops, ImageDraw

from mwdefect.evidence import EvidenceTriplet
from mwdefect.layout import OrderedWidgets, build_adjacency, reading_order
from mwdefect.som import (STROKE_PX, ImageTooSmall, Mark, MappingTable, assign_marks,
                          build_markset, label_box, render_overlay, save_png, som_path_for)

from conftest import W, ctx_for

TYPES = ["TextView", "Button", "ImageView", "View", "EditText", "Switch"]


def noise_image(rng, size):
    return Image.frombytes("RGB", size, rng.randbytes(size[0] * size[1] * 3))


def random_fixture(seed, size=(360, 640), max_widgets=12):
    rng = random.Random(seed)
    ws = []
    for i in range(rng.randint(0, max_widgets)):
        x, y = rng.randrange(-20, size[0] - 10), rng.randrange(-20, size[1] - 10)
        ws.append(W(i, rng.choice(TYPES), rng.choice([None, "Hi", "Open"]),
                    (max(x, 0), max(y, 0), x + rng.randint(8, 200), y + rng.randint(8, 150)),
                    clickable=rng.random() < 0.5))
    ordered = reading_order(build_adjacency(ws, screen_size=size), ws)
    ctx = ctx_for((0, 0, *size), size)
    return EvidenceTriplet(noise_image(rng, size), tuple(ws), ctx), ordered, ws


def allowed_mask(size, marks, widgets):
    """Every pixel a stroke or a label may touch."""
    mask = Image.new("L", size, 0)
    d = ImageDraw.Draw(mask)
    by_id = {w.id: w for w in widgets}
    for m in marks:
        b = by_id[m.widget_id].bounds
        d.rectangle((b.x1, b.y1, b.x2 - 1, b.y2 - 1), outline=255, width=STROKE_PX)
        x1, y1, x2, y2 = label_box(m, size)
        d.rectangle((x1, y1, x2 - 1, y2 - 1), fill=255)
    return mask


def changed_outside(before, after, mask):
    diff = ImageChops.difference(before, after).convert("L").point(lambda v: 255 if v else 0)
    outside = ImageChops.multiply(diff, ImageChops.invert(mask))
    return outside.getbbox()


def png_bytes(img):
    buf = io.BytesIO()
    img.save(buf, format="PNG", compress_level=1)
    return buf.getvalue()


def test_assign_marks_order_and_empty():
    ws = [W(7, text="a", box=(0, 300, 50, 350)), W(2, text="b", box=(0, 400, 50, 450)),
          W(9, text="c", box=(0, 500, 50, 550))]
    marks = assign_marks(OrderedWidgets((7, 2, 9)), ws, (400, 600))
    assert [(m.marker_id, m.widget_id) for m in marks] == [(1, 7), (2, 2), (3, 9)]
    assert assign_marks(OrderedWidgets(()), [], (400, 600)) == []


def test_anchor_clamped_on_canvas():
    size = (400, 600)
    for box in [(0, 0, 50, 50), (395, 595, 400, 600), (390, 0, 400, 10)]:
        w = W(0, text="x", box=box)
        [m] = assign_marks(OrderedWidgets((0,)), [w], size)
        x1, y1, x2, y2 = label_box(m, size)
        assert 0 <= x1 and 0 <= y1 and x2 <= size[0] and y2 <= size[1]
    # room above: label sits directly over the widget's top-left corner
    w = W(0, text="x", box=(100, 200, 200, 260))
    [m] = assign_marks(OrderedWidgets((0,)), [w], size)
    assert m.label_anchor[0] == 100 and label_box(m, size)[3] == 200


def test_zero_marks_is_identity():
    img = noise_image(random.Random(1), (64, 64))
    assert render_overlay(img, [], []).tobytes() == img.tobytes()


def test_one_mark_touches_only_stroke_and_label():
    img = Image.new("RGB", (300, 300), (255, 255, 255))
    w = W(0, "Button", "Go", (50, 80, 200, 160), clickable=True)
    marks = [Mark(1, 0, (50, 40))]
    out = render_overlay(img, marks, [w])
    assert changed_outside(img, out, allowed_mask(img.size, marks, [w])) is None
    # the stroke is actually there, and the interior is untouched
    assert out.getpixel((50, 120)) != (255, 255, 255)
    assert out.getpixel((125, 120)) == (255, 255, 255)


def test_image_too_small():
    with pytest.raises(ImageTooSmall):
        render_overlay(Image.new("RGB", (7, 7)), [], [])
    render_overlay(Image.new("RGB", (8, 8)), [], [])


def test_input_image_not_mutated():
    t, ordered, ws = random_fixture(4)
    before = t.image.tobytes()
    build_markset(t, ordered, ws)
    assert t.image.tobytes() == before


@pytest.mark.parametrize("seed", range(20))
def test_markset_properties(seed):
    t, ordered, ws = random_fixture(seed)
    ms = build_markset(t, ordered, ws)
    by_id = {w.id: w for w in ws}
    assert [m.marker_id for m in ms.marks] == list(range(1, len(ws) + 1))
    assert sorted(m.widget_id for m in ms.marks) == sorted(by_id)
    assert len(ms.mapping.entries) == len(ordered.sequence)
    for m, e in zip(ms.marks, ms.mapping.entries):
        w = by_id[m.widget_id]
        assert e.marker == m.marker_id
        assert (e.type, e.text, e.bounds, e.clickable) == (
            w.widget_type, w.text, w.bounds, w.clickable)
        assert ms.widget_for_marker(m.marker_id) is w
    assert MappingTable.loads(ms.mapping.dumps()) == ms.mapping
    assert changed_outside(t.image, ms.marked_image, allowed_mask(t.image.size, ms.marks, ws)) is None
    again = build_markset(t, ordered, ws)
    assert png_bytes(again.marked_image) == png_bytes(ms.marked_image)


def test_save_png_and_path(tmp_path):
    t, ordered, ws = random_fixture(2)
    ms = build_markset(t, ordered, ws)
    p = som_path_for(tmp_path / "screen.png")
    assert p.name == "screen.som.png"
    save_png(ms.marked_image, p)
    q = tmp_path / "again.png"
    save_png(build_markset(t, ordered, ws).marked_image, q)
    assert p.read_bytes() == q.read_bytes()
