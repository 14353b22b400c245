from __future__ import annotations

import json
from pathlib import Path

import pytest
from PIL import Image

from mwdefect.evidence import Bounds, RuntimeContext, Widget, WindowMode


def W(id, type_="TextView", text=None, box=(0, 0, 100, 40), *, clickable=False, rid=None,
      visible=True, content=None, order=None):
    return Widget(id=id, widget_type=type_, text=text, bounds=Bounds(*box), clickable=clickable,
                  resource_id=rid, visible=visible, content_present=content,
                  document_order=id if order is None else order)


def ctx_for(window=(0, 0, 1080, 1920), screen=(1080, 1920), mode=WindowMode.FULL_SCREEN,
            ratio=None, inset=0, app="com.example.app"):
    return RuntimeContext(app_id=app, activity=f"{app}.Main", window_mode=mode,
                          window_bounds=Bounds(*window), screen_size=screen,
                          system_inset_bottom=inset, split_ratio=ratio)


def view(tid, cls="android.widget.TextView", bounds=((0, 0), (10, 10)), children=(), **extra):
    d = {"temp_id": tid, "class": cls, "children": list(children)}
    if bounds is not None:
        d["bounds"] = [list(p) for p in bounds]
    d.update(extra)
    return d


def write_triplet(d: Path, views: list[dict], ctx: RuntimeContext, image_size=None) -> Path:
    d.mkdir(parents=True, exist_ok=True)
    Image.new("RGB", image_size or ctx.screen_size, (250, 250, 250)).save(d / "screen.png")
    (d / "hierarchy.json").write_text(json.dumps({"views": views}))
    (d / "context.json").write_text(json.dumps(ctx.to_json()))
    return d


@pytest.fixture
def small_ctx():
    return ctx_for((0, 0, 400, 600), (400, 600))


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
