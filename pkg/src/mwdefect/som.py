"""Set-of-Mark construction: numbered markers, overlay image and mapping table."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any

from PIL import Image, ImageDraw, ImageFont

from .config import FilterConfig
from .evidence import Bounds, EvidenceTriplet, Widget
from .layout import OrderedWidgets

STROKE_PX = 2
LABEL_PAD_PX = 3
MIN_IMAGE_PX = 8

CATEGORY_COLORS = {
    "interactive": (230, 57, 70),
    "text": (29, 111, 220),
    "image": (46, 160, 67),
    "other": (245, 159, 0),
}
LABEL_TEXT_COLOR = (255, 255, 255)


class ImageTooSmall(ValueError):
    pass


@dataclass(frozen=True)
class Mark:
    marker_id: int
    widget_id: int
    label_anchor: tuple[int, int]


@dataclass(frozen=True)
class MappingEntry:
    marker: int
    type: str
    text: str | None
    bounds: Bounds
    clickable: bool

    def to_json(self) -> dict[str, Any]:
        return {"marker": self.marker, "type": self.type, "text": self.text,
                "bounds": self.bounds.as_list(), "clickable": self.clickable}

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> MappingEntry:
        return cls(int(d["marker"]), str(d["type"]), d.get("text"),
                   Bounds.from_json(d["bounds"]), bool(d["clickable"]))


@dataclass(frozen=True)
class MappingTable:
    entries: tuple[MappingEntry, ...]

    @property
    def markers(self) -> set[int]:
        return {e.marker for e in self.entries}

    def to_json(self) -> list[dict[str, Any]]:
        return [e.to_json() for e in self.entries]

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, ensure_ascii=False)

    @classmethod
    def loads(cls, raw: str | bytes) -> MappingTable:
        return cls(tuple(MappingEntry.from_json(d) for d in json.loads(raw)))


@dataclass(frozen=True)
class MarkSet:
    raw_image: Image.Image
    marked_image: Image.Image
    mapping: MappingTable
    marks: tuple[Mark, ...]
    # retained widgets in marker order; marks[k].widget_id == widgets[k].id
    widgets: tuple[Widget, ...]

    def widget_for_marker(self, marker_id: int) -> Widget:
        return self.widgets[marker_id - 1]


def widget_category(w: Widget, cfg: FilterConfig = FilterConfig()) -> str:
    if w.widget_type in cfg.interactive_types:
        return "interactive"
    if "Text" in w.widget_type:
        return "text"
    if "Image" in w.widget_type:
        return "image"
    return "other"


@lru_cache(maxsize=8)
def _font(size: int) -> ImageFont.FreeTypeFont | ImageFont.ImageFont:
    return ImageFont.load_default(size=size)


def _font_size(image_size: tuple[int, int]) -> int:
    return max(12, image_size[0] // 60)


def label_size(marker_id: int, image_size: tuple[int, int]) -> tuple[int, int]:
    """Pixel size of the filled label box for ``marker_id``."""
    _, _, right, bottom = _font(_font_size(image_size)).getbbox(str(marker_id))
    return right + 2 * LABEL_PAD_PX, bottom + 2 * LABEL_PAD_PX


def label_box(mark: Mark, image_size: tuple[int, int]) -> tuple[int, int, int, int]:
    """Label rectangle as exclusive ``(x1, y1, x2, y2)``."""
    w, h = label_size(mark.marker_id, image_size)
    x, y = mark.label_anchor
    return x, y, x + w, y + h


def _anchor(marker_id: int, b: Bounds, image_size: tuple[int, int]) -> tuple[int, int]:
    # sits just above the widget's top-left corner, pulled back onto the canvas
    lw, lh = label_size(marker_id, image_size)
    x = min(max(b.x1, 0), max(image_size[0] - lw, 0))
    y = min(max(b.y1 - lh, 0), max(image_size[1] - lh, 0))
    return x, y


def assign_marks(ordered: OrderedWidgets, widgets: list[Widget],
                 image_size: tuple[int, int]) -> list[Mark]:
    by_id = {w.id: w for w in widgets}
    return [Mark(k, wid, _anchor(k, by_id[wid].bounds, image_size))
            for k, wid in enumerate(ordered.sequence, start=1)]


def render_overlay(image: Image.Image, marks: list[Mark], widgets: list[Widget],
                   cfg: FilterConfig = FilterConfig()) -> Image.Image:
    if image.width < MIN_IMAGE_PX or image.height < MIN_IMAGE_PX:
        raise ImageTooSmall(f"image {image.size} smaller than {MIN_IMAGE_PX}x{MIN_IMAGE_PX}")
    out = image.convert("RGB")
    if out is image:
        out = image.copy()
    if not marks:
        return out
    by_id = {w.id: w for w in widgets}
    draw = ImageDraw.Draw(out)
    font = _font(_font_size(out.size))
    for mark in marks:
        w = by_id[mark.widget_id]
        color = CATEGORY_COLORS[widget_category(w, cfg)]
        b = w.bounds
        if b.width > 0 and b.height > 0:
            draw.rectangle((b.x1, b.y1, b.x2 - 1, b.y2 - 1), outline=color, width=STROKE_PX)
    # labels last so boxes never cut through a number
    for mark in marks:
        w = by_id[mark.widget_id]
        color = CATEGORY_COLORS[widget_category(w, cfg)]
        x1, y1, x2, y2 = label_box(mark, out.size)
        draw.rectangle((x1, y1, x2 - 1, y2 - 1), fill=color)
        draw.text((x1 + LABEL_PAD_PX, y1 + LABEL_PAD_PX), str(mark.marker_id),
                  fill=LABEL_TEXT_COLOR, font=font)
    return out


def build_mapping(marks: list[Mark], widgets: list[Widget]) -> MappingTable:
    by_id = {w.id: w for w in widgets}
    return MappingTable(tuple(
        MappingEntry(m.marker_id, by_id[m.widget_id].widget_type, by_id[m.widget_id].text,
                     by_id[m.widget_id].bounds, by_id[m.widget_id].clickable)
        for m in marks
    ))


def build_markset(triplet: EvidenceTriplet, ordered: OrderedWidgets, widgets: list[Widget],
                  cfg: FilterConfig = FilterConfig()) -> MarkSet:
    marks = assign_marks(ordered, widgets, triplet.image.size)
    by_id = {w.id: w for w in widgets}
    return MarkSet(
        raw_image=triplet.image,
        marked_image=render_overlay(triplet.image, marks, widgets, cfg),
        mapping=build_mapping(marks, widgets),
        marks=tuple(marks),
        widgets=tuple(by_id[m.widget_id] for m in marks),
    )


def som_path_for(image_path: str | Path) -> Path:
    """``screen.png`` -> ``screen.som.png`` in the same directory."""
    p = Path(image_path)
    return p.with_name(p.stem + ".som.png")


def save_png(image: Image.Image, path: str | Path) -> None:
    image.save(path, format="PNG", compress_level=1)
