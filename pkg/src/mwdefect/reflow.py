"""Synthetic multi-window reflow: layouts, window operations and labelled corpora.

Widgets are rigid: they keep their intrinsic size whatever the window does,
so shrinking a window pushes them past its edges or onto each other. Those
collisions are the ground-truth defects, computed here straight from the
geometry with the same thresholds the geometric oracle uses.
"""

from __future__ import annotations

import enum
import json
import math
import random
from dataclasses import dataclass, field, replace
from itertools import combinations
from pathlib import Path
from typing import Any, Union

from PIL import Image, ImageDraw

from .config import Config, FilterConfig, OracleConfig, ReflowConfig
from .evidence import (Bounds, EvidenceTriplet, RuntimeContext, Widget, WindowMode,
                       widget_to_view)
from .filtering import dedup_widgets, filter_widgets
from .reason.report import DefectType, TruthLabel, dumps_truth
from .som import save_png


class DegenerateWindow(ValueError):
    pass


class InvalidOp(ValueError):
    pass


class Anchor(str, enum.Enum):
    TOP_LEFT = "TopLeft"
    TOP_RIGHT = "TopRight"
    BOTTOM_LEFT = "BottomLeft"
    BOTTOM_RIGHT = "BottomRight"
    CENTER = "Center"
    FILL_WIDTH = "FillWidth"


@dataclass(frozen=True)
class LayoutNode:
    name: str
    widget_type: str
    intrinsic_size: tuple[int, int]
    anchor: Anchor
    margin: tuple[int, int] = (0, 0)  # (horizontal, vertical) offset from the anchor edges
    text: str | None = None
    image_content: bool | None = None
    clickable: bool | None = None  # None: infer from the interactive types

    def __post_init__(self) -> None:
        if isinstance(self.margin, int):
            object.__setattr__(self, "margin", (self.margin, self.margin))
        if min(self.intrinsic_size) <= 0:
            raise ValueError(f"{self.name}: intrinsic size must be positive")

    def to_json(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "name": self.name, "widget_type": self.widget_type,
            "intrinsic_size": list(self.intrinsic_size), "anchor": self.anchor.value,
            "margin": list(self.margin),
        }
        for key in ("text", "image_content", "clickable"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        return d

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> LayoutNode:
        margin = d.get("margin", 0)
        return cls(
            name=d["name"], widget_type=d["widget_type"],
            intrinsic_size=tuple(d["intrinsic_size"]), anchor=Anchor(d["anchor"]),
            margin=margin if isinstance(margin, int) else tuple(margin),
            text=d.get("text"), image_content=d.get("image_content"),
            clickable=d.get("clickable"),
        )


@dataclass(frozen=True)
class LayoutSpec:
    widgets: tuple[LayoutNode, ...]
    base_window: tuple[int, int]

    def __post_init__(self) -> None:
        names = [n.name for n in self.widgets]
        if len(set(names)) != len(names):
            raise ValueError("layout node names must be unique")

    def to_json(self) -> dict[str, Any]:
        return {"base_window": list(self.base_window),
                "widgets": [n.to_json() for n in self.widgets]}

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> LayoutSpec:
        return cls(tuple(LayoutNode.from_json(n) for n in d["widgets"]), tuple(d["base_window"]))


def _place(node: LayoutNode, win: Bounds) -> tuple[int, int, int, int]:
    w, h = node.intrinsic_size
    mx, my = node.margin
    a = node.anchor
    if a is Anchor.TOP_LEFT:
        x1, y1 = win.x1 + mx, win.y1 + my
    elif a is Anchor.TOP_RIGHT:
        x1, y1 = win.x2 - mx - w, win.y1 + my
    elif a is Anchor.BOTTOM_LEFT:
        x1, y1 = win.x1 + mx, win.y2 - my - h
    elif a is Anchor.BOTTOM_RIGHT:
        x1, y1 = win.x2 - mx - w, win.y2 - my - h
    elif a is Anchor.CENTER:
        x1, y1 = win.x1 + (win.width - w) // 2, win.y1 + (win.height - h) // 2
    else:  # FILL_WIDTH stretches but never below the intrinsic width
        w = max(w, win.width - 2 * mx)
        x1, y1 = win.x1 + mx, win.y1 + my
    return x1, y1, x1 + w, y1 + h


def reflow(spec: LayoutSpec, window: Bounds, app_id: str = "app",
           filter_cfg: FilterConfig = FilterConfig()) -> list[Widget]:
    """Place every node inside ``window``.

    Boxes may run past the window; only the screen origin clips them, since
    hierarchy coordinates cannot be negative. A widget with no area inside
    the window is marked invisible.
    """
    if window.width <= 0 or window.height <= 0:
        raise DegenerateWindow(f"window {window.as_list()} has no area")
    widgets = []
    for i, node in enumerate(spec.widgets):
        x1, y1, x2, y2 = (max(0, c) for c in _place(node, window))
        b = Bounds(x1, y1, x2, y2)
        clickable = (node.clickable if node.clickable is not None
                     else node.widget_type in filter_cfg.interactive_types)
        widgets.append(Widget(
            id=i, widget_type=node.widget_type, text=node.text, bounds=b,
            clickable=clickable, resource_id=f"{app_id}:id/{node.name}",
            visible=b.intersection(window) is not None,
            content_present=node.image_content, document_order=i,
        ))
    return widgets


@dataclass(frozen=True)
class SplitTest:
    ratio: float

    def __post_init__(self) -> None:
        if not 0 < self.ratio < 1:
            raise InvalidOp(f"split ratio {self.ratio} outside (0, 1)")

    @property
    def label(self) -> str:
        return f"split_{self.ratio:g}"


@dataclass(frozen=True)
class FoldTest:
    folded: bool = True

    @property
    def label(self) -> str:
        return "fold_folded" if self.folded else "fold_unfolded"


@dataclass(frozen=True)
class DragUp:
    delta: int

    def __post_init__(self) -> None:
        if self.delta <= 0:
            raise InvalidOp("drag delta must be positive")

    @property
    def label(self) -> str:
        return f"drag_up_{self.delta}"


@dataclass(frozen=True)
class DragDown:
    delta: int

    def __post_init__(self) -> None:
        if self.delta <= 0:
            raise InvalidOp("drag delta must be positive")

    @property
    def label(self) -> str:
        return f"drag_down_{self.delta}"


WindowOp = Union[SplitTest, FoldTest, DragUp, DragDown]


def parse_op(text: str) -> WindowOp:
    """``split:0.5``, ``fold``, ``unfold``, ``drag_up:300``, ``drag_down:150``."""
    name, _, arg = text.strip().partition(":")
    name = name.lower().replace("-", "_")
    try:
        if name == "split":
            return SplitTest(float(arg))
        if name in ("fold", "folded"):
            return FoldTest(True)
        if name in ("unfold", "unfolded"):
            return FoldTest(False)
        if name == "drag_up":
            return DragUp(int(arg))
        if name == "drag_down":
            return DragDown(int(arg))
    except ValueError as exc:
        raise InvalidOp(f"bad window op {text!r}: {exc}") from exc
    raise InvalidOp(f"unknown window op {text!r}")


def apply_window_op(ctx: RuntimeContext, op: WindowOp,
                    cfg: ReflowConfig = ReflowConfig()) -> RuntimeContext:
    sw, sh = ctx.screen_size
    if isinstance(op, SplitTest):
        height = math.floor(op.ratio * sh + 0.5)
        return replace(ctx, window_mode=WindowMode.SPLIT_SCREEN, split_ratio=op.ratio,
                       window_bounds=Bounds(0, 0, sw, height))
    if isinstance(op, FoldTest):
        size = cfg.folded_size if op.folded else cfg.unfolded_size
        mode = WindowMode.FOLDED if op.folded else WindowMode.UNFOLDED
        return replace(ctx, screen_size=tuple(size), window_mode=mode, split_ratio=None,
                       window_bounds=Bounds(0, 0, *size))
    if isinstance(op, (DragUp, DragDown)):
        win = ctx.window_bounds
        shift = -op.delta if isinstance(op, DragUp) else op.delta
        y2 = min(win.y2 + shift, sh)
        if y2 - win.y1 < cfg.min_window_frac * sh:
            raise InvalidOp(f"{op.label}: window would be {y2 - win.y1}px tall, "
                            f"minimum is {cfg.min_window_frac:.0%} of {sh}px")
        new_win = Bounds(win.x1, win.y1, win.x2, y2)
        if ctx.window_mode is WindowMode.SPLIT_SCREEN:
            ratio = new_win.height / sh
            if ratio < 1:
                return replace(ctx, window_bounds=new_win, split_ratio=ratio)
            return replace(ctx, window_bounds=new_win, split_ratio=None,
                           window_mode=WindowMode.FULL_SCREEN)
        if new_win == ctx.screen_rect:
            return replace(ctx, window_bounds=new_win)
        return replace(ctx, window_bounds=new_win, window_mode=WindowMode.FREEFORM)
    raise InvalidOp(f"unsupported window op {op!r}")


def _truth_pair_kind(a: Widget, b: Widget, cfg: OracleConfig,
                     interactive: frozenset[str]) -> DefectType | None:
    """Classify the pair where ``b`` is drawn over ``a``."""
    inter = a.bounds.intersection_area(b.bounds)
    if inter == 0:
        return None
    area_a, area_b = a.bounds.area, b.bounds.area
    if inter / area_a >= cfg.containment_ratio or inter / area_b >= cfg.containment_ratio:
        return None
    if a.has_text and b.has_text:
        if inter / min(area_a, area_b) > cfg.text_overlap_ratio:
            return DefectType.TEXT_OVERLAP
        return None
    if not (a.has_text or a.clickable or a.widget_type in interactive):
        return None
    if inter / area_a < cfg.occlusion_coverage:
        return None
    if b.has_text:
        return DefectType.TEXT_OVER_WIDGET
    if a.has_text:
        return DefectType.WIDGET_OVER_TEXT
    return DefectType.WIDGET_OVER_WIDGET


def ground_truth(spec: LayoutSpec, widgets: list[Widget], ctx: RuntimeContext,
                 config: Config = Config()) -> list[TruthLabel]:
    """Defects implied by the geometry of ``widgets`` (output of :func:`reflow`)."""
    cfg = config.oracle
    interactive = config.filter.interactive_types
    names = {w.id: spec.widgets[w.id].name for w in widgets}
    kept = dedup_widgets(filter_widgets(widgets, config.filter))
    labels: list[TruthLabel] = []
    win = ctx.window_bounds
    slack = cfg.clip_slack_px

    for w in kept:
        if not w.has_text:
            continue
        b = w.bounds
        over = {"bottom": b.y2 - win.y2, "top": win.y1 - b.y1,
                "left": win.x1 - b.x1, "right": b.x2 - win.x2}
        if over["bottom"] > slack:
            labels.append(TruthLabel(DefectType.TEXT_TRUNCATION_BOTTOM, (names[w.id],)))
        elif over["top"] > slack:
            labels.append(TruthLabel(DefectType.TEXT_TRUNCATION_TOP, (names[w.id],)))
        elif over["left"] > slack or over["right"] > slack:
            labels.append(TruthLabel(DefectType.TEXT_TRUNCATION_SIDE, (names[w.id],)))

    z_sorted = sorted(kept, key=lambda w: w.document_order)
    for a, b in combinations(z_sorted, 2):
        kind = _truth_pair_kind(a, b, cfg, interactive)
        if kind is not None:
            labels.append(TruthLabel(kind, (names[a.id], names[b.id])))

    for w in kept:
        if "Image" in w.widget_type and w.content_present is False:
            labels.append(TruthLabel(DefectType.MISSING_IMAGE, (names[w.id],)))

    sw, sh = ctx.screen_size
    visible_in_window = [w for w in kept if w.bounds.intersection(win) is not None]
    if (len(visible_in_window) <= cfg.null_display_max_widgets
            and win.area >= cfg.null_display_min_window_frac * (sw * sh)):
        labels.append(TruthLabel(DefectType.NULL_DISPLAY, ()))

    inset = ctx.system_inset_bottom
    if inset > 0:
        for w in kept:
            if not (w.clickable or w.widget_type in interactive):
                continue
            b = w.bounds
            if min(b.y2, sh) - max(b.y1, sh - inset) > cfg.navbar_slack_px and min(b.x2, sw) > b.x1:
                labels.append(TruthLabel(DefectType.NAV_BAR_OVERLAP, (names[w.id],)))

    return sorted(labels, key=lambda t: (t.defect_type.rank, t.names))


# flat palette for synthetic screenshots
_BACKDROP = (38, 38, 44)
_WINDOW_BG = (246, 246, 248)
_FILL = {
    "interactive": (120, 170, 235),
    "text": (225, 225, 232),
    "image": (150, 205, 160),
    "other": (205, 200, 190),
}
_INK = (60, 60, 70)


def _fill_for(w: Widget, interactive: frozenset[str]) -> tuple[int, int, int]:
    if w.widget_type in interactive or w.clickable:
        return _FILL["interactive"]
    if "Text" in w.widget_type:
        return _FILL["text"]
    if "Image" in w.widget_type:
        return _FILL["image"]
    return _FILL["other"]


def render_synthetic(widgets: list[Widget], ctx: RuntimeContext,
                     filter_cfg: FilterConfig = FilterConfig()) -> Image.Image:
    """Flat-colour screenshot: window backdrop, widget boxes, hatched text."""
    img = Image.new("RGB", ctx.screen_size, _BACKDROP)
    draw = ImageDraw.Draw(img)
    win = ctx.window_bounds
    draw.rectangle((win.x1, win.y1, win.x2 - 1, win.y2 - 1), fill=_WINDOW_BG)
    for w in sorted(widgets, key=lambda w: w.document_order):
        if not w.visible:
            continue
        clip = w.bounds.intersection(win)
        if clip is None:
            continue
        draw.rectangle((clip.x1, clip.y1, clip.x2 - 1, clip.y2 - 1),
                       fill=_fill_for(w, filter_cfg.interactive_types))
        b = w.bounds
        if w.has_text:
            # text as a hatch of horizontal strokes over the middle of the box
            top, bottom = b.y1 + b.height // 5, b.y2 - b.height // 5
            for y in range(top, bottom, 8):
                seg = Bounds(b.x1 + 8, y, max(b.x1 + 8, b.x2 - 8), y + 3).intersection(win)
                if seg is not None:
                    draw.rectangle((seg.x1, seg.y1, seg.x2 - 1, seg.y2 - 1), fill=_INK)
        elif "Image" in w.widget_type and w.content_present is not False:
            for y in range(b.y1, b.y2, 12):
                seg = Bounds(b.x1, y, b.x2, min(y + 6, b.y2)).intersection(clip)
                if seg is not None:
                    draw.rectangle((seg.x1, seg.y1, seg.x2 - 1, seg.y2 - 1), fill=(90, 150, 100))
    return img


@dataclass(frozen=True)
class LabelledTriplet:
    triplet: EvidenceTriplet
    truth: tuple[TruthLabel, ...]
    spec: LayoutSpec
    layout_id: str
    state_id: str
    reflowed: tuple[Widget, ...] = field(default=(), compare=False)

    @property
    def key(self) -> str:
        return f"{self.layout_id}/{self.state_id}"


_WORDS = ("Inbox", "Settings", "Profile", "Downloads", "Music", "Photos", "Library",
          "Notifications", "Storage", "Privacy", "Accounts", "Display", "Sound",
          "Battery", "Network", "Calendar", "Contacts", "Backup", "Language", "About")


def random_layout(rng: random.Random, base: tuple[int, int]) -> LayoutSpec:
    """A phone-style screen: app bar, optional search field, list rows, bottom bar."""
    W, H = base
    nodes: list[LayoutNode] = []
    words = list(_WORDS)
    rng.shuffle(words)

    def word(i: int) -> str:
        return f"{words[i % len(words)]} {i}"

    if rng.random() < 0.06:
        nodes.append(LayoutNode("loading", "TextView", (rng.randint(200, 420), 80),
                                Anchor.CENTER, text="Loading"))
        return LayoutSpec(tuple(nodes), base)

    title_w = rng.randint(360, 1000)
    nodes.append(LayoutNode("title", "TextView", (title_w, 96), Anchor.TOP_LEFT, (40, 40),
                            text=f"{words[0]} center"))
    for k in range(rng.randint(1, 2)):
        nodes.append(LayoutNode(f"action{k}", "ImageButton", (96, 96), Anchor.TOP_RIGHT,
                                (40 + 128 * k, 40), image_content=rng.random() > 0.08))
    if rng.random() < 0.5:
        nodes.append(LayoutNode("search", "EditText", (rng.randint(700, 1400), 100),
                                Anchor.FILL_WIDTH, (40, 176), text="Search"))

    row_h = rng.choice((120, 140, 160))
    gap = rng.choice((16, 24, 32))
    n_rows = rng.randint(3, 9)
    y = 320
    i = 0
    while y <= 1500 and i < n_rows:
        x = 40
        if rng.random() < 0.3:
            nodes.append(LayoutNode(f"row{i}_thumb", "ImageView", (row_h, row_h), Anchor.TOP_LEFT,
                                    (x, y), image_content=rng.random() > 0.1, clickable=True))
            x += row_h + 24
        nodes.append(LayoutNode(f"row{i}_label", "TextView", (rng.randint(360, 1000), row_h),
                                Anchor.TOP_LEFT, (x, y), text=word(i + 1)))
        control = rng.choice(("switch", "button", "none"))
        if control == "switch":
            nodes.append(LayoutNode(f"row{i}_switch", "Switch", (140, 80), Anchor.TOP_RIGHT,
                                    (40, y + (row_h - 80) // 2)))
        elif control == "button":
            nodes.append(LayoutNode(f"row{i}_button", "Button", (rng.randint(200, 360), row_h - 20),
                                    Anchor.TOP_RIGHT, (40, y + 10), text=f"Open {i + 1}"))
        y += row_h + gap
        i += 1

    if rng.random() < 0.2:
        nodes.append(LayoutNode("marquee", "TextView", (rng.randint(W - 20, W + 200), 72),
                                Anchor.TOP_LEFT, (40, 1580), text="Breaking news ticker"))
    if rng.random() < 0.15:
        nodes.append(LayoutNode("badge", "TextView", (120, 60), Anchor.TOP_LEFT,
                                (40 + title_w - 60, 60), text="99+"))
    if rng.random() < 0.15:
        nodes.append(LayoutNode("promo", "ImageView", (600, 300), Anchor.CENTER,
                                image_content=True, clickable=True))

    nodes.append(LayoutNode("nav_left", "Button", (rng.randint(300, 600), 130),
                            Anchor.BOTTOM_LEFT, (40, 40), text="Cancel"))
    nodes.append(LayoutNode("nav_right", "Button", (rng.randint(300, 600), 130),
                            Anchor.BOTTOM_RIGHT, (40, 40), text="Continue"))
    if rng.random() < 0.5:
        nodes.append(LayoutNode("fab", "ImageButton", (168, 168), Anchor.BOTTOM_RIGHT,
                                (48, 220), image_content=True))
    return LayoutSpec(tuple(nodes), base)


DEFAULT_OPS: tuple[WindowOp, ...] = (
    SplitTest(0.3), SplitTest(0.5), FoldTest(True), DragUp(400), DragDown(200),
)

_TIME_BASE = "2024-01-01T{h:02d}:{m:02d}:{s:02d}Z"


def _timestamp(layout: int, state: int) -> str:
    total = layout * 60 + state
    return _TIME_BASE.format(h=(total // 3600) % 24, m=(total // 60) % 60, s=total % 60)


def hierarchy_bytes(widgets: list[Widget], window: Bounds) -> bytes:
    """DroidBot-style dump with a root container spanning the window."""
    root_id = len(widgets)
    root = Widget(root_id, "FrameLayout", None, window)
    views = [widget_to_view(root, [w.id for w in widgets])]
    views += [widget_to_view(w) for w in widgets]
    return json.dumps({"views": views}, indent=1, sort_keys=True).encode("utf-8")


def write_labelled(lt: LabelledTriplet, corpus_dir: str | Path) -> Path:
    d = Path(corpus_dir) / lt.layout_id / lt.state_id
    d.mkdir(parents=True, exist_ok=True)
    save_png(lt.triplet.image, d / "screen.png")
    (d / "hierarchy.json").write_bytes(hierarchy_bytes(list(lt.reflowed),
                                                       lt.triplet.context.window_bounds))
    (d / "context.json").write_text(
        json.dumps(lt.triplet.context.to_json(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
    (d / "truth.json").write_text(dumps_truth(list(lt.truth)), encoding="utf-8")
    return d


def labelled_state(spec: LayoutSpec, ctx: RuntimeContext, layout_id: str, state_id: str,
                   config: Config = Config()) -> LabelledTriplet:
    widgets = reflow(spec, ctx.window_bounds, ctx.app_id, config.filter)
    image = render_synthetic(widgets, ctx, config.filter)
    return LabelledTriplet(
        triplet=EvidenceTriplet(image, tuple(widgets), ctx, source=f"{layout_id}/{state_id}"),
        truth=tuple(ground_truth(spec, widgets, ctx, config)),
        spec=spec, layout_id=layout_id, state_id=state_id, reflowed=tuple(widgets),
    )


def generate_corpus(seed: int, n_layouts: int, ops_per_layout: list[WindowOp] | tuple = DEFAULT_OPS,
                    out_dir: str | Path | None = None,
                    config: Config = Config()) -> list[LabelledTriplet]:
    """Seeded corpus: per layout one full-screen state plus one state per op.

    Ops are applied in sequence, like an exploration session. A drag the
    window cannot take is skipped for that layout. When ``out_dir`` is given
    every state is also written under ``<layout>/<state>/``.
    """
    if n_layouts <= 0:
        raise ValueError("n_layouts must be positive")
    rng = random.Random(seed)
    base = tuple(config.reflow.unfolded_size)
    out: list[LabelledTriplet] = []
    for li in range(n_layouts):
        spec = random_layout(rng, base)
        layout_id = f"L{li:04d}"
        app_id = f"com.synth.app{li:04d}"
        ctx = RuntimeContext(app_id=app_id, activity=f"{app_id}.MainActivity",
                             window_mode=WindowMode.FULL_SCREEN,
                             window_bounds=Bounds(0, 0, *base), screen_size=base,
                             system_inset_bottom=config.reflow.system_inset_bottom,
                             timestamp=_timestamp(li, 0))
        states = [("s00_fullscreen", ctx)]
        for k, op in enumerate(ops_per_layout, start=1):
            try:
                ctx = apply_window_op(ctx, op, config.reflow)
            except InvalidOp:
                continue
            ctx = replace(ctx, timestamp=_timestamp(li, k))
            states.append((f"s{k:02d}_{op.label}", ctx))
        if out_dir is not None:
            layout_dir = Path(out_dir) / layout_id
            layout_dir.mkdir(parents=True, exist_ok=True)
            (layout_dir / "layout.json").write_text(
                json.dumps(spec.to_json(), indent=1, sort_keys=True) + "\n", encoding="utf-8")
        for state_id, sctx in states:
            lt = labelled_state(spec, sctx, layout_id, state_id, config)
            if out_dir is not None:
                write_labelled(lt, out_dir)
            out.append(lt)
    return out


def load_layout(path: str | Path) -> LayoutSpec:
    return LayoutSpec.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
