"""Evidence triplets: screenshot, UI hierarchy and runtime context.

Hierarchy files follow the DroidBot ``views`` layout::

    {"views": [{"temp_id": 0, "class": "FrameLayout", "bounds": [[0, 0], [1080, 1920]],
                "children": [1, 2], ...}, ...]}

Everything here is immutable once built, so triplets can be shared across
worker threads.
"""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from PIL import Image

log = logging.getLogger(__name__)


class EvidenceError(Exception):
    """Base class for evidence parsing and validation failures."""


class MalformedDocument(EvidenceError):
    pass


class MissingBounds(EvidenceError):
    pass


class DimensionMismatch(EvidenceError):
    pass


class ContextInvalid(EvidenceError):
    pass


@dataclass(frozen=True, order=True)
class Bounds:
    x1: int
    y1: int
    x2: int
    y2: int

    def __post_init__(self) -> None:
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise ValueError(f"inverted bounds {self.as_list()}")
        if min(self.x1, self.y1) < 0:
            raise ValueError(f"negative bounds {self.as_list()}")

    @property
    def width(self) -> int:
        return self.x2 - self.x1

    @property
    def height(self) -> int:
        return self.y2 - self.y1

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x1 + self.x2) / 2, (self.y1 + self.y2) / 2)

    def intersection(self, other: Bounds) -> Bounds | None:
        x1, y1 = max(self.x1, other.x1), max(self.y1, other.y1)
        x2, y2 = min(self.x2, other.x2), min(self.y2, other.y2)
        if x2 <= x1 or y2 <= y1:
            return None
        return Bounds(x1, y1, x2, y2)

    def intersection_area(self, other: Bounds) -> int:
        inter = self.intersection(other)
        return inter.area if inter else 0

    def contains(self, other: Bounds) -> bool:
        return (self.x1 <= other.x1 and self.y1 <= other.y1
                and other.x2 <= self.x2 and other.y2 <= self.y2)

    def translated(self, dx: int, dy: int) -> Bounds:
        return Bounds(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)

    def as_list(self) -> list[int]:
        return [self.x1, self.y1, self.x2, self.y2]

    def as_pairs(self) -> list[list[int]]:
        return [[self.x1, self.y1], [self.x2, self.y2]]

    @classmethod
    def from_json(cls, raw: Any) -> Bounds:
        """Accept ``[[x1, y1], [x2, y2]]`` or ``[x1, y1, x2, y2]``."""
        if isinstance(raw, list) and len(raw) == 2 and all(isinstance(p, list) for p in raw):
            coords = [*raw[0], *raw[1]]
        else:
            coords = raw
        if not isinstance(coords, list) or len(coords) != 4:
            raise ValueError(f"bad bounds encoding: {raw!r}")
        if not all(isinstance(c, int) and not isinstance(c, bool) for c in coords):
            raise ValueError(f"non-integer bounds: {raw!r}")
        return cls(*coords)


@dataclass(frozen=True)
class Widget:
    id: int
    widget_type: str
    text: str | None
    bounds: Bounds
    clickable: bool = False
    resource_id: str | None = None
    visible: bool = True
    content_present: bool | None = None
    document_order: int = 0

    @property
    def has_text(self) -> bool:
        return self.text is not None and self.text.strip() != ""

    @property
    def is_image(self) -> bool:
        return "Image" in self.widget_type


class WindowMode(str, enum.Enum):
    FULL_SCREEN = "FullScreen"
    SPLIT_SCREEN = "SplitScreen"
    FOLDED = "Folded"
    UNFOLDED = "Unfolded"
    FREEFORM = "Freeform"


@dataclass(frozen=True)
class RuntimeContext:
    app_id: str
    activity: str
    window_mode: WindowMode
    window_bounds: Bounds
    screen_size: tuple[int, int]
    system_inset_bottom: int = 0
    split_ratio: float | None = None
    timestamp: str = ""

    def __post_init__(self) -> None:
        w, h = self.screen_size
        if w <= 0 or h <= 0:
            raise ContextInvalid(f"screen size must be positive, got {self.screen_size}")
        if not self.screen_rect.contains(self.window_bounds):
            raise ContextInvalid(
                f"window {self.window_bounds.as_list()} exceeds screen {self.screen_size}")
        if (self.split_ratio is not None) != (self.window_mode is WindowMode.SPLIT_SCREEN):
            raise ContextInvalid(
                f"split_ratio={self.split_ratio} inconsistent with mode {self.window_mode.value}")
        if self.split_ratio is not None and not 0 < self.split_ratio < 1:
            raise ContextInvalid(f"split_ratio {self.split_ratio} outside (0, 1)")
        if self.system_inset_bottom < 0:
            raise ContextInvalid("system_inset_bottom must be >= 0")

    @property
    def screen_rect(self) -> Bounds:
        return Bounds(0, 0, *self.screen_size)

    def to_json(self) -> dict[str, Any]:
        return {
            "app_id": self.app_id,
            "activity": self.activity,
            "window_mode": self.window_mode.value,
            "window_bounds": self.window_bounds.as_list(),
            "screen_size": list(self.screen_size),
            "system_inset_bottom": self.system_inset_bottom,
            "split_ratio": self.split_ratio,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_json(cls, data: dict[str, Any]) -> RuntimeContext:
        try:
            mode = WindowMode(data["window_mode"])
            bounds = Bounds.from_json(data["window_bounds"])
            w, h = data["screen_size"]
            return cls(
                app_id=str(data["app_id"]),
                activity=str(data.get("activity", "")),
                window_mode=mode,
                window_bounds=bounds,
                screen_size=(int(w), int(h)),
                system_inset_bottom=int(data.get("system_inset_bottom", 0)),
                split_ratio=data.get("split_ratio"),
                timestamp=str(data.get("timestamp", "")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ContextInvalid(f"bad context: {exc}") from exc


@dataclass(frozen=True)
class EvidenceTriplet:
    image: Image.Image
    widgets: tuple[Widget, ...]
    context: RuntimeContext
    source: str = field(default="", compare=False)


def _short_class(name: str) -> str:
    return name.rsplit(".", 1)[-1]


def _node_bounds(node: dict[str, Any], temp_id: Any) -> Bounds:
    raw = node["bounds"]
    if isinstance(raw, list) and len(raw) == 2 and all(isinstance(p, list) for p in raw):
        coords = [*raw[0], *raw[1]]
    else:
        coords = raw
    if (not isinstance(coords, list) or len(coords) != 4
            or not all(isinstance(c, int) and not isinstance(c, bool) for c in coords)):
        raise MalformedDocument(f"node {temp_id}: bad bounds {raw!r}")
    x1, y1, x2, y2 = coords
    if x1 > x2 or y1 > y2:
        log.warning("node %s: inverted bounds %s, swapping", temp_id, coords)
        x1, x2 = sorted((x1, x2))
        y1, y2 = sorted((y1, y2))
    if min(x1, y1) < 0:
        log.warning("node %s: negative bounds %s, clamping to 0", temp_id, coords)
        x1, y1, x2, y2 = (max(0, c) for c in (x1, y1, x2, y2))
    return Bounds(x1, y1, x2, y2)


def _opt_str(value: Any) -> str | None:
    return None if value is None else str(value)


def parse_hierarchy(raw: bytes | str, *, strict: bool = False) -> list[Widget]:
    """Parse a ``views`` hierarchy document into widgets in DFS pre-order.

    Nodes without ``bounds`` are skipped with a warning (or raise
    :class:`MissingBounds` when ``strict``); their children are still visited.
    """
    try:
        doc = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MalformedDocument(f"hierarchy is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("views"), list):
        raise MalformedDocument("hierarchy must be an object with a 'views' array")

    nodes: dict[int, dict[str, Any]] = {}
    for node in doc["views"]:
        if not isinstance(node, dict):
            raise MalformedDocument(f"view entry is not an object: {node!r}")
        tid = node.get("temp_id")
        if not isinstance(tid, int) or isinstance(tid, bool):
            raise MalformedDocument(f"view without integer temp_id: {node!r}")
        if tid in nodes:
            raise MalformedDocument(f"duplicate temp_id {tid}")
        children = node.get("children") or []
        if not isinstance(children, list):
            raise MalformedDocument(f"node {tid}: children must be a list")
        nodes[tid] = node

    referenced = {c for n in nodes.values() for c in (n.get("children") or [])}
    unknown = referenced - nodes.keys()
    if unknown:
        raise MalformedDocument(f"children reference unknown temp_ids {sorted(unknown)}")

    visit_order: list[int] = []
    seen: set[int] = set()

    def walk(root: int) -> None:
        stack = [root]
        while stack:
            tid = stack.pop()
            if tid in seen:
                continue
            seen.add(tid)
            visit_order.append(tid)
            stack.extend(reversed(nodes[tid].get("children") or []))

    roots = [tid for tid in nodes if tid not in referenced]
    for tid in roots:
        walk(tid)
    # cycles leave nodes unreachable from any root
    for tid in nodes:
        if tid not in seen:
            walk(tid)

    widgets: list[Widget] = []
    for tid in visit_order:
        node = nodes[tid]
        if node.get("bounds") is None:
            if strict:
                raise MissingBounds(f"node {tid} has no bounds")
            log.warning("node %s has no bounds, skipped", tid)
            continue
        cls = node.get("class")
        if not isinstance(cls, str):
            raise MalformedDocument(f"node {tid}: class must be a string")
        content = node.get("content_present")
        widgets.append(Widget(
            id=tid,
            widget_type=_short_class(cls),
            text=_opt_str(node.get("text")),
            bounds=_node_bounds(node, tid),
            clickable=bool(node.get("clickable", False)),
            resource_id=_opt_str(node.get("resource_id")),
            visible=bool(node.get("visible", True)),
            content_present=None if content is None else bool(content),
            document_order=len(widgets),
        ))
    return widgets


def widget_to_view(w: Widget, children: list[int] | None = None) -> dict[str, Any]:
    view: dict[str, Any] = {
        "temp_id": w.id,
        "class": w.widget_type,
        "text": w.text,
        "bounds": w.bounds.as_pairs(),
        "clickable": w.clickable,
        "resource_id": w.resource_id,
        "visible": w.visible,
        "children": children or [],
    }
    if w.content_present is not None:
        view["content_present"] = w.content_present
    return view


def dump_hierarchy(widgets: list[Widget] | tuple[Widget, ...]) -> bytes:
    """Flat debug dump; re-parsing it yields the same widget list."""
    ordered = sorted(widgets, key=lambda w: w.document_order)
    doc = {"views": [widget_to_view(w) for w in ordered]}
    return json.dumps(doc, indent=1, sort_keys=True).encode("utf-8")


def load_context(path: str | Path) -> RuntimeContext:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ContextInvalid(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ContextInvalid(f"{path}: context must be a JSON object")
    return RuntimeContext.from_json(data)


def load_image(path: str | Path) -> Image.Image:
    with Image.open(path) as img:
        img.load()
        return img.convert("RGB")


def load_triplet(image_path: str | Path, hierarchy_path: str | Path,
                 context_path: str | Path) -> EvidenceTriplet:
    context = load_context(context_path)
    image = load_image(image_path)
    if image.size != context.screen_size:
        raise DimensionMismatch(
            f"image is {image.size[0]}x{image.size[1]}, context declares "
            f"{context.screen_size[0]}x{context.screen_size[1]}")
    widgets = parse_hierarchy(Path(hierarchy_path).read_bytes())
    screen = context.screen_rect
    checked = []
    for w in widgets:
        if w.visible and w.bounds.intersection(screen) is None:
            log.warning("widget %s lies off-screen, marking invisible", w.id)
            w = replace(w, visible=False)
        checked.append(w)
    return EvidenceTriplet(image=image, widgets=tuple(checked), context=context,
                           source=str(Path(hierarchy_path).parent))
