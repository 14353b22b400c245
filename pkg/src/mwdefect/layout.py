"""Spatial adjacency graph, reading order and structured UI metadata."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Literal

from .config import AdjacencyThreshold, LayoutConfig
from .evidence import Bounds, Widget

Axis = Literal["horizontal", "vertical"]


def center_distance(b_i: Bounds, b_j: Bounds) -> float:
    (xi, yi), (xj, yj) = b_i.center, b_j.center
    return math.hypot(xi - xj, yi - yj)


def edge_gap(b_i: Bounds, b_j: Bounds, axis: Axis) -> int:
    """Empty space between the two boxes along ``axis`` (0 if they overlap there)."""
    if axis == "horizontal":
        return max(0, max(b_i.x1, b_j.x1) - min(b_i.x2, b_j.x2))
    if axis == "vertical":
        return max(0, max(b_i.y1, b_j.y1) - min(b_i.y2, b_j.y2))
    raise ValueError(f"unknown axis {axis!r}")


def projection_overlap(b_i: Bounds, b_j: Bounds, axis: Axis) -> int:
    """Length of the shared interval when both boxes are projected onto ``axis``."""
    if axis == "horizontal":
        return min(b_i.x2, b_j.x2) - max(b_i.x1, b_j.x1)
    return min(b_i.y2, b_j.y2) - max(b_i.y1, b_j.y1)


def resolve_threshold(t: AdjacencyThreshold, screen_extent: int) -> int:
    if screen_extent <= 0:
        raise ValueError("screen_extent must be positive")
    # half-up, not banker's rounding
    return min(max(math.floor(t.frac * screen_extent + 0.5), t.min_px), t.max_px)


@dataclass(frozen=True)
class AdjacencyGraph:
    nodes: tuple[int, ...]
    edges: dict[frozenset[int], float]
    neighbors: dict[int, tuple[int, ...]]

    def has_edge(self, i: int, j: int) -> bool:
        return frozenset((i, j)) in self.edges

    def distance(self, i: int, j: int) -> float:
        return self.edges[frozenset((i, j))]


def build_adjacency(widgets: list[Widget], thresholds: LayoutConfig = LayoutConfig(),
                    screen_size: tuple[int, int] = (1080, 1920)) -> AdjacencyGraph:
    tau_h = resolve_threshold(thresholds.horizontal, screen_size[0])
    tau_v = resolve_threshold(thresholds.vertical, screen_size[1])
    edges: dict[frozenset[int], float] = {}
    adj: dict[int, list[tuple[float, int]]] = {w.id: [] for w in widgets}
    for a in range(len(widgets)):
        wi = widgets[a]
        for b in range(a + 1, len(widgets)):
            wj = widgets[b]
            bi, bj = wi.bounds, wj.bounds
            side_by_side = (projection_overlap(bi, bj, "vertical") > 0
                            and edge_gap(bi, bj, "horizontal") <= tau_h)
            stacked = (projection_overlap(bi, bj, "horizontal") > 0
                       and edge_gap(bi, bj, "vertical") <= tau_v)
            if side_by_side or stacked:
                d = center_distance(bi, bj)
                edges[frozenset((wi.id, wj.id))] = d
                adj[wi.id].append((d, wj.id))
                adj[wj.id].append((d, wi.id))
    neighbors = {i: tuple(j for _, j in sorted(lst)) for i, lst in adj.items()}
    return AdjacencyGraph(nodes=tuple(w.id for w in widgets), edges=edges, neighbors=neighbors)


@dataclass(frozen=True)
class OrderedWidgets:
    sequence: tuple[int, ...]


def reading_order(graph: AdjacencyGraph, widgets: list[Widget]) -> OrderedWidgets:
    """Nearest-first DFS from the top-left widget, restarting per component."""
    by_id = {w.id: w for w in widgets}
    pending = sorted(by_id.values(), key=lambda w: (w.bounds.y1, w.bounds.x1, w.id))
    visited: set[int] = set()
    order: list[int] = []
    for start in pending:
        if start.id in visited:
            continue
        visited.add(start.id)
        order.append(start.id)
        stack = [iter(graph.neighbors.get(start.id, ()))]
        while stack:
            nxt = next((n for n in stack[-1] if n not in visited), None)
            if nxt is None:
                stack.pop()
                continue
            visited.add(nxt)
            order.append(nxt)
            stack.append(iter(graph.neighbors.get(nxt, ())))
    return OrderedWidgets(tuple(order))


@dataclass(frozen=True)
class UIItem:
    id: int
    type: str
    text: str | None
    bounds: Bounds
    clickable: bool
    resource_id: str | None

    def to_json(self) -> dict[str, Any]:
        return {"id": self.id, "type": self.type, "text": self.text,
                "bounds": self.bounds.as_list(), "clickable": self.clickable,
                "resource_id": self.resource_id}


@dataclass(frozen=True)
class StructuredUIMetadata:
    items: tuple[UIItem, ...]

    def to_json(self) -> list[dict[str, Any]]:
        return [item.to_json() for item in self.items]


def serialize_metadata(ordered: OrderedWidgets, widgets: list[Widget]) -> StructuredUIMetadata:
    by_id = {w.id: w for w in widgets}
    return StructuredUIMetadata(tuple(
        UIItem(w.id, w.widget_type, w.text, w.bounds, w.clickable, w.resource_id)
        for w in (by_id[i] for i in ordered.sequence)
    ))
