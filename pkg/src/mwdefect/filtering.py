"""Key-widget filtering and deduplication."""

from __future__ import annotations

from collections.abc import Iterable

from .config import FilterConfig
from .evidence import Bounds, Widget

__all__ = ["FilterConfig", "area", "is_decorative", "is_semantic", "keep_widget",
           "filter_widgets", "dedup_widgets"]


def area(b: Bounds) -> int:
    return (b.x2 - b.x1) * (b.y2 - b.y1)


def is_decorative(rid: str | None, cfg: FilterConfig = FilterConfig()) -> bool:
    if not rid:
        return False
    rid = rid.lower()
    return any(k.lower() in rid for k in cfg.decorative_keywords)


def _has_text(w: Widget) -> bool:
    return w.text is not None and w.text.strip() != ""


def is_semantic(c: Widget, cfg: FilterConfig = FilterConfig()) -> bool:
    return c.clickable or _has_text(c) or c.widget_type in cfg.interactive_types


def keep_widget(c: Widget, cfg: FilterConfig = FilterConfig()) -> bool:
    """The retention predicate applied per widget by :func:`filter_widgets`."""
    if not c.visible:
        return False
    b = c.bounds
    if b.width < cfg.min_width_px or b.height < cfg.min_height_px:
        return False
    if area(b) < cfg.min_area_px2:
        return False
    if is_decorative(c.resource_id, cfg):
        return False
    if c.widget_type in cfg.container_types and not (c.clickable or _has_text(c)):
        return False
    return is_semantic(c, cfg)


def filter_widgets(widgets: Iterable[Widget], cfg: FilterConfig = FilterConfig()) -> list[Widget]:
    return [w for w in widgets if keep_widget(w, cfg)]


def dedup_widgets(widgets: Iterable[Widget]) -> list[Widget]:
    """Collapse text widgets that share (type, normalised text, resource id).

    The first widget in document order wins. Textless widgets are never merged.
    """
    widgets = list(widgets)
    winners: dict[tuple[str, str, str | None], Widget] = {}
    for w in sorted(widgets, key=lambda w: w.document_order):
        if _has_text(w):
            winners.setdefault((w.widget_type, w.text.strip().lower(), w.resource_id), w)
    return [w for w in widgets
            if not _has_text(w)
            or winners[(w.widget_type, w.text.strip().lower(), w.resource_id)] is w]
