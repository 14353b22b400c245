"""Deterministic geometric oracle over marked widgets.

Each detector takes ``(marker, widget)`` pairs plus the runtime context and
returns reports keyed by marker ids. Document order stands in for z-order:
a widget later in the hierarchy is drawn on top of earlier ones.
"""

from __future__ import annotations

from itertools import combinations

from ..config import FilterConfig, OracleConfig
from ..evidence import Bounds, RuntimeContext, Widget
from ..som import MarkSet
from .report import Backend, DefectReport, DefectType, normal_report, sort_reports

Marked = list[tuple[int, Widget]]

_GEO = Backend.GEOMETRIC


def _is_interactive(w: Widget, fcfg: FilterConfig) -> bool:
    return w.clickable or w.widget_type in fcfg.interactive_types


def _contained(a: Bounds, b: Bounds, inter: int, ratio: float) -> bool:
    return inter / a.area >= ratio or inter / b.area >= ratio


def _report(kind: DefectType, markers: tuple[int, ...], evidence: str,
            explanation: str) -> DefectReport:
    return DefectReport(kind, frozenset(markers), evidence, explanation, _GEO)


def detect_text_overlap(marked: Marked, ctx: RuntimeContext,
                        cfg: OracleConfig = OracleConfig()) -> list[DefectReport]:
    texts = [(m, w) for m, w in marked if w.has_text and w.bounds.area > 0]
    out = []
    for (mi, wi), (mj, wj) in combinations(texts, 2):
        inter = wi.bounds.intersection_area(wj.bounds)
        if not inter:
            continue
        if inter / min(wi.bounds.area, wj.bounds.area) <= cfg.text_overlap_ratio:
            continue
        if _contained(wi.bounds, wj.bounds, inter, cfg.containment_ratio):
            continue
        share = inter / min(wi.bounds.area, wj.bounds.area)
        out.append(_report(
            DefectType.TEXT_OVERLAP, (mi, mj),
            f"text of [{mi}] {wi.text!r} and [{mj}] {wj.text!r} overlap on "
            f"{share:.0%} of the smaller box",
            "two text elements are laid out on top of each other",
        ))
    return out


def detect_truncation(marked: Marked, ctx: RuntimeContext,
                      cfg: OracleConfig = OracleConfig()) -> list[DefectReport]:
    win = ctx.window_bounds
    slack = cfg.clip_slack_px
    out = []
    for m, w in marked:
        if not w.has_text:
            continue
        b = w.bounds
        if b.y2 - win.y2 > slack:
            kind, edge, by = DefectType.TEXT_TRUNCATION_BOTTOM, "bottom", b.y2 - win.y2
        elif win.y1 - b.y1 > slack:
            kind, edge, by = DefectType.TEXT_TRUNCATION_TOP, "top", win.y1 - b.y1
        elif win.x1 - b.x1 > slack or b.x2 - win.x2 > slack:
            kind, edge, by = DefectType.TEXT_TRUNCATION_SIDE, "side", max(win.x1 - b.x1,
                                                                          b.x2 - win.x2)
        else:
            continue
        out.append(_report(
            kind, (m,),
            f"[{m}] {w.text!r} extends {by}px past the window {edge} edge",
            "rigid text box does not fit the resized window and is clipped",
        ))
    return out


def detect_occlusion(marked: Marked, ctx: RuntimeContext, cfg: OracleConfig = OracleConfig(),
                     fcfg: FilterConfig = FilterConfig()) -> list[DefectReport]:
    by_z = sorted(marked, key=lambda mw: mw[1].document_order)
    out = []
    for (ml, lower), (mu, upper) in combinations(by_z, 2):
        if lower.bounds.area == 0 or upper.bounds.area == 0:
            continue
        if not (lower.has_text or _is_interactive(lower, fcfg)):
            continue
        inter = lower.bounds.intersection_area(upper.bounds)
        if not inter or inter / lower.bounds.area < cfg.occlusion_coverage:
            continue
        if _contained(lower.bounds, upper.bounds, inter, cfg.containment_ratio):
            continue
        if upper.has_text and lower.has_text:
            continue  # text overlap, reported separately
        if upper.has_text:
            kind = DefectType.TEXT_OVER_WIDGET
        elif lower.has_text:
            kind = DefectType.WIDGET_OVER_TEXT
        else:
            kind = DefectType.WIDGET_OVER_WIDGET
        out.append(_report(
            kind, (ml, mu),
            f"[{mu}] {upper.widget_type} covers {inter / lower.bounds.area:.0%} of "
            f"[{ml}] {lower.widget_type}",
            "a later-drawn element hides part of an element beneath it",
        ))
    return out


def detect_missing_and_null(marked: Marked, ctx: RuntimeContext,
                            cfg: OracleConfig = OracleConfig()) -> list[DefectReport]:
    out = []
    for m, w in marked:
        if w.is_image and w.content_present is False:
            out.append(_report(DefectType.MISSING_IMAGE, (m,),
                               f"[{m}] {w.widget_type} has no loaded content",
                               "image resource failed to load or render"))
    win = ctx.window_bounds
    screen_area = ctx.screen_size[0] * ctx.screen_size[1]
    in_window = sum(1 for _, w in marked if w.bounds.intersection(win) is not None)
    if (in_window <= cfg.null_display_max_widgets
            and win.area >= cfg.null_display_min_window_frac * screen_area):
        out.append(_report(DefectType.NULL_DISPLAY, (),
                           f"window of {win.width}x{win.height}px shows {in_window} "
                           "meaningful widget(s)",
                           "the screen renders essentially blank content"))
    return out


def detect_navbar_overlap(marked: Marked, ctx: RuntimeContext, cfg: OracleConfig = OracleConfig(),
                          fcfg: FilterConfig = FilterConfig()) -> list[DefectReport]:
    inset = ctx.system_inset_bottom
    if inset <= 0:
        return []
    width, height = ctx.screen_size
    band_top = height - inset
    out = []
    for m, w in marked:
        if not _is_interactive(w, fcfg):
            continue
        b = w.bounds
        depth = min(b.y2, height) - max(b.y1, band_top)
        if depth > cfg.navbar_slack_px and min(b.x2, width) > max(b.x1, 0):
            out.append(_report(DefectType.NAV_BAR_OVERLAP, (m,),
                               f"[{m}] {w.widget_type} reaches {depth}px into the "
                               f"{inset}px navigation band",
                               "control collides with the system navigation bar"))
    return out


def geometric_reports(marked: Marked, ctx: RuntimeContext, cfg: OracleConfig = OracleConfig(),
                      fcfg: FilterConfig = FilterConfig()) -> list[DefectReport]:
    """Run every detector; ``[Normal]`` when nothing fires."""
    reports = [
        *detect_text_overlap(marked, ctx, cfg),
        *detect_truncation(marked, ctx, cfg),
        *detect_occlusion(marked, ctx, cfg, fcfg),
        *detect_missing_and_null(marked, ctx, cfg),
        *detect_navbar_overlap(marked, ctx, cfg, fcfg),
    ]
    if not reports:
        return [normal_report(_GEO, "no geometric rule fired")]
    return sort_reports(reports)


class GeometricBackend:
    kind = Backend.GEOMETRIC

    def __init__(self, oracle: OracleConfig = OracleConfig(),
                 filter_cfg: FilterConfig = FilterConfig()) -> None:
        self.oracle = oracle
        self.filter_cfg = filter_cfg

    def diagnose(self, markset: MarkSet, ctx: RuntimeContext) -> list[DefectReport]:
        marked = [(mk.marker_id, w) for mk, w in zip(markset.marks, markset.widgets)]
        return geometric_reports(marked, ctx, self.oracle, self.filter_cfg)
