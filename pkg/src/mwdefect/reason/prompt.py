"""Prompt serialisation for the remote model and parsing of its replies."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from importlib import resources
from typing import Any

from PIL import Image

from ..evidence import RuntimeContext
from ..som import MappingTable, MarkSet
from .report import Backend, DefectReport, DefectType, UnknownDefectType, normal_report

log = logging.getLogger(__name__)

PROMPT_VERSION = "v1"
STAGE_HEADERS = (
    "Stage 1: Structured interface understanding",
    "Stage 2: Multimodal defect analysis",
    "Stage 3: Defect diagnosis and localization",
)


class UnparseableResponse(ValueError):
    pass


def _asset(name: str) -> str:
    return resources.files(__package__).joinpath("prompts", name).read_text(encoding="utf-8")


def system_prompt(version: str = PROMPT_VERSION) -> str:
    return _asset(f"cot_system_{version}.txt")


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    user_text: str
    image: Image.Image | None = None


def _context_block(ctx: RuntimeContext) -> list[str]:
    mode = ctx.window_mode.value
    if ctx.split_ratio is not None:
        mode += f" (split ratio {ctx.split_ratio:g})"
    return [
        "## Runtime context",
        f"app: {ctx.app_id}",
        f"activity: {ctx.activity}",
        f"window mode: {mode}",
        f"window bounds: {ctx.window_bounds.as_list()}",
        f"screen size: {ctx.screen_size[0]}x{ctx.screen_size[1]}",
        f"navigation bar inset: {ctx.system_inset_bottom}px",
    ]


def mapping_lines(mapping: MappingTable) -> list[str]:
    return [
        f"[{e.marker}] type={e.type} text={json.dumps(e.text, ensure_ascii=False)} "
        f"bounds={e.bounds.as_list()} clickable={str(e.clickable).lower()}"
        for e in mapping.entries
    ]


def serialize_prompt(mapping: MappingTable, ctx: RuntimeContext,
                     image: Image.Image | None = None) -> PromptBundle:
    lines = _context_block(ctx)
    lines += ["", f"## Marked widgets ({len(mapping.entries)})", *mapping_lines(mapping)]
    lines += ["", _asset(f"cot_task_{PROMPT_VERSION}.txt").rstrip("\n")]
    return PromptBundle(system_prompt(), "\n".join(lines) + "\n", image)


def _looks_like_report(obj: Any) -> bool:
    return isinstance(obj, dict) and isinstance(obj.get("type"), str)


def _conforms(obj: Any) -> bool:
    if isinstance(obj, list):
        return all(_looks_like_report(o) for o in obj)
    return _looks_like_report(obj)


def extract_json_fragment(raw: str) -> list[dict[str, Any]]:
    """Return the first JSON array/object in ``raw`` shaped like a report list."""
    decoder = json.JSONDecoder()
    for i, ch in enumerate(raw):
        if ch not in "[{":
            continue
        try:
            obj, _ = decoder.raw_decode(raw, i)
        except json.JSONDecodeError:
            continue
        if _conforms(obj):
            return obj if isinstance(obj, list) else [obj]
    raise UnparseableResponse(f"no report-shaped JSON in response: {raw[:200]!r}")


def _markers(raw_loc: Any) -> list[int]:
    if raw_loc is None:
        return []
    if not isinstance(raw_loc, list):
        raw_loc = [raw_loc]
    out = []
    for item in raw_loc:
        if isinstance(item, bool):
            continue
        if isinstance(item, int):
            out.append(item)
        elif isinstance(item, str) and item.strip("[] ").isdigit():
            out.append(int(item.strip("[] ")))
        else:
            log.warning("ignoring non-integer location entry %r", item)
    return out


def _confidence(value: Any) -> float | None:
    if isinstance(value, (int, float)) and not isinstance(value, bool) and 0 <= value <= 1:
        return float(value)
    return None


def parse_model_output(raw: str, markset: MarkSet) -> list[DefectReport]:
    valid = markset.mapping.markers
    reports = []
    for item in extract_json_fragment(raw):
        kind = DefectType.parse(item["type"])
        loc = _markers(item.get("location"))
        bad = sorted(set(loc) - valid)
        if bad:
            log.warning("pruning unknown markers %s (mapping has %d)", bad, len(valid))
        if kind is DefectType.NORMAL:
            continue
        reports.append(DefectReport(
            defect_type=kind,
            location=frozenset(m for m in loc if m in valid),
            evidence=str(item.get("evidence", "")),
            explanation=str(item.get("explanation", "")),
            backend=Backend.REMOTE_MODEL,
            confidence=_confidence(item.get("confidence")),
        ))
    if not reports:
        return [normal_report(Backend.REMOTE_MODEL)]
    return reports


__all__ = ["PromptBundle", "STAGE_HEADERS", "UnparseableResponse", "UnknownDefectType",
           "extract_json_fragment", "parse_model_output", "serialize_prompt", "system_prompt"]
