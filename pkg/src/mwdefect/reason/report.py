"""Defect taxonomy and the structured report record."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any


class DefectType(enum.Enum):
    # declaration order is the report sort order
    TEXT_OVERLAP = "text_overlap"
    TEXT_TRUNCATION_TOP = "text_truncation_top"
    TEXT_TRUNCATION_BOTTOM = "text_truncation_bottom"
    TEXT_TRUNCATION_SIDE = "text_truncation_side"
    WIDGET_OVER_TEXT = "widget_over_text"
    TEXT_OVER_WIDGET = "text_over_widget"
    WIDGET_OVER_WIDGET = "widget_over_widget"
    MISSING_IMAGE = "missing_image"
    NULL_DISPLAY = "null_display"
    NAV_BAR_OVERLAP = "nav_bar_overlap"
    SPLIT_MISMATCH = "split_mismatch"
    FOLDABLE_MISMATCH = "foldable_mismatch"
    NORMAL = "normal"

    @property
    def rank(self) -> int:
        return _RANK[self]

    @property
    def coarse(self) -> str:
        return COARSE[self]

    @classmethod
    def parse(cls, name: str) -> DefectType:
        """Lenient lookup: ``TextOverlap``, ``text-overlap`` and ``TEXT_OVERLAP`` all work."""
        key = _normalise(name)
        try:
            return _BY_KEY[key]
        except KeyError:
            raise UnknownDefectType(name) from None


class UnknownDefectType(ValueError):
    pass


def _normalise(name: str) -> str:
    out = []
    for i, ch in enumerate(name.strip()):
        if ch.isupper() and i and name[i - 1].islower():
            out.append("_")
        out.append("_" if ch in " -/" else ch.lower())
    return "".join(out)


_RANK = {t: i for i, t in enumerate(DefectType)}
_BY_KEY = {t.value: t for t in DefectType}

TEXT_TRUNCATION = "text_truncation"
WIDGET_OCCLUSION = "widget_occlusion"

COARSE = {t: t.value for t in DefectType}
COARSE.update({
    DefectType.TEXT_TRUNCATION_TOP: TEXT_TRUNCATION,
    DefectType.TEXT_TRUNCATION_BOTTOM: TEXT_TRUNCATION,
    DefectType.TEXT_TRUNCATION_SIDE: TEXT_TRUNCATION,
    DefectType.WIDGET_OVER_TEXT: WIDGET_OCCLUSION,
    DefectType.TEXT_OVER_WIDGET: WIDGET_OCCLUSION,
    DefectType.WIDGET_OVER_WIDGET: WIDGET_OCCLUSION,
})

# coarse categories that carry the headline metrics, in table order
MAJOR_TYPES = ("text_overlap", TEXT_TRUNCATION, WIDGET_OCCLUSION, "missing_image", "null_display")
LAYOUT_TYPES = ("text_overlap", TEXT_TRUNCATION, WIDGET_OCCLUSION)
ALL_COARSE = tuple(dict.fromkeys(COARSE[t] for t in DefectType if t is not DefectType.NORMAL))


class Backend(enum.Enum):
    GEOMETRIC = "geometric"
    REMOTE_MODEL = "remote_model"


@dataclass(frozen=True)
class DefectReport:
    defect_type: DefectType
    location: frozenset[int] = frozenset()
    evidence: str = ""
    explanation: str = ""
    backend: Backend = Backend.GEOMETRIC
    confidence: float | None = None

    def __post_init__(self) -> None:
        if self.defect_type is DefectType.NORMAL and self.location:
            raise ValueError("Normal reports carry no location")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def sort_key(self) -> tuple[int, int, tuple[int, ...]]:
        loc = tuple(sorted(self.location))
        return self.defect_type.rank, (loc[0] if loc else 0), loc

    def to_json(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "type": self.defect_type.value,
            "location": sorted(self.location),
            "evidence": self.evidence,
            "explanation": self.explanation,
            "backend": self.backend.value,
        }
        if self.confidence is not None:
            d["confidence"] = self.confidence
        return d

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> DefectReport:
        conf = d.get("confidence")
        return cls(
            defect_type=DefectType.parse(d["type"]),
            location=frozenset(int(m) for m in d.get("location", [])),
            evidence=str(d.get("evidence", "")),
            explanation=str(d.get("explanation", "")),
            backend=Backend(d.get("backend", Backend.GEOMETRIC.value)),
            confidence=None if conf is None else float(conf),
        )


def normal_report(backend: Backend, evidence: str = "", explanation: str = "") -> DefectReport:
    return DefectReport(DefectType.NORMAL, frozenset(), evidence, explanation, backend)


def sort_reports(reports: list[DefectReport]) -> list[DefectReport]:
    return sorted(reports, key=lambda r: r.sort_key)


def dumps_reports(reports: list[DefectReport]) -> str:
    return json.dumps([r.to_json() for r in reports], indent=1, ensure_ascii=False) + "\n"


def loads_reports(raw: str | bytes) -> list[DefectReport]:
    return [DefectReport.from_json(d) for d in json.loads(raw)]


@dataclass(frozen=True)
class TruthLabel:
    """Ground-truth defect: a type plus the names of the widgets involved."""

    defect_type: DefectType
    names: tuple[str, ...] = field(default=())

    def to_json(self) -> dict[str, Any]:
        return {"type": self.defect_type.value, "names": list(self.names)}

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> TruthLabel:
        return cls(DefectType.parse(d["type"]), tuple(d.get("names", [])))


def dumps_truth(labels: list[TruthLabel]) -> str:
    return json.dumps([t.to_json() for t in labels], indent=1, ensure_ascii=False) + "\n"


def loads_truth(raw: str | bytes) -> list[TruthLabel]:
    return [TruthLabel.from_json(d) for d in json.loads(raw)]
