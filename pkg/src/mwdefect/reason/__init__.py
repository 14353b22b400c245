"""Defect diagnosis over a mark set, via the geometric oracle or a remote model."""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Protocol

from ..evidence import RuntimeContext
from ..layout import StructuredUIMetadata
from ..som import MarkSet
from .geometric import GeometricBackend
from .prompt import PromptBundle, UnparseableResponse, parse_model_output, serialize_prompt
from .remote import BackendUnavailable, RemoteBackend
from .report import (Backend, DefectReport, DefectType, TruthLabel, UnknownDefectType,
                     normal_report, sort_reports)

log = logging.getLogger(__name__)


class DiagnosisBackend(Protocol):
    kind: Backend

    def diagnose(self, markset: MarkSet, ctx: RuntimeContext) -> list[DefectReport]: ...


def validate_reports(reports: list[DefectReport], markset: MarkSet,
                     backend: Backend) -> list[DefectReport]:
    """Clip locations to known markers and enforce the Normal-iff-empty rule."""
    valid = markset.mapping.markers
    out = []
    for r in reports:
        if r.defect_type is DefectType.NORMAL:
            continue
        if not r.location <= valid:
            log.warning("dropping unknown markers %s", sorted(r.location - valid))
            r = replace(r, location=r.location & valid)
        out.append(r)
    if not out:
        normals = [r for r in reports if r.defect_type is DefectType.NORMAL]
        return normals[:1] or [normal_report(backend)]
    return sort_reports(out)


def analyze(markset: MarkSet, metadata: StructuredUIMetadata | None, ctx: RuntimeContext,
            backend: DiagnosisBackend) -> list[DefectReport]:
    if metadata is not None and len(metadata.items) != len(markset.marks):
        raise ValueError("metadata and mark set describe different widget sets")
    return validate_reports(backend.diagnose(markset, ctx), markset, backend.kind)


__all__ = [
    "Backend", "BackendUnavailable", "DefectReport", "DefectType", "DiagnosisBackend",
    "GeometricBackend", "PromptBundle", "RemoteBackend", "TruthLabel", "UnknownDefectType",
    "UnparseableResponse", "analyze", "parse_model_output", "serialize_prompt",
    "validate_reports",
]
