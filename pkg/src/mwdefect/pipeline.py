"""Per-triplet processing: filter, order, mark, diagnose."""

from __future__ import annotations

from dataclasses import dataclass

from .config import Config
from .evidence import EvidenceTriplet
from .filtering import dedup_widgets, filter_widgets
from .layout import StructuredUIMetadata, build_adjacency, reading_order, serialize_metadata
from .reason import DiagnosisBackend, analyze
from .reason.report import DefectReport
from .som import MarkSet, build_markset


@dataclass(frozen=True)
class TripletResult:
    metadata: StructuredUIMetadata
    markset: MarkSet
    reports: list[DefectReport]


def prepare(triplet: EvidenceTriplet, config: Config = Config()
            ) -> tuple[StructuredUIMetadata, MarkSet]:
    retained = dedup_widgets(filter_widgets(triplet.widgets, config.filter))
    graph = build_adjacency(retained, config.layout, triplet.context.screen_size)
    ordered = reading_order(graph, retained)
    metadata = serialize_metadata(ordered, retained)
    return metadata, build_markset(triplet, ordered, retained, config.filter)


def process_triplet(triplet: EvidenceTriplet, backend: DiagnosisBackend,
                    config: Config = Config()) -> TripletResult:
    metadata, markset = prepare(triplet, config)
    reports = analyze(markset, metadata, triplet.context, backend)
    return TripletResult(metadata, markset, reports)
