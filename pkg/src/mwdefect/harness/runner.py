"""Corpus-level orchestration and metric artefacts.

Corpus layout: ``<corpus>/<layout-id>/<state-id>/{screen.png, hierarchy.json,
context.json[, truth.json]}``. Outputs mirror it under ``<out>/reports``.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..config import Config
from ..evidence import RuntimeContext, load_context, load_triplet
from ..pipeline import process_triplet
from ..reason import DiagnosisBackend
from ..reason.report import (MAJOR_TYPES, Backend, DefectReport, DefectType, TruthLabel,
                             dumps_reports, loads_reports, loads_truth)
from ..som import save_png
from .metrics import (CONVENTIONAL, SPLIT_FOLD, app_level_verdicts, fpr_fnr, pct,
                      scenario_counts, scenario_of, type_prf)

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2

NO_TRIPLETS = "no triplets found"
MATCHING_RULE = ("screenshot-level coarse defect-type presence; subtypes and marker "
                 "locations are not compared")


def find_triplets(corpus_dir: str | Path) -> list[str]:
    corpus = Path(corpus_dir)
    if not corpus.is_dir():
        return []
    keys = []
    for layout in sorted(p for p in corpus.iterdir() if p.is_dir()):
        for state in sorted(p for p in layout.iterdir() if p.is_dir()):
            keys.append(f"{layout.name}/{state.name}")
    return keys


@dataclass
class TripletOutcome:
    key: str
    reports: list[DefectReport] | None = None
    context: RuntimeContext | None = None
    error: str | None = None
    message: str | None = None

    def manifest_entry(self) -> dict[str, str]:
        if self.error is None:
            return {"status": "ok"}
        return {"status": "error", "error": self.error, "message": self.message or ""}


@dataclass
class RunResult:
    exit_code: int
    manifest: dict[str, Any]
    metrics: dict[str, Any] | None = None
    outcomes: list[TripletOutcome] = field(default_factory=list)


def _run_one(key: str, corpus: Path, out: Path, backend: DiagnosisBackend,
             config: Config) -> TripletOutcome:
    src = corpus / key
    try:
        triplet = load_triplet(src / "screen.png", src / "hierarchy.json", src / "context.json")
        result = process_triplet(triplet, backend, config)
    except Exception as exc:  # every triplet-level failure lands in the manifest
        log.warning("%s failed: %s: %s", key, type(exc).__name__, exc)
        message = str(exc).replace(str(corpus), "<corpus>")
        return TripletOutcome(key, error=type(exc).__name__, message=message)
    dst = out / "reports" / key
    dst.mkdir(parents=True, exist_ok=True)
    (dst / "report.json").write_text(dumps_reports(result.reports), encoding="utf-8")
    (dst / "mapping.json").write_text(result.markset.mapping.dumps() + "\n", encoding="utf-8")
    (dst / "metadata.json").write_text(
        json.dumps(result.metadata.to_json(), indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
    save_png(result.markset.marked_image, dst / "screen.som.png")
    return TripletOutcome(key, reports=result.reports, context=triplet.context)


def _write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(payload, indent=1, sort_keys=True, ensure_ascii=False) + "\n",
                    encoding="utf-8")


def run_pipeline(corpus_dir: str | Path, backend: DiagnosisBackend, config: Config = Config(),
                 out_dir: str | Path = "out") -> RunResult:
    corpus, out = Path(corpus_dir), Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    keys = find_triplets(corpus)
    if not keys:
        manifest = {"message": NO_TRIPLETS, "triplets": {}}
        _write_json(out / "errors.json", manifest)
        return RunResult(EXIT_PARTIAL, manifest)

    workers = max(1, config.harness.workers)
    if backend.kind is Backend.REMOTE_MODEL:
        workers = min(workers, max(1, config.remote.max_in_flight))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(lambda k: _run_one(k, corpus, out, backend, config), keys))

    manifest = {"message": None, "triplets": {o.key: o.manifest_entry() for o in outcomes}}
    _write_json(out / "errors.json", manifest)

    shots = []
    for o in outcomes:
        truth_file = corpus / o.key / "truth.json"
        if o.reports is not None and truth_file.exists():
            shots.append((o.key, o.context, o.reports, loads_truth(truth_file.read_bytes())))
    metrics = None
    if shots:
        metrics = compute_metrics(shots)
        write_metrics(metrics, out)
    failed = any(o.error for o in outcomes)
    return RunResult(EXIT_PARTIAL if failed else EXIT_OK, manifest, metrics, outcomes)


Shot = tuple[str, RuntimeContext, list[DefectReport], list[TruthLabel]]


def compute_metrics(shots: list[Shot]) -> dict[str, Any]:
    """All metric tables for screenshots that have both reports and truth."""
    shots = sorted(shots, key=lambda s: s[0])
    metrics: dict[str, Any] = {"matching": MATCHING_RULE, "n_screenshots": len(shots)}

    def subset(scenario: str | None) -> list[Shot]:
        return [s for s in shots if scenario is None or scenario_of(s[1].window_mode) == scenario]

    for name, scenario in (("all", None), (CONVENTIONAL, CONVENTIONAL), (SPLIT_FOLD, SPLIT_FOLD)):
        part = subset(scenario)
        block: dict[str, Any] = {"n_screenshots": len(part)}
        if part:
            rows = type_prf([s[2] for s in part], [s[3] for s in part])
            block["type_prf"] = {k: r.to_json() for k, r in rows.items()}
            by_app_reports: dict[str, list] = {}
            by_app_truth: dict[str, list] = {}
            for _, ctx, reports, truth in part:
                by_app_reports.setdefault(ctx.app_id, []).append(reports)
                by_app_truth.setdefault(ctx.app_id, []).append(truth)
            verdicts = app_level_verdicts(by_app_reports, by_app_truth)
            rates = fpr_fnr(verdicts)
            block["apps"] = {
                "n_apps": len(verdicts),
                "defect_apps_truth": sum(v.truth_label for v in verdicts),
                "defect_apps_detected": sum(v.predicted_label for v in verdicts),
                "fpr": None if rates.fpr is None else str(pct(rates.fpr)),
                "fnr": None if rates.fnr is None else str(pct(rates.fnr)),
            }
            block["defective_screenshots"] = {
                "detected": sum(1 for s in part
                                if any(r.defect_type is not DefectType.NORMAL for r in s[2])),
                "truth": sum(1 for s in part if s[3]),
            }
        metrics[name] = block

    detected = scenario_counts((scenario_of(ctx.window_mode), [r.defect_type for r in reports])
                               for _, ctx, reports, _ in shots)
    truth = scenario_counts((scenario_of(ctx.window_mode), [t.defect_type for t in labels])
                            for _, ctx, _, labels in shots)
    metrics["instances"] = {
        "detected": {k: c.to_json() for k, c in detected.items()},
        "truth": {k: c.to_json() for k, c in truth.items()},
    }
    return metrics


def render_tables(metrics: dict[str, Any]) -> str:
    lines = [f"Matching rule: {metrics['matching']}", ""]
    lines.append("Detected instances by scenario")
    lines.append(f"{'Defect type':<20} {'Total':>7} {'Conv.':>7} {'Split/Fold':>11} {'Share':>8}")
    lines.append("-" * 57)
    for k, c in metrics["instances"]["detected"].items():
        if k not in MAJOR_TYPES and not c["total"]:
            continue
        lines.append(f"{k:<20} {c['total']:>7} {c['conventional']:>7} {c['split_fold']:>11} "
                     f"{c['split_share'] + '%':>8}")
    for name in ("all", CONVENTIONAL, SPLIT_FOLD):
        block = metrics.get(name, {})
        if "type_prf" not in block:
            continue
        lines += ["", f"Precision / Recall / F1 (%) [{name}, {block['n_screenshots']} screenshots]"]
        lines.append(f"{'Defect type':<20} {'P':>7} {'R':>7} {'F1':>7} {'TP':>6} {'FP':>6} {'FN':>6}")
        lines.append("-" * 63)
        for k, r in block["type_prf"].items():
            if k not in MAJOR_TYPES and not (r["tp"] or r["fp"] or r["fn"]):
                continue
            lines.append(f"{k:<20} {r['precision']:>7} {r['recall']:>7} {r['f1']:>7} "
                         f"{r['tp']:>6} {r['fp']:>6} {r['fn']:>6}")
        apps = block["apps"]
        lines.append(f"apps: {apps['n_apps']}  defect apps detected: {apps['defect_apps_detected']}"
                     f"  FPR: {apps['fpr'] or 'n/a'}  FNR: {apps['fnr'] or 'n/a'}")
    return "\n".join(lines) + "\n"


def write_metrics(metrics: dict[str, Any], out: Path) -> None:
    _write_json(out / "metrics.json", metrics)
    (out / "metrics.txt").write_text(render_tables(metrics), encoding="utf-8")


def evaluate_reports(corpus_dir: str | Path, reports_dir: str | Path) -> dict[str, Any] | None:
    """Metrics from report files already on disk (``<reports>/<key>/report.json``)."""
    corpus, reports_root = Path(corpus_dir), Path(reports_dir)
    shots = []
    for key in find_triplets(corpus):
        rfile, tfile = reports_root / key / "report.json", corpus / key / "truth.json"
        if rfile.exists() and tfile.exists():
            shots.append((key, load_context(corpus / key / "context.json"),
                          loads_reports(rfile.read_bytes()), loads_truth(tfile.read_bytes())))
    return compute_metrics(shots) if shots else None


__all__ = ["EXIT_OK", "EXIT_PARTIAL", "EXIT_USAGE", "NO_TRIPLETS", "RunResult", "compute_metrics",
           "evaluate_reports", "find_triplets", "render_tables", "run_pipeline", "write_metrics"]
