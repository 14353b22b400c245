"""Evaluation metrics: app-level FPR/FNR, per-type P/R/F1, scenario counts.

Rates are computed exactly with :class:`~fractions.Fraction` and rendered
as percentages with two decimals, rounding half up.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import NamedTuple, Union

from ..evidence import WindowMode
from ..reason.report import ALL_COARSE, DefectReport, DefectType, TruthLabel

CONVENTIONAL = "conventional"
SPLIT_FOLD = "split_fold"

Number = Union[Fraction, float, int]


class MissingTruth(KeyError):
    pass


def pct(value: Number | None, places: int = 2) -> Decimal | None:
    """``value`` as a percentage, half-up rounded. ``Fraction(1, 9)`` -> ``11.11``."""
    if value is None:
        return None
    scaled = Fraction(value) * 100 * 10 ** places
    return Decimal(math.floor(scaled + Fraction(1, 2))).scaleb(-places)


def fmt_pct(value: Number | None, places: int = 2) -> str:
    p = pct(value, places)
    return "n/a" if p is None else f"{p}%"


def scenario_of(mode: WindowMode | str) -> str:
    return CONVENTIONAL if WindowMode(mode) is WindowMode.FULL_SCREEN else SPLIT_FOLD


@dataclass(frozen=True)
class AppVerdict:
    app_id: str
    truth_label: int
    predicted_label: int


def _defective(reports: Iterable[DefectReport]) -> bool:
    return any(r.defect_type is not DefectType.NORMAL for r in reports)


def app_level_verdicts(reports_by_app: Mapping[str, Sequence[Sequence[DefectReport]]],
                       truth_by_app: Mapping[str, int | bool | Sequence[Sequence[TruthLabel]]]
                       ) -> list[AppVerdict]:
    """P(a) = 1 iff any screenshot of ``a`` has a non-Normal report.

    ``truth_by_app`` holds either the app label directly or the per-screenshot
    truth lists, in which case T(a) = 1 iff any list is non-empty.
    """
    verdicts = []
    for app in sorted(reports_by_app):
        shots = reports_by_app[app]
        if not shots:
            raise ValueError(f"app {app!r} has no screenshots")
        if app not in truth_by_app:
            raise MissingTruth(app)
        truth = truth_by_app[app]
        if isinstance(truth, (bool, int)):
            t = int(bool(truth))
        else:
            t = int(any(len(labels) > 0 for labels in truth))
        p = int(any(_defective(reports) for reports in shots))
        verdicts.append(AppVerdict(app, t, p))
    return verdicts


class AppRates(NamedTuple):
    fpr: Fraction | None
    fnr: Fraction | None


def fpr_fnr(verdicts: Iterable[AppVerdict]) -> AppRates:
    """Undefined rates (no negative / no positive apps) come back as ``None``."""
    verdicts = list(verdicts)
    neg = [v for v in verdicts if v.truth_label == 0]
    pos = [v for v in verdicts if v.truth_label == 1]
    fpr = Fraction(sum(v.predicted_label for v in neg), len(neg)) if neg else None
    fnr = Fraction(sum(1 - v.predicted_label for v in pos), len(pos)) if pos else None
    return AppRates(fpr, fnr)


def f1_score(precision: Number, recall: Number) -> Number:
    if precision + recall == 0:
        return 0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True)
class TypeRow:
    defect_type: str
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> Fraction:
        return Fraction(self.tp, self.tp + self.fp) if self.tp + self.fp else Fraction(0)

    @property
    def recall(self) -> Fraction:
        return Fraction(self.tp, self.tp + self.fn) if self.tp + self.fn else Fraction(0)

    @property
    def f1(self) -> Fraction:
        return Fraction(f1_score(self.precision, self.recall))

    def to_json(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn,
            "precision": str(pct(self.precision)), "recall": str(pct(self.recall)),
            "f1": str(pct(self.f1)),
        }


def coarse_key(t: DefectType) -> str:
    return t.coarse


def type_prf(reports: Sequence[Iterable[DefectReport]], truth: Sequence[Iterable[TruthLabel]],
             type_matching: Callable[[DefectType], str] = coarse_key,
             types: Sequence[str] = ALL_COARSE) -> dict[str, TypeRow]:
    """Screenshot-level presence matching: a type counts once per screenshot."""
    if len(reports) != len(truth):
        raise ValueError("reports and truth must be aligned per screenshot")
    tp: Counter[str] = Counter()
    fp: Counter[str] = Counter()
    fn: Counter[str] = Counter()
    for shot_reports, shot_truth in zip(reports, truth):
        got = {type_matching(r.defect_type) for r in shot_reports
               if r.defect_type is not DefectType.NORMAL}
        want = {type_matching(t.defect_type) for t in shot_truth
                if t.defect_type is not DefectType.NORMAL}
        for k in got & want:
            tp[k] += 1
        for k in got - want:
            fp[k] += 1
        for k in want - got:
            fn[k] += 1
    keys = list(types) + sorted((set(tp) | set(fp) | set(fn)) - set(types))
    return {k: TypeRow(k, tp[k], fp[k], fn[k]) for k in keys}


@dataclass(frozen=True)
class ScenarioCount:
    conventional: int
    split_fold: int

    @property
    def total(self) -> int:
        return self.conventional + self.split_fold

    @property
    def split_share(self) -> Fraction:
        return Fraction(self.split_fold, self.total) if self.total else Fraction(0)

    def to_json(self) -> dict:
        return {"conventional": self.conventional, "split_fold": self.split_fold,
                "total": self.total, "split_share": str(pct(self.split_share))}


def scenario_counts(records: Iterable[tuple[str, Iterable[DefectType]]],
                    types: Sequence[str] = ALL_COARSE,
                    type_matching: Callable[[DefectType], str] = coarse_key
                    ) -> dict[str, ScenarioCount]:
    """Instance counts per type, split by scenario.

    ``records`` yields ``(scenario, defect types found in one screenshot)``;
    the scenario is :data:`CONVENTIONAL` or :data:`SPLIT_FOLD`.
    """
    counts = {CONVENTIONAL: Counter(), SPLIT_FOLD: Counter()}
    for scenario, kinds in records:
        for kind in kinds:
            if kind is not DefectType.NORMAL:
                counts[scenario][type_matching(kind)] += 1
    keys = list(types) + sorted((set(counts[CONVENTIONAL]) | set(counts[SPLIT_FOLD])) - set(types))
    return {k: ScenarioCount(counts[CONVENTIONAL][k], counts[SPLIT_FOLD][k]) for k in keys}


def increase(before: int, after: int) -> Fraction | None:
    """Relative increase ``(after - before) / before``."""
    return Fraction(after - before, before) if before else None
