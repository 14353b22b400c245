"""Corpus runner, evaluation metrics and command-line entry point."""

from .metrics import (AppRates, AppVerdict, MissingTruth, ScenarioCount, TypeRow,
                      app_level_verdicts, f1_score, fmt_pct, fpr_fnr, increase, pct,
                      scenario_counts, type_prf)
from .runner import (EXIT_OK, EXIT_PARTIAL, EXIT_USAGE, RunResult, compute_metrics,
                     evaluate_reports, find_triplets, run_pipeline)
