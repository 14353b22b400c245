"""``mwdefect`` command line.

Exit codes: 0 success, 1 usage error, 2 partial failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..config import Config, ConfigError, load_config
from ..evidence import EvidenceError, dump_hierarchy, load_triplet
from ..pipeline import prepare, process_triplet
from ..reason import BackendUnavailable, GeometricBackend, RemoteBackend, UnparseableResponse
from ..reason.report import UnknownDefectType, dumps_reports
from ..reflow import DEFAULT_OPS, InvalidOp, generate_corpus, parse_op
from ..som import save_png, som_path_for
from .runner import (EXIT_OK, EXIT_PARTIAL, EXIT_USAGE, evaluate_reports, render_tables,
                     run_pipeline, write_metrics)

log = logging.getLogger("mwdefect")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which we reserve
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def make_backend(name: str, config: Config):
    if name == "geometric":
        return GeometricBackend(config.oracle, config.filter)
    if name == "remote":
        try:
            return RemoteBackend(config.remote)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    raise UsageError(f"unknown backend {name!r}")


def _triplet(path: str):
    d = Path(path)
    return load_triplet(d / "screen.png", d / "hierarchy.json", d / "context.json")


def _emit(text: str, out: Path | None, name: str) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text, encoding="utf-8")


def cmd_generate(args, config: Config) -> int:
    try:
        ops = [parse_op(s) for s in args.ops.split(",") if s.strip()] if args.ops else list(DEFAULT_OPS)
    except InvalidOp as exc:
        raise UsageError(str(exc)) from exc
    out = Path(args.out or "corpus")
    corpus = generate_corpus(args.seed, args.layouts, ops, out_dir=out, config=config)
    print(f"wrote {len(corpus)} labelled triplets from {args.layouts} layouts to {out}")
    return EXIT_OK


def cmd_ingest(args, config: Config) -> int:
    t = _triplet(args.triplet)
    summary = {
        "image_size": list(t.image.size),
        "n_widgets": len(t.widgets),
        "context": t.context.to_json(),
    }
    print(json.dumps(summary, indent=1, sort_keys=True))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "hierarchy.dump.json").write_bytes(dump_hierarchy(t.widgets))
    return EXIT_OK


def cmd_filter(args, config: Config) -> int:
    metadata, _ = prepare(_triplet(args.triplet), config)
    out = Path(args.out) if args.out else None
    _emit(json.dumps(metadata.to_json(), indent=1, ensure_ascii=False) + "\n", out, "metadata.json")
    return EXIT_OK


def cmd_som(args, config: Config) -> int:
    d = Path(args.triplet)
    _, markset = prepare(_triplet(args.triplet), config)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        image_path = out / "screen.som.png"
    else:
        out, image_path = d, som_path_for(d / "screen.png")
    save_png(markset.marked_image, image_path)
    (out / "mapping.json").write_text(markset.mapping.dumps() + "\n", encoding="utf-8")
    print(f"{len(markset.marks)} marks -> {image_path}")
    return EXIT_OK


def cmd_analyze(args, config: Config) -> int:
    t = _triplet(args.triplet)
    result = process_triplet(t, make_backend(args.backend, config), config)
    _emit(dumps_reports(result.reports), Path(args.out) if args.out else None, "report.json")
    return EXIT_OK


def cmd_eval(args, config: Config) -> int:
    reports = Path(args.reports or Path(args.out or "out") / "reports")
    metrics = evaluate_reports(args.corpus, reports)
    if metrics is None:
        print(f"no report/truth pairs found under {reports}", file=sys.stderr)
        return EXIT_PARTIAL
    out = Path(args.out or "out")
    out.mkdir(parents=True, exist_ok=True)
    write_metrics(metrics, out)
    sys.stdout.write(render_tables(metrics))
    return EXIT_OK


def cmd_run(args, config: Config) -> int:
    out = Path(args.out or "out")
    result = run_pipeline(args.corpus, make_backend(args.backend, config), config, out)
    failures = {k: v for k, v in result.manifest["triplets"].items() if v["status"] != "ok"}
    if result.manifest.get("message"):
        print(result.manifest["message"], file=sys.stderr)
    if failures:
        print(f"{len(failures)} triplet(s) failed, see {out / 'errors.json'}", file=sys.stderr)
    if result.metrics is not None:
        sys.stdout.write(render_tables(result.metrics))
    return result.exit_code


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="TOML or JSON config file")
    common.add_argument("--backend", choices=("geometric", "remote"), default="geometric")
    common.add_argument("--seed", type=int, default=7)
    common.add_argument("--out", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="mwdefect",
                     description="GUI display-defect detection for multi-window screens")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="write a synthetic labelled corpus")
    p.add_argument("--layouts", type=int, default=50)
    p.add_argument("--ops", help="comma list, e.g. split:0.3,fold,drag_up:400 (default: all five)")
    p.set_defaults(func=cmd_generate)

    for name, func, help_ in (
        ("ingest", cmd_ingest, "validate one triplet directory"),
        ("filter", cmd_filter, "print retained widgets in reading order"),
        ("som", cmd_som, "write the marked screenshot and mapping table"),
        ("analyze", cmd_analyze, "diagnose one triplet"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("triplet", help="directory with screen.png, hierarchy.json, context.json")
        p.set_defaults(func=func)

    p = sub.add_parser("eval", parents=[common], help="metrics from existing report files")
    p.add_argument("corpus")
    p.add_argument("--reports", help="reports root (default: <out>/reports)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run", parents=[common], help="full pipeline over a corpus")
    p.add_argument("corpus")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
        return args.func(args, config)
    except (UsageError, ConfigError, FileNotFoundError) as exc:
        print(f"mwdefect: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EvidenceError, UnparseableResponse, UnknownDefectType, BackendUnavailable) as exc:
        print(f"mwdefect: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
