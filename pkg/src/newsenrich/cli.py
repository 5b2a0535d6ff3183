"""Command-line entry point.

Human-readable progress goes to stderr; machine output (JSON) goes to
stdout when --json is set. Exit status: 0 when everything succeeded, 2
when any record FAILED during a run/resume, 1 on configuration or IO
errors (including usage errors).
"""

from __future__ import annotations

import argparse
import json
import signal
import sys
import threading
from pathlib import Path

from .corpus import CorpusError, compute_stats, load_corpus
from .evalsvc import (
    EvalError,
    EvalService,
    ScoreStore,
    aggregate,
    append_batch,
    batches_path_for,
    create_batch,
    load_batches,
    serve,
)
from .pipeline import ConfigError, PipelineError, load_config, resume, run
from .summarize import SummarizeError, SummaryConfig, extract_summary, headline_extractive

_USAGE_ERROR = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(_USAGE_ERROR)


def _build_parser() -> _Parser:
    parser = _Parser(prog="newsenrich", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    def add(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--json", action="store_true", help="JSON on stdout")
        return p

    p = add("run", "run the enrichment pipeline over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    p = add("resume", "continue a partially processed corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--retry-failed", action="store_true")

    p = add("stats", "corpus coverage statistics")
    p.add_argument("--corpus", required=True)

    p = add("summarize", "extractive summary of a text file (or stdin)")
    p.add_argument("file", nargs="?", help="input text file; stdin when omitted")
    p.add_argument("--config", help="pipeline config supplying summary parameters")

    p = add("headline", "extractive headline of a text file (or stdin)")
    p.add_argument("file", nargs="?", help="input text file; stdin when omitted")
    p.add_argument("--config", help="pipeline config supplying headline parameters")

    p = add("eval-batch", "sample an evaluation batch from ENRICHED records")
    p.add_argument("--corpus", required=True)
    p.add_argument("--seed", required=True, type=int)
    p.add_argument("--sample-size", required=True, type=int)
    p.add_argument("--scores-file", required=True)
    p.add_argument("--batch-id")

    p = add("eval-report", "aggregate submitted scores for a batch")
    p.add_argument("--batch-id", required=True)
    p.add_argument("--scores-file", required=True)

    p = add("eval-serve", "serve the evaluation HTTP API (and optional UI)")
    p.add_argument("--corpus", required=True)
    p.add_argument("--scores-file", required=True)
    p.add_argument("--port", type=int, default=8787)
    p.add_argument("--ui-dir")

    return parser


def _emit(args, payload: dict, human_lines: list[str]) -> None:
    if args.json:
        print(json.dumps(payload, ensure_ascii=False))
    else:
        for line in human_lines:
            print(line)


def _report_lines(report) -> list[str]:
    lines = []
    for name, count in report.stages.items():
        lines.append(
            f"{name:<11} attempted={count.attempted:<5} "
            f"succeeded={count.succeeded:<5} failed={count.failed}"
        )
    stats = report.corpus_stats
    lines.append(
        f"corpus: {stats.total_documents} documents, "
        f"avg {stats.avg_urls_per_document:.2f} URLs per valid-URL document"
    )
    return lines


def _cmd_run(args, is_resume: bool = False) -> int:
    config = load_config(args.config)
    if is_resume:
        report = resume(args.corpus, config, args.out, retry_failed=args.retry_failed)
    else:
        report = run(args.corpus, config, args.out)
    print(f"wrote {args.out}", file=sys.stderr)
    _emit(args, report.to_dict(), _report_lines(report))
    return 2 if report.any_failures else 0


def _cmd_stats(args) -> int:
    stats = compute_stats(load_corpus(args.corpus))
    payload = stats.to_dict()
    lines = [f"{key}: {value}" for key, value in payload.items()]
    _emit(args, payload, lines)
    return 0


def _read_input_text(args) -> str:
    if args.file:
        return Path(args.file).read_text(encoding="utf-8")
    return sys.stdin.read()


def _summary_config(args) -> tuple[SummaryConfig, int]:
    if args.config:
        config = load_config(args.config)
        return config.summary, config.headline_max_tokens
    return SummaryConfig(), 12


def _cmd_summarize(args) -> int:
    summary_cfg, _ = _summary_config(args)
    text = _read_input_text(args)
    summary = extract_summary(text, summary_cfg.uni_budget_tokens, summary_cfg)
    _emit(args, {"summary": summary}, [summary])
    return 0


def _cmd_headline(args) -> int:
    summary_cfg, max_tokens = _summary_config(args)
    text = _read_input_text(args)
    headline = headline_extractive(text, max_tokens, summary_cfg)
    _emit(args, {"headline": headline}, [headline])
    return 0


def _cmd_eval_batch(args) -> int:
    records = load_corpus(args.corpus)
    batch = create_batch(records, args.sample_size, args.seed, batch_id=args.batch_id)
    append_batch(batch, batches_path_for(args.scores_file))
    print(
        f"batch {batch.batch_id}: {len(batch.record_ids)} records "
        f"-> {batches_path_for(args.scores_file)}",
        file=sys.stderr,
    )
    _emit(
        args,
        batch.to_dict(),
        [batch.batch_id] + [f"  {record_id}" for record_id in batch.record_ids],
    )
    return 0


def _cmd_eval_report(args) -> int:
    batches = load_batches(batches_path_for(args.scores_file))
    batch = batches.get(args.batch_id)
    if batch is None:
        print(f"unknown batch {args.batch_id!r}", file=sys.stderr)
        return 1
    store = ScoreStore(args.scores_file)
    in_batch = set(batch.record_ids)
    scores = [s for s in store.resolved() if s.record_id in in_batch]
    report = aggregate(scores)
    payload = report.to_dict()
    lines = [
        f"{category}: {report.means[category]:.2f}" for category in report.means
    ] + [f"scores: {report.score_count}"]
    _emit(args, payload, lines)
    return 0


def _cmd_eval_serve(args) -> int:
    records = load_corpus(args.corpus)
    store = ScoreStore(args.scores_file)
    batches = load_batches(batches_path_for(args.scores_file))
    service = EvalService(records, store, batches)
    server = serve(service, args.port, ui_dir=args.ui_dir)

    def _shutdown(signum, frame):
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGTERM, _shutdown)
    signal.signal(signal.SIGINT, _shutdown)
    print(
        f"eval service on port {server.server_address[1]} "
        f"({len(batches)} batch(es), scores -> {args.scores_file})",
        file=sys.stderr,
    )
    try:
        server.serve_forever()
    finally:
        server.server_close()
    print("eval service stopped", file=sys.stderr)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not args.subcommand:
        parser.print_usage(sys.stderr)
        return _USAGE_ERROR

    commands = {
        "run": lambda: _cmd_run(args),
        "resume": lambda: _cmd_run(args, is_resume=True),
        "stats": lambda: _cmd_stats(args),
        "summarize": lambda: _cmd_summarize(args),
        "headline": lambda: _cmd_headline(args),
        "eval-batch": lambda: _cmd_eval_batch(args),
        "eval-report": lambda: _cmd_eval_report(args),
        "eval-serve": lambda: _cmd_eval_serve(args),
    }
    try:
        return commands[args.subcommand]()
    except (ConfigError, CorpusError, PipelineError, SummarizeError, EvalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
