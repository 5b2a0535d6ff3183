"""Human-evaluation workflow: batch sampling, rubric score capture over
HTTP, append-only persistence and aggregate reporting.

Scores rate four categories (coherency, enrichment, relevancy,
readability) on a 0-4 scale. Batch sampling uses a SplitMix64 generator
(published constants) so a seed reproduces the same batch in any
implementation language. Scores persist to an append-only JSONL file with
last-write-wins resolution per (record, annotator); batches persist to a
sibling ``<stem>-batches.jsonl`` file.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any

from .corpus import ArticleRecord, Stage

__all__ = [
    "CATEGORIES",
    "SCALE_LABELS",
    "EvaluationScore",
    "EvaluationBatch",
    "AggregateReport",
    "EvalError",
    "ValidationError",
    "SplitMix64",
    "ScoreStore",
    "batches_path_for",
    "load_batches",
    "append_batch",
    "create_batch",
    "submit_score",
    "aggregate",
    "EvalService",
    "serve",
]

CATEGORIES = ("coherency", "enrichment", "relevancy", "readability")

# 0..4 label wording, served to the UI so it never diverges.
SCALE_LABELS = ("very-poor", "somewhat-unfaithful", "moderate", "good", "near-perfect")


class EvalError(Exception):
    """Evaluation workflow failure."""


class ValidationError(EvalError):
    """A score payload failed validation; names the offending field."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


_MASK64 = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 with the published constants; reproducible everywhere."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next_u64() % n


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class EvaluationScore:
    """One annotator's 4-category rating of one enriched record."""

    record_id: str
    annotator_id: str
    coherency: int
    enrichment: int
    relevancy: int
    readability: int
    submitted_at: str
    comment: str | None = None

    def value(self, category: str) -> int:
        return int(getattr(self, category))

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "record_id": self.record_id,
            "annotator_id": self.annotator_id,
            "coherency": self.coherency,
            "enrichment": self.enrichment,
            "relevancy": self.relevancy,
            "readability": self.readability,
            "submitted_at": self.submitted_at,
        }
        if self.comment is not None:
            d["comment"] = self.comment
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EvaluationScore":
        if not isinstance(d, dict):
            raise ValidationError("payload", "score payload must be a JSON object")
        for name in ("record_id", "annotator_id"):
            if not d.get(name) or not isinstance(d[name], str):
                raise ValidationError(name, "required non-empty string")
        values = {}
        for category in CATEGORIES:
            if category not in d:
                raise ValidationError(category, "missing category score")
            raw = d[category]
            if isinstance(raw, bool) or not isinstance(raw, int):
                raise ValidationError(category, "score must be an integer")
            if not 0 <= raw <= 4:
                raise ValidationError(category, f"score {raw} outside 0..4")
            values[category] = raw
        comment = d.get("comment")
        if comment is not None and not isinstance(comment, str):
            raise ValidationError("comment", "must be a string")
        return cls(
            record_id=d["record_id"],
            annotator_id=d["annotator_id"],
            submitted_at=str(d.get("submitted_at") or _utc_now()),
            comment=comment,
            **values,
        )


@dataclass
class EvaluationBatch:
    """A seeded sample of enriched records for annotation."""

    batch_id: str
    record_ids: list[str]
    sample_size: int
    seed: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "batch_id": self.batch_id,
            "record_ids": self.record_ids,
            "sample_size": self.sample_size,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EvaluationBatch":
        return cls(
            batch_id=str(d["batch_id"]),
            record_ids=[str(r) for r in d["record_ids"]],
            sample_size=int(d["sample_size"]),
            seed=int(d["seed"]),
        )


def create_batch(
    records: list[ArticleRecord],
    sample_size: int,
    seed: int,
    batch_id: str | None = None,
) -> EvaluationBatch:
    """Uniform sample (without replacement) of ENRICHED records.

    A partial Fisher-Yates shuffle driven by SplitMix64 makes the same
    seed and corpus produce the same batch on every platform. Saturates at
    the number of available records.
    """
    if sample_size < 1:
        raise EvalError("sample_size must be >= 1")
    pool = [r.id for r in records if r.stage is Stage.ENRICHED]
    if not pool:
        raise EvalError("corpus has no ENRICHED records to sample")
    rng = SplitMix64(seed)
    k = min(sample_size, len(pool))
    for i in range(k):
        j = i + rng.below(len(pool) - i)
        pool[i], pool[j] = pool[j], pool[i]
    return EvaluationBatch(
        batch_id=batch_id or f"batch-s{seed}-n{sample_size}",
        record_ids=pool[:k],
        sample_size=sample_size,
        seed=seed,
    )


class ScoreStore:
    """Append-only JSONL of scores; last write wins per (record, annotator)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, score: EvaluationScore) -> None:
        line = json.dumps(score.to_dict(), ensure_ascii=False)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8", newline="\n") as fh:
                fh.write(line)
                fh.write("\n")
                fh.flush()

    def all_scores(self) -> list[EvaluationScore]:
        if not self.path.exists():
            return []
        scores = []
        with self.path.open("r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    scores.append(EvaluationScore.from_dict(json.loads(line)))
                except (json.JSONDecodeError, ValidationError) as exc:
                    raise EvalError(f"scores file line {line_no}: {exc}")
        return scores

    def resolved(self) -> list[EvaluationScore]:
        latest: dict[tuple[str, str], EvaluationScore] = {}
        for score in self.all_scores():
            latest[(score.record_id, score.annotator_id)] = score
        return list(latest.values())


def batches_path_for(scores_path: str | Path) -> Path:
    scores_path = Path(scores_path)
    return scores_path.with_name(scores_path.stem + "-batches.jsonl")


def load_batches(path: str | Path) -> dict[str, EvaluationBatch]:
    path = Path(path)
    batches: dict[str, EvaluationBatch] = {}
    if not path.exists():
        return batches
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            batch = EvaluationBatch.from_dict(json.loads(line))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise EvalError(f"batches file line {line_no}: {exc}")
        batches[batch.batch_id] = batch
    return batches


def append_batch(batch: EvaluationBatch, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(batch.to_dict(), ensure_ascii=False))
        fh.write("\n")


def submit_score(batch: EvaluationBatch, score: EvaluationScore, store: ScoreStore) -> None:
    """Validate against the batch and persist; resubmission replaces."""
    if score.record_id not in batch.record_ids:
        raise ValidationError("record_id", f"{score.record_id!r} not in batch {batch.batch_id}")
    for category in CATEGORIES:
        value = score.value(category)
        if not 0 <= value <= 4:
            raise ValidationError(category, f"score {value} outside 0..4")
    store.append(score)


@dataclass
class AggregateReport:
    """Per-category means (half-up, 2 decimals) and histograms."""

    means: dict[str, float]
    score_count: int
    histograms: dict[str, list[int]]

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = dict(self.means)
        payload["score_count"] = self.score_count
        payload["histograms"] = self.histograms
        return payload


def aggregate(scores: list[EvaluationScore]) -> AggregateReport:
    if not scores:
        raise EvalError("cannot aggregate an empty score list")
    means: dict[str, float] = {}
    histograms: dict[str, list[int]] = {}
    for category in CATEGORIES:
        values = [score.value(category) for score in scores]
        mean = (Decimal(sum(values)) / Decimal(len(values))).quantize(
            Decimal("0.01"), rounding=ROUND_HALF_UP
        )
        means[category] = float(mean)
        histogram = [0, 0, 0, 0, 0]
        for value in values:
            histogram[value] += 1
        histograms[category] = histogram
    return AggregateReport(means=means, score_count=len(scores), histograms=histograms)


class EvalService:
    """Transport-independent request handlers for the evaluation API."""

    def __init__(
        self,
        records: list[ArticleRecord],
        store: ScoreStore,
        batches: dict[str, EvaluationBatch],
    ):
        self.records = {record.id: record for record in records}
        self.store = store
        self.batches = dict(batches)

    def get_rubric(self) -> tuple[int, dict[str, Any]]:
        return 200, {"categories": list(CATEGORIES), "labels": list(SCALE_LABELS)}

    def get_batch(self, batch_id: str) -> tuple[int, dict[str, Any]]:
        batch = self.batches.get(batch_id)
        if batch is None:
            return 404, {"field": "batch_id", "reason": f"unknown batch {batch_id!r}"}
        in_batch = set(batch.record_ids)
        completed: dict[str, list[str]] = {}
        done: dict[str, set[str]] = {}
        for score in self.store.resolved():
            if score.record_id in in_batch:
                done.setdefault(score.annotator_id, set()).add(score.record_id)
        for annotator, ids in sorted(done.items()):
            completed[annotator] = [r for r in batch.record_ids if r in ids]
        return 200, {
            "batch_id": batch.batch_id,
            "record_ids": batch.record_ids,
            "completed": completed,
        }

    def get_record(self, record_id: str) -> tuple[int, dict[str, Any]]:
        record = self.records.get(record_id)
        if record is None:
            return 404, {"field": "record_id", "reason": f"unknown record {record_id!r}"}
        payload: dict[str, Any] = {
            "id": record.id,
            "source_text": record.source_text,
            "enriched_source_text": record.enriched_source_text or "",
        }
        if record.pivot_text is not None:
            payload["pivot_text"] = record.pivot_text
        if record.enriched_pivot_text is not None:
            payload["enriched_pivot_text"] = record.enriched_pivot_text
        return 200, payload

    def post_score(self, payload: Any) -> tuple[int, dict[str, Any] | None]:
        try:
            score = EvaluationScore.from_dict(payload)
            batch = next(
                (b for b in self.batches.values() if score.record_id in b.record_ids),
                None,
            )
            if batch is None:
                raise ValidationError(
                    "record_id", f"{score.record_id!r} is not in any known batch"
                )
            submit_score(batch, score, self.store)
        except ValidationError as exc:
            return 400, {"field": exc.field, "reason": exc.reason}
        return 204, None

    def get_report(self, batch_id: str) -> tuple[int, dict[str, Any]]:
        batch = self.batches.get(batch_id)
        if batch is None:
            return 404, {"field": "batch_id", "reason": f"unknown batch {batch_id!r}"}
        in_batch = set(batch.record_ids)
        scores = [s for s in self.store.resolved() if s.record_id in in_batch]
        if not scores:
            return 400, {"field": "scores", "reason": "no scores submitted for this batch"}
        return 200, aggregate(scores).to_dict()


_BATCH_RE = re.compile(r"^/api/batch/(?P<batch_id>[^/]+)$")
_RECORD_RE = re.compile(r"^/api/record/(?P<record_id>[^/]+)$")
_REPORT_RE = re.compile(r"^/api/report/(?P<batch_id>[^/]+)$")

_MIME = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


def _make_handler(service: EvalService, ui_dir: Path | None):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):
            pass

        def _send_json(self, status: int, payload: dict[str, Any] | None) -> None:
            if status == 204 or payload is None:
                self.send_response(status)
                self.send_header("Content-Length", "0")
                self.end_headers()
                return
            body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def _serve_static(self, path: str) -> None:
            if ui_dir is None:
                self._send_json(404, {"field": "path", "reason": "no UI directory configured"})
                return
            relative = path.lstrip("/") or "index.html"
            target = (ui_dir / relative).resolve()
            if not str(target).startswith(str(ui_dir.resolve())) or not target.is_file():
                self._send_json(404, {"field": "path", "reason": f"not found: {path}"})
                return
            body = target.read_bytes()
            self.send_response(200)
            self.send_header(
                "Content-Type", _MIME.get(target.suffix, "application/octet-stream")
            )
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_GET(self):
            path = self.path.split("?", 1)[0]
            match = _BATCH_RE.match(path)
            if match:
                self._send_json(*service.get_batch(match.group("batch_id")))
                return
            match = _RECORD_RE.match(path)
            if match:
                self._send_json(*service.get_record(match.group("record_id")))
                return
            match = _REPORT_RE.match(path)
            if match:
                self._send_json(*service.get_report(match.group("batch_id")))
                return
            if path == "/api/rubric":
                self._send_json(*service.get_rubric())
                return
            if path.startswith("/api/"):
                self._send_json(404, {"field": "path", "reason": f"unknown endpoint {path}"})
                return
            self._serve_static(path)

        def do_POST(self):
            path = self.path.split("?", 1)[0]
            if path != "/api/score":
                self._send_json(404, {"field": "path", "reason": f"unknown endpoint {path}"})
                return
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length) if length else b""
            try:
                payload = json.loads(raw or b"null")
            except json.JSONDecodeError:
                self._send_json(400, {"field": "payload", "reason": "invalid JSON"})
                return
            self._send_json(*service.post_score(payload))

    return Handler


def serve(
    service: EvalService, port: int, ui_dir: str | Path | None = None
) -> ThreadingHTTPServer:
    """Build the HTTP server (not yet serving); caller runs serve_forever."""
    handler = _make_handler(service, Path(ui_dir) if ui_dir else None)
    server = ThreadingHTTPServer(("0.0.0.0", port), handler)
    server.daemon_threads = True
    return server
