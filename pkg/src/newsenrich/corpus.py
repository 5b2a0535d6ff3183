"""Corpus data model, JSONL persistence and the record stage machine.

A corpus is a UTF-8 JSONL file, one article record per line, every line
carrying ``schema_version``. Text fields are NFC-normalized on load and
save so diacritics round-trip byte-exactly. Unknown fields on a line are
preserved across load/save, and key order is canonical, so re-saving an
unmodified corpus is byte-identical.

Evidence documents (fetched web pages reduced to clean text) live in a
sidecar JSONL next to the corpus (``<stem>.evidence.jsonl``); article
records reference them by id.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import unicodedata
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Any
from urllib.parse import urlsplit

__all__ = [
    "SCHEMA_VERSION",
    "Stage",
    "Verdict",
    "CandidateUrl",
    "FailureInfo",
    "ArticleRecord",
    "EvidenceDocument",
    "CorpusStats",
    "CorpusError",
    "SchemaError",
    "InvariantError",
    "load_corpus",
    "save_corpus",
    "load_evidence",
    "save_evidence",
    "evidence_path_for",
    "compute_stats",
    "record_problems",
    "validate_record",
    "completed_stage_index",
    "content_sha",
]

SCHEMA_VERSION = 1


class CorpusError(Exception):
    """Base class for corpus failures."""


class SchemaError(CorpusError):
    """A corpus file line violates the record schema."""

    def __init__(self, message: str, line_errors: list[tuple[int, str]] | None = None):
        super().__init__(message)
        self.line_errors = line_errors or []


class InvariantError(CorpusError):
    """A record violates a type invariant."""


class Stage(str, enum.Enum):
    RAW = "RAW"
    CLEANED = "CLEANED"
    TRANSLATED = "TRANSLATED"
    HEADLINED = "HEADLINED"
    SEARCHED = "SEARCHED"
    FETCHED = "FETCHED"
    SUMMARIZED = "SUMMARIZED"
    ENRICHED = "ENRICHED"
    FAILED = "FAILED"


# Progression order; FAILED sits outside it.
STAGE_ORDER: tuple[Stage, ...] = (
    Stage.RAW,
    Stage.CLEANED,
    Stage.TRANSLATED,
    Stage.HEADLINED,
    Stage.SEARCHED,
    Stage.FETCHED,
    Stage.SUMMARIZED,
    Stage.ENRICHED,
)

_STAGE_INDEX = {stage: i for i, stage in enumerate(STAGE_ORDER)}

# Fields that must be present once a record has completed the given stage.
_REQUIRED_AT: dict[Stage, tuple[str, ...]] = {
    Stage.CLEANED: ("cleaned_text",),
    Stage.TRANSLATED: ("pivot_text",),
    Stage.HEADLINED: ("headline",),
    Stage.SEARCHED: ("urls",),
    Stage.FETCHED: ("evidence",),
    Stage.SUMMARIZED: ("per_doc_summaries", "fused_summary"),
    Stage.ENRICHED: ("enriched_pivot_text", "enriched_source_text"),
}


class Verdict(str, enum.Enum):
    VALID = "VALID"
    DENYLISTED = "DENYLISTED"
    NON_ARTICLE = "NON_ARTICLE"
    FETCH_FAILED = "FETCH_FAILED"
    UNCHECKED = "UNCHECKED"


def _nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def content_sha(body: str) -> str:
    """Deterministic content hash of an evidence body (NFC UTF-8 sha256)."""
    return hashlib.sha256(_nfc(body).encode("utf-8")).hexdigest()


@dataclass
class CandidateUrl:
    """One search hit attached to a record."""

    url: str
    rank: int
    verdict: Verdict = Verdict.UNCHECKED
    error: str | None = None

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"url": self.url, "rank": self.rank, "verdict": self.verdict.value}
        if self.error is not None:
            d["error"] = self.error
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CandidateUrl":
        return cls(
            url=str(d["url"]),
            rank=int(d["rank"]),
            verdict=Verdict(d.get("verdict", "UNCHECKED")),
            error=d.get("error"),
        )


@dataclass
class FailureInfo:
    """Where and why a record failed."""

    stage: Stage
    code: str
    message: str

    def to_dict(self) -> dict[str, Any]:
        return {"stage": self.stage.value, "code": self.code, "message": self.message}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "FailureInfo":
        return cls(stage=Stage(d["stage"]), code=str(d["code"]), message=str(d["message"]))


# Text fields normalized to NFC on load/save.
_TEXT_FIELDS = (
    "source_text",
    "cleaned_text",
    "pivot_text",
    "headline",
    "fused_summary",
    "enriched_pivot_text",
    "enriched_source_text",
)

# Canonical serialization order (schema_version always first).
_FIELD_ORDER = (
    "id",
    "source_lang",
    "target_pivot_lang",
    "source_text",
    "cleaned_text",
    "pivot_text",
    "headline",
    "urls",
    "evidence",
    "per_doc_summaries",
    "fused_summary",
    "enriched_pivot_text",
    "enriched_source_text",
    "stage",
    "failure",
)


@dataclass
class ArticleRecord:
    """One source article plus every pipeline-stage artifact attached to it."""

    id: str
    source_lang: str
    target_pivot_lang: str
    source_text: str
    cleaned_text: str | None = None
    pivot_text: str | None = None
    headline: str | None = None
    urls: list[CandidateUrl] | None = None
    evidence: list[str] | None = None
    per_doc_summaries: list[str] | None = None
    fused_summary: str | None = None
    enriched_pivot_text: str | None = None
    enriched_source_text: str | None = None
    stage: Stage = Stage.RAW
    failure: FailureInfo | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    def normalized(self) -> "ArticleRecord":
        """Copy with all text fields NFC-normalized."""
        changes: dict[str, Any] = {}
        for name in _TEXT_FIELDS:
            value = getattr(self, name)
            if isinstance(value, str):
                changes[name] = _nfc(value)
        if self.per_doc_summaries is not None:
            changes["per_doc_summaries"] = [_nfc(s) for s in self.per_doc_summaries]
        return replace(self, **changes) if changes else self

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"schema_version": SCHEMA_VERSION}
        for name in _FIELD_ORDER:
            value = getattr(self, name)
            if value is None:
                continue
            if name == "urls":
                d[name] = [u.to_dict() for u in value]
            elif name == "stage":
                d[name] = value.value
            elif name == "failure":
                d[name] = value.to_dict()
            else:
                d[name] = value
        for key, value in self.extra.items():
            if key not in d:
                d[key] = value
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ArticleRecord":
        if "schema_version" not in d:
            raise SchemaError("missing required field 'schema_version'")
        if d["schema_version"] != SCHEMA_VERSION:
            raise SchemaError(f"unsupported schema_version {d['schema_version']!r}")
        known = set(_FIELD_ORDER) | {"schema_version"}
        missing = [name for name in ("id", "source_lang", "target_pivot_lang", "source_text") if name not in d]
        if missing:
            raise SchemaError(f"missing required field {missing[0]!r}")
        try:
            stage = Stage(d.get("stage", "RAW"))
        except ValueError as exc:
            raise SchemaError(f"invalid stage {d.get('stage')!r}") from exc
        urls = None
        if d.get("urls") is not None:
            try:
                urls = [CandidateUrl.from_dict(u) for u in d["urls"]]
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"invalid urls entry: {exc}") from exc
        failure = None
        if d.get("failure") is not None:
            try:
                failure = FailureInfo.from_dict(d["failure"])
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"invalid failure entry: {exc}") from exc
        record = cls(
            id=str(d["id"]),
            source_lang=str(d["source_lang"]),
            target_pivot_lang=str(d["target_pivot_lang"]),
            source_text=str(d["source_text"]),
            cleaned_text=d.get("cleaned_text"),
            pivot_text=d.get("pivot_text"),
            headline=d.get("headline"),
            urls=urls,
            evidence=list(d["evidence"]) if d.get("evidence") is not None else None,
            per_doc_summaries=(
                list(d["per_doc_summaries"]) if d.get("per_doc_summaries") is not None else None
            ),
            fused_summary=d.get("fused_summary"),
            enriched_pivot_text=d.get("enriched_pivot_text"),
            enriched_source_text=d.get("enriched_source_text"),
            stage=stage,
            failure=failure,
            extra={k: v for k, v in d.items() if k not in known},
        )
        return record.normalized()


def _is_absolute_http(url: str) -> bool:
    try:
        parts = urlsplit(url)
    except ValueError:
        return False
    return parts.scheme in ("http", "https") and bool(parts.netloc)


def completed_stage_index(record: ArticleRecord) -> int:
    """Index in STAGE_ORDER of the last stage the record completed.

    For FAILED records this is the stage before the failing one.
    """
    if record.stage is Stage.FAILED:
        if record.failure is None:
            raise InvariantError(f"record {record.id!r}: FAILED without failure info")
        failing = record.failure.stage
        if failing is Stage.FAILED or failing not in _STAGE_INDEX:
            raise InvariantError(f"record {record.id!r}: invalid failing stage {failing}")
        return _STAGE_INDEX[failing] - 1
    return _STAGE_INDEX[record.stage]


def record_problems(record: ArticleRecord) -> list[str]:
    """Pure invariant check; returns a list of violations (empty when valid)."""
    problems: list[str] = []
    if not record.id:
        problems.append("id is empty")
    if record.stage is Stage.FAILED and record.failure is None:
        problems.append("FAILED record lacks failure info")
        return problems
    try:
        completed = completed_stage_index(record)
    except InvariantError as exc:
        return [str(exc)]
    for stage in STAGE_ORDER[: completed + 1]:
        for name in _REQUIRED_AT.get(stage, ()):
            if getattr(record, name) is None:
                problems.append(
                    f"stage {record.stage.value} requires field {name!r}"
                )
    if record.urls is not None:
        last_rank = 0
        for cand in record.urls:
            if not _is_absolute_http(cand.url):
                problems.append(f"url {cand.url!r} is not an absolute http(s) URL")
            if cand.rank < 1:
                problems.append(f"url {cand.url!r} has rank {cand.rank} < 1")
            elif cand.rank <= last_rank:
                problems.append(f"url ranks not strictly increasing at {cand.url!r}")
            last_rank = max(last_rank, cand.rank)
    return problems


def validate_record(record: ArticleRecord) -> None:
    problems = record_problems(record)
    if problems:
        raise InvariantError(f"record {record.id!r}: {problems[0]}")


def _write_jsonl_atomic(lines: list[str], path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with tmp.open("w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")
    os.replace(tmp, path)


def load_corpus(path: str | Path) -> list[ArticleRecord]:
    """Read a JSONL corpus; records come back in file order.

    Malformed lines are all collected and reported together with their
    1-based line numbers.
    """
    path = Path(path)
    records: list[ArticleRecord] = []
    errors: list[tuple[int, str]] = []
    seen_ids: dict[str, int] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                errors.append((line_no, f"invalid JSON: {exc.msg}"))
                continue
            if not isinstance(payload, dict):
                errors.append((line_no, "line is not a JSON object"))
                continue
            try:
                record = ArticleRecord.from_dict(payload)
            except SchemaError as exc:
                errors.append((line_no, str(exc)))
                continue
            problems = record_problems(record)
            if problems:
                errors.append((line_no, problems[0]))
                continue
            if record.id in seen_ids:
                errors.append(
                    (line_no, f"duplicate id {record.id!r} (first seen on line {seen_ids[record.id]})")
                )
                continue
            seen_ids[record.id] = line_no
            records.append(record)
    if errors:
        detail = "; ".join(f"line {n}: {msg}" for n, msg in errors)
        raise SchemaError(f"corpus {path}: {detail}", line_errors=errors)
    return records


def save_corpus(records: list[ArticleRecord], path: str | Path) -> None:
    """Write records as JSONL, one per line, stable key order, atomically."""
    seen: set[str] = set()
    lines: list[str] = []
    for record in records:
        validate_record(record)
        if record.id in seen:
            raise InvariantError(f"record {record.id!r}: duplicate id")
        seen.add(record.id)
        lines.append(json.dumps(record.normalized().to_dict(), ensure_ascii=False))
    _write_jsonl_atomic(lines, path)


@dataclass
class EvidenceDocument:
    """One fetched web page reduced to clean article text."""

    id: str
    parent_article_id: str
    url: str
    title: str
    body: str
    fetched_at: str
    content_sha: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema_version": SCHEMA_VERSION,
            "id": self.id,
            "parent_article_id": self.parent_article_id,
            "url": self.url,
            "title": self.title,
            "body": self.body,
            "fetched_at": self.fetched_at,
            "content_sha": self.content_sha,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EvidenceDocument":
        missing = [
            k
            for k in ("id", "parent_article_id", "url", "body", "fetched_at", "content_sha")
            if k not in d
        ]
        if missing:
            raise SchemaError(f"missing required field {missing[0]!r}")
        return cls(
            id=str(d["id"]),
            parent_article_id=str(d["parent_article_id"]),
            url=str(d["url"]),
            title=_nfc(str(d.get("title", ""))),
            body=_nfc(str(d["body"])),
            fetched_at=str(d["fetched_at"]),
            content_sha=str(d["content_sha"]),
        )

    @classmethod
    def build(
        cls, id: str, parent_article_id: str, url: str, title: str, body: str, fetched_at: str
    ) -> "EvidenceDocument":
        body = _nfc(body)
        return cls(
            id=id,
            parent_article_id=parent_article_id,
            url=url,
            title=_nfc(title),
            body=body,
            fetched_at=fetched_at,
            content_sha=content_sha(body),
        )


def _validate_evidence(doc: EvidenceDocument) -> None:
    if not doc.body:
        raise InvariantError(f"evidence {doc.id!r}: body is empty")
    if doc.content_sha != content_sha(doc.body):
        raise InvariantError(f"evidence {doc.id!r}: content_sha does not match body")


def evidence_path_for(corpus_path: str | Path) -> Path:
    """Sidecar evidence-store path belonging to a corpus file."""
    corpus_path = Path(corpus_path)
    return corpus_path.with_name(corpus_path.stem + ".evidence.jsonl")


def load_evidence(path: str | Path) -> dict[str, EvidenceDocument]:
    """Read an evidence sidecar; returns id -> document."""
    path = Path(path)
    docs: dict[str, EvidenceDocument] = {}
    errors: list[tuple[int, str]] = []
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
                doc = EvidenceDocument.from_dict(payload)
                _validate_evidence(doc)
            except (json.JSONDecodeError, SchemaError, InvariantError) as exc:
                errors.append((line_no, str(exc)))
                continue
            docs[doc.id] = doc
    if errors:
        detail = "; ".join(f"line {n}: {msg}" for n, msg in errors)
        raise SchemaError(f"evidence {path}: {detail}", line_errors=errors)
    return docs


def save_evidence(docs: dict[str, EvidenceDocument], path: str | Path) -> None:
    """Write evidence documents as JSONL (insertion order), atomically."""
    lines = []
    for doc in docs.values():
        _validate_evidence(doc)
        lines.append(json.dumps(doc.to_dict(), ensure_ascii=False))
    _write_jsonl_atomic(lines, path)


@dataclass
class CorpusStats:
    """Corpus-level URL/headline coverage counts."""

    total_documents: int = 0
    documents_with_headlines: int = 0
    documents_with_any_url: int = 0
    documents_without_urls: int = 0
    documents_with_valid_urls_ge1: int = 0
    documents_with_valid_urls_ge2: int = 0
    total_urls: int = 0
    avg_urls_per_document: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "total_documents": self.total_documents,
            "documents_with_headlines": self.documents_with_headlines,
            "documents_with_any_url": self.documents_with_any_url,
            "documents_without_urls": self.documents_without_urls,
            "documents_with_valid_urls_ge1": self.documents_with_valid_urls_ge1,
            "documents_with_valid_urls_ge2": self.documents_with_valid_urls_ge2,
            "total_urls": self.total_urls,
            "avg_urls_per_document": self.avg_urls_per_document,
        }


def round_half_up(numerator: int, denominator: int, places: int = 2) -> float:
    """Half-up decimal rounding of numerator/denominator; 0.0 when empty."""
    if denominator == 0:
        return 0.0
    quant = Decimal(1).scaleb(-places)
    value = (Decimal(numerator) / Decimal(denominator)).quantize(quant, rounding=ROUND_HALF_UP)
    return float(value)


def compute_stats(records: list[ArticleRecord]) -> CorpusStats:
    """Derive Table-2 style counts from a record list.

    ``documents_without_urls`` counts records that were searched (urls
    present) yet gained no URL; valid URLs are those with verdict VALID.
    The average divides total URLs by valid-URL-bearing documents, rounded
    half-up to 2 decimals (0.00 for an empty denominator).
    """
    stats = CorpusStats(total_documents=len(records))
    for record in records:
        if record.headline:
            stats.documents_with_headlines += 1
        if record.urls is not None:
            if record.urls:
                stats.documents_with_any_url += 1
            else:
                stats.documents_without_urls += 1
            stats.total_urls += len(record.urls)
            valid = sum(1 for u in record.urls if u.verdict is Verdict.VALID)
            if valid >= 1:
                stats.documents_with_valid_urls_ge1 += 1
            if valid >= 2:
                stats.documents_with_valid_urls_ge2 += 1
    stats.avg_urls_per_document = round_half_up(
        stats.total_urls, stats.documents_with_valid_urls_ge1
    )
    return stats
