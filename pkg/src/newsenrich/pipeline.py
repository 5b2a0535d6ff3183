"""Corpus-level orchestration of the enrichment flow.

Each record advances CLEANED -> TRANSLATED -> HEADLINED -> SEARCHED ->
FETCHED -> SUMMARIZED -> ENRICHED; a failing stage marks the record FAILED
(keeping completed-stage fields and the failure site) without disturbing
other records. Runs are resumable: finished records pass through
byte-identical, intermediate ones continue from their next stage, FAILED
ones retry only when asked. Output corpora and the evidence sidecar are
written atomically (temp file + rename).
"""

from __future__ import annotations

import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from . import backends as backends_mod
from . import summarize as summarize_mod
from .backends import BackendConfig, BackendError, TranslationRequest
from .corpus import (
    STAGE_ORDER,
    ArticleRecord,
    CorpusStats,
    EvidenceDocument,
    FailureInfo,
    Stage,
    Verdict,
    completed_stage_index,
    compute_stats,
    evidence_path_for,
    load_corpus,
    load_evidence,
    save_corpus,
    save_evidence,
)
from .summarize import SummarizeError, SummaryConfig
from .textproc import clean_text
from .webretrieval import (
    FetchError,
    FetchPolicy,
    Fetcher,
    NonArticleError,
    SearchError,
    UrlFilterPolicy,
    classify_url,
    extract_article,
    search,
    search_backend_from_dict,
)

__all__ = [
    "PipelineConfig",
    "PipelineError",
    "ConfigError",
    "StageCount",
    "RunReport",
    "run",
    "resume",
    "compose_enrichment",
    "load_config",
]


class PipelineError(Exception):
    """Pipeline-level failure (bad preconditions, IO)."""


class ConfigError(PipelineError):
    """The pipeline configuration is invalid."""


class _StageFailure(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass
class PipelineConfig:
    translation: BackendConfig
    headline: BackendConfig
    summarizer: BackendConfig | None = None  # None = built-in extractive engine
    search: dict[str, Any] = field(default_factory=dict)
    url_policy: UrlFilterPolicy = field(default_factory=UrlFilterPolicy)
    fetch: FetchPolicy = field(default_factory=FetchPolicy)
    summary: SummaryConfig = field(default_factory=SummaryConfig)
    headline_max_tokens: int = 12
    min_valid_urls: int = 1
    enrichment_separator: str = "\n\n"
    parallel_records: int = 4

    def __post_init__(self) -> None:
        if self.headline_max_tokens < 1:
            raise ConfigError("headline_max_tokens must be >= 1")
        if self.min_valid_urls < 0:
            raise ConfigError("min_valid_urls must be >= 0")
        if not self.enrichment_separator:
            raise ConfigError("enrichment_separator must be non-empty")
        if self.parallel_records < 1:
            raise ConfigError("parallel_records must be >= 1")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "PipelineConfig":
        try:
            backends_cfg = d.get("backends", {})
            if "translation" not in backends_cfg or "headline" not in backends_cfg:
                raise ConfigError("config requires backends.translation and backends.headline")
            translation = BackendConfig.from_dict(backends_cfg["translation"])
            headline = BackendConfig.from_dict(backends_cfg["headline"])
            summarizer_cfg = backends_cfg.get("summarizer", "NATIVE")
            summarizer = (
                None
                if summarizer_cfg in (None, "NATIVE", "native")
                else BackendConfig.from_dict(summarizer_cfg)
            )
            search_cfg = d.get("search", {})
            url_policy = UrlFilterPolicy.from_dict(search_cfg.get("policy", {}))
            fetch_policy = FetchPolicy.from_dict(d.get("fetch", {}))
            summary_fields = {
                k: v
                for k, v in d.get("summary", {}).items()
                if k in SummaryConfig.__dataclass_fields__
            }
            summary = SummaryConfig(**summary_fields)
        except ConfigError:
            raise
        except (BackendError, SummarizeError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"invalid pipeline config: {exc}") from exc
        return cls(
            translation=translation,
            headline=headline,
            summarizer=summarizer,
            search=search_cfg.get("backend", {}),
            url_policy=url_policy,
            fetch=fetch_policy,
            summary=summary,
            headline_max_tokens=int(d.get("headline_max_tokens", 12)),
            min_valid_urls=int(d.get("min_valid_urls", 1)),
            enrichment_separator=str(d.get("enrichment_separator", "\n\n")),
            parallel_records=int(d.get("parallel_records", 4)),
        )


def load_config(path: str | Path) -> PipelineConfig:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return PipelineConfig.from_dict(payload)


@dataclass
class StageCount:
    attempted: int = 0
    succeeded: int = 0
    failed: int = 0


@dataclass
class RunReport:
    stages: dict[str, StageCount] = field(default_factory=dict)
    wall_time_seconds: dict[str, float] = field(default_factory=dict)
    corpus_stats: CorpusStats = field(default_factory=CorpusStats)

    @property
    def any_failures(self) -> bool:
        return any(count.failed > 0 for count in self.stages.values())

    def to_dict(self) -> dict[str, Any]:
        return {
            "stages": {
                name: {
                    "attempted": count.attempted,
                    "succeeded": count.succeeded,
                    "failed": count.failed,
                }
                for name, count in self.stages.items()
            },
            "wall_time_seconds": {
                name: round(value, 6) for name, value in self.wall_time_seconds.items()
            },
            "corpus_stats": self.corpus_stats.to_dict(),
        }


_PROGRESS_STAGES = tuple(STAGE_ORDER[1:])  # CLEANED..ENRICHED


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class _Runtime:
    """Shared backends/services for one pipeline execution."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        try:
            self.search_backend = (
                search_backend_from_dict(config.search) if config.search else None
            )
        except (SearchError, KeyError) as exc:
            raise ConfigError(f"invalid search backend config: {exc}") from exc
        self.fetcher = Fetcher(config.fetch)
        if config.summarizer is None:
            self.engine = summarize_mod.native_engine(config.summary)
        else:
            summarizer_cfg = config.summarizer
            self.engine = lambda text, budget: backends_mod.abstractive_summarize(
                summarizer_cfg, text, budget
            )

    def require_search_backend(self):
        if self.search_backend is None:
            raise _StageFailure("CONFIG", "no search backend configured")
        return self.search_backend


def _stage_cleaned(record: ArticleRecord, runtime: _Runtime, evidence: dict) -> None:
    record.cleaned_text = clean_text(record.source_text)


def _stage_translated(record: ArticleRecord, runtime: _Runtime, evidence: dict) -> None:
    result = backends_mod.translate(
        runtime.config.translation,
        TranslationRequest(
            text=record.cleaned_text or "",
            source_lang=record.source_lang,
            target_lang=record.target_pivot_lang,
        ),
    )
    record.pivot_text = result.text


def _stage_headlined(record: ArticleRecord, runtime: _Runtime, evidence: dict) -> None:
    record.headline = backends_mod.generate_headline(
        runtime.config.headline, record.pivot_text or "", runtime.config.headline_max_tokens
    )


def _stage_searched(record: ArticleRecord, runtime: _Runtime, evidence: dict) -> None:
    backend = runtime.require_search_backend()
    candidates = search(backend, record.headline or "", runtime.config.url_policy)
    for candidate in candidates:
        candidate.verdict = classify_url(candidate, runtime.config.url_policy)
    record.urls = candidates
    potentially_valid = sum(
        1 for c in candidates if c.verdict is not Verdict.DENYLISTED
    )
    if potentially_valid < runtime.config.min_valid_urls:
        raise _StageFailure(
            "NO_EVIDENCE",
            f"{potentially_valid} candidate URL(s) after denylist filtering, "
            f"need {runtime.config.min_valid_urls}",
        )


def _stage_fetched(record: ArticleRecord, runtime: _Runtime, evidence: dict) -> None:
    documents: list[EvidenceDocument] = []
    for candidate in record.urls or []:
        if candidate.verdict is not Verdict.UNCHECKED:
            continue
        try:
            page = runtime.fetcher.fetch(candidate.url)
        except FetchError as exc:
            candidate.verdict = Verdict.FETCH_FAILED
            candidate.error = exc.code
            continue
        try:
            article = extract_article(page.body, page.final_url)
        except NonArticleError as exc:
            candidate.verdict = Verdict.NON_ARTICLE
            candidate.error = exc.reason[:120]
            continue
        candidate.verdict = Verdict.VALID
        documents.append(
            EvidenceDocument.build(
                id=f"{record.id}-ev{len(documents) + 1}",
                parent_article_id=record.id,
                url=candidate.url,
                title=article.title,
                body=article.body,
                fetched_at=_utc_now(),
            )
        )
    valid = sum(1 for c in record.urls or [] if c.verdict is Verdict.VALID)
    if valid < runtime.config.min_valid_urls:
        raise _StageFailure(
            "NO_EVIDENCE",
            f"{valid} valid URL(s) after fetching, need {runtime.config.min_valid_urls}",
        )
    record.evidence = [doc.id for doc in documents]
    for doc in documents:
        evidence[doc.id] = doc


def _stage_summarized(record: ArticleRecord, runtime: _Runtime, evidence: dict) -> None:
    bodies = []
    for evidence_id in record.evidence or []:
        doc = evidence.get(evidence_id)
        if doc is None:
            raise _StageFailure(
                "EVIDENCE_MISSING", f"evidence {evidence_id!r} not in evidence store"
            )
        bodies.append(doc.body)
    if not bodies:
        raise _StageFailure("NO_EVIDENCE", "no evidence documents to summarize")
    result = summarize_mod.summarize_multi(bodies, runtime.config.summary, runtime.engine)
    record.per_doc_summaries = result.per_doc_summaries
    record.fused_summary = result.fused_summary


def _stage_enriched(record: ArticleRecord, runtime: _Runtime, evidence: dict) -> None:
    compose_enrichment(record, runtime.config.enrichment_separator, runtime.config.translation)


def compose_enrichment(
    record: ArticleRecord, separator: str, translation: BackendConfig
) -> str:
    """Append the fused summary to the pivot text and back-translate.

    Sets ``enriched_pivot_text`` and ``enriched_source_text`` and advances
    the record to ENRICHED. The summary must be present and non-empty (an
    empty one signals corruption upstream).
    """
    if record.pivot_text is None or record.fused_summary is None:
        raise PipelineError(
            f"record {record.id!r}: compose_enrichment needs pivot_text and fused_summary"
        )
    if not record.fused_summary.strip():
        raise PipelineError(f"record {record.id!r}: fused_summary is empty")
    enriched = record.pivot_text + separator + record.fused_summary
    record.enriched_pivot_text = enriched
    back = backends_mod.translate(
        translation,
        TranslationRequest(
            text=enriched,
            source_lang=record.target_pivot_lang,
            target_lang=record.source_lang,
        ),
    )
    record.enriched_source_text = back.text
    record.stage = Stage.ENRICHED
    return enriched


_STAGE_FUNCS = {
    Stage.CLEANED: _stage_cleaned,
    Stage.TRANSLATED: _stage_translated,
    Stage.HEADLINED: _stage_headlined,
    Stage.SEARCHED: _stage_searched,
    Stage.FETCHED: _stage_fetched,
    Stage.SUMMARIZED: _stage_summarized,
    Stage.ENRICHED: _stage_enriched,
}

# Exceptions that mark a record FAILED instead of aborting the run.
_RECORD_ERRORS = (
    _StageFailure,
    BackendError,
    SummarizeError,
    SearchError,
    FetchError,
    PipelineError,
)


class _Reporter:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.stages: dict[str, StageCount] = {
            stage.value: StageCount() for stage in _PROGRESS_STAGES
        }
        self.wall_time: dict[str, float] = {stage.value: 0.0 for stage in _PROGRESS_STAGES}

    def record(self, stage: Stage, elapsed: float, ok: bool) -> None:
        with self._lock:
            count = self.stages[stage.value]
            count.attempted += 1
            if ok:
                count.succeeded += 1
            else:
                count.failed += 1
            self.wall_time[stage.value] += elapsed


def _failure_code(exc: Exception) -> str:
    if isinstance(exc, _StageFailure):
        return exc.code
    if isinstance(exc, (BackendError, FetchError)):
        return exc.code
    if isinstance(exc, SummarizeError):
        return "SUMMARIZE_ERROR"
    if isinstance(exc, SearchError):
        return "SEARCH_ERROR"
    return "INTERNAL"


def _process_record(
    record: ArticleRecord,
    runtime: _Runtime,
    evidence: dict,
    reporter: _Reporter,
    retry_failed: bool,
) -> ArticleRecord:
    if record.stage is Stage.FAILED:
        if not retry_failed or record.failure is None:
            return record
        # restart from the failing stage
        failing_index = STAGE_ORDER.index(record.failure.stage)
        record.stage = STAGE_ORDER[failing_index - 1]
        record.failure = None

    start_index = completed_stage_index(record) + 1
    for stage in STAGE_ORDER[start_index:]:
        func = _STAGE_FUNCS[stage]
        begin = time.perf_counter()
        try:
            func(record, runtime, evidence)
        except _RECORD_ERRORS as exc:
            reporter.record(stage, time.perf_counter() - begin, ok=False)
            record.failure = FailureInfo(stage=stage, code=_failure_code(exc), message=str(exc))
            record.stage = Stage.FAILED
            return record
        except Exception as exc:  # unexpected, still isolate the record
            reporter.record(stage, time.perf_counter() - begin, ok=False)
            record.failure = FailureInfo(stage=stage, code="INTERNAL", message=repr(exc))
            record.stage = Stage.FAILED
            return record
        reporter.record(stage, time.perf_counter() - begin, ok=True)
        if record.stage is not Stage.ENRICHED:
            record.stage = stage
    return record


def _execute(
    corpus_path: str | Path,
    config: PipelineConfig,
    output_path: str | Path,
    retry_failed: bool,
) -> RunReport:
    records = load_corpus(corpus_path)
    runtime = _Runtime(config)

    evidence_in = evidence_path_for(corpus_path)
    evidence: dict[str, EvidenceDocument] = {}
    if evidence_in.exists():
        evidence = load_evidence(evidence_in)
    evidence_lock = threading.Lock()

    class _LockedEvidence(dict):
        def __setitem__(self, key, value):
            with evidence_lock:
                dict.__setitem__(self, key, value)

    shared_evidence = _LockedEvidence(evidence)
    reporter = _Reporter()

    if records:
        with ThreadPoolExecutor(max_workers=config.parallel_records) as pool:
            processed = list(
                pool.map(
                    lambda r: _process_record(
                        r, runtime, shared_evidence, reporter, retry_failed
                    ),
                    records,
                )
            )
    else:
        processed = []

    live_ids = {record.id for record in processed}
    referenced = {
        evidence_id
        for record in processed
        for evidence_id in (record.evidence or [])
    }
    kept = {
        doc_id: doc
        for doc_id, doc in sorted(shared_evidence.items())
        if doc.parent_article_id in live_ids and doc_id in referenced
    }

    save_corpus(processed, output_path)
    save_evidence(kept, evidence_path_for(output_path))

    report = RunReport(
        stages=reporter.stages,
        wall_time_seconds=reporter.wall_time,
        corpus_stats=compute_stats(processed),
    )
    return report


def run(
    corpus_path: str | Path, config: PipelineConfig, output_path: str | Path
) -> RunReport:
    """Process every record to ENRICHED (or FAILED) and write the corpus."""
    return _execute(corpus_path, config, output_path, retry_failed=False)


def resume(
    corpus_path: str | Path,
    config: PipelineConfig,
    output_path: str | Path,
    retry_failed: bool = False,
) -> RunReport:
    """Continue a corpus: ENRICHED records pass through untouched,
    intermediate records pick up at their next stage, FAILED records retry
    from the failing stage only when ``retry_failed`` is set."""
    return _execute(corpus_path, config, output_path, retry_failed=retry_failed)
