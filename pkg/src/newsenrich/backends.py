"""Pluggable model-backed capabilities: translation, abstractive
summarization and headline generation.

Each capability accepts a :class:`BackendConfig` that selects either a
deterministic mock (identity / dictionary / lead-sentences) or a generic
JSON-over-HTTP remote. Mocks are bit-deterministic so pipelines built on
them are fully reproducible offline; remotes follow a minimal POST
contract with bearer-token auth and exponential-backoff retries on
transient failures (timeouts, 429, 5xx).
"""

from __future__ import annotations

import enum
import os
import time
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Any

import requests

from .summarize import SummaryConfig, headline_extractive
from .textproc import map_words, split_sentences, tokenize, word_spans

__all__ = [
    "BackendKind",
    "BackendConfig",
    "BackendError",
    "TranslationRequest",
    "TranslationResult",
    "translate",
    "abstractive_summarize",
    "generate_headline",
]

# Retry backoff: base 500 ms doubling per attempt. Patchable in tests.
_BACKOFF_BASE_SECONDS = 0.5
_sleep = time.sleep


class BackendError(Exception):
    """A backend could not produce a result."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


class BackendKind(str, enum.Enum):
    MOCK_IDENTITY = "MOCK_IDENTITY"
    MOCK_DICTIONARY = "MOCK_DICTIONARY"
    MOCK_LEAD = "MOCK_LEAD"
    REMOTE_HTTP = "REMOTE_HTTP"


@dataclass
class BackendConfig:
    kind: BackendKind
    endpoint: str | None = None
    auth_token_env: str | None = None
    timeout_seconds: float = 10.0
    max_retries: int = 2
    model_hint: str = ""
    lexicon_path: str | None = None

    def __post_init__(self) -> None:
        if isinstance(self.kind, str):
            self.kind = BackendKind(self.kind)
        if self.kind is BackendKind.REMOTE_HTTP and not self.endpoint:
            raise BackendError("CONFIG", "REMOTE_HTTP backend requires an endpoint")
        if self.max_retries < 0:
            raise BackendError("CONFIG", "max_retries must be >= 0")
        if self.kind is BackendKind.MOCK_DICTIONARY and not self.lexicon_path:
            raise BackendError("CONFIG", "MOCK_DICTIONARY backend requires lexicon_path")

    @property
    def backend_id(self) -> str:
        if self.kind is BackendKind.REMOTE_HTTP:
            return f"remote:{self.endpoint}"
        return self.kind.value.lower().replace("_", "-")

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "BackendConfig":
        return cls(
            kind=BackendKind(d["kind"]),
            endpoint=d.get("endpoint"),
            auth_token_env=d.get("auth_token_env"),
            timeout_seconds=float(d.get("timeout_seconds", 10.0)),
            max_retries=int(d.get("max_retries", 2)),
            model_hint=str(d.get("model_hint", "")),
            lexicon_path=d.get("lexicon_path"),
        )


@dataclass
class TranslationRequest:
    text: str
    source_lang: str
    target_lang: str


@dataclass
class TranslationResult:
    text: str
    backend_id: str


@lru_cache(maxsize=32)
def _load_lexicon(path: str) -> dict[str, str]:
    lexicon: dict[str, str] = {}
    p = Path(path)
    if not p.exists():
        raise BackendError("LEXICON_MISSING", f"lexicon file not found: {path}")
    for line in p.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        if "\t" not in line:
            continue
        source, target = line.split("\t", 1)
        lexicon[source.strip().lower()] = target.strip()
    return lexicon


def _apply_lexicon(text: str, lexicon: dict[str, str]) -> str:
    def swap(word: str) -> str:
        target = lexicon.get(word.lower())
        if target is None:
            return word
        if word[0].isupper():
            return target[0].upper() + target[1:]
        return target

    return map_words(text, swap)


def _auth_headers(cfg: BackendConfig) -> dict[str, str]:
    headers = {"Content-Type": "application/json"}
    if cfg.auth_token_env:
        token = os.environ.get(cfg.auth_token_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
    return headers


def _post_json(cfg: BackendConfig, payload: dict[str, Any]) -> dict[str, Any]:
    """POST with retries on transient failures (timeout/429/5xx)."""
    attempts = cfg.max_retries + 1
    last_error = "unknown"
    for attempt in range(attempts):
        try:
            response = requests.post(
                cfg.endpoint,
                json=payload,
                headers=_auth_headers(cfg),
                timeout=cfg.timeout_seconds,
            )
        except requests.RequestException as exc:
            last_error = type(exc).__name__
        else:
            if response.status_code == 200:
                try:
                    body = response.json()
                except ValueError as exc:
                    raise BackendError("REMOTE_REJECTED", f"invalid JSON response: {exc}")
                if not isinstance(body, dict) or "text" not in body:
                    raise BackendError("REMOTE_REJECTED", "response lacks 'text' field")
                return body
            if response.status_code == 429 or response.status_code >= 500:
                last_error = f"HTTP {response.status_code}"
            else:
                raise BackendError(
                    "REMOTE_REJECTED", f"HTTP {response.status_code} from {cfg.endpoint}"
                )
        if attempt < attempts - 1:
            _sleep(_BACKOFF_BASE_SECONDS * (2**attempt))
    raise BackendError(
        "REMOTE_UNAVAILABLE",
        f"{cfg.endpoint} unavailable after {attempts} attempts ({last_error})",
    )


def translate(cfg: BackendConfig, req: TranslationRequest) -> TranslationResult:
    """Translate ``req.text``; empty input yields empty output untouched."""
    if not req.source_lang or not req.target_lang:
        raise BackendError("CONFIG", "language tags must be non-empty")
    if req.text == "":
        return TranslationResult(text="", backend_id=cfg.backend_id)
    if cfg.kind is BackendKind.MOCK_IDENTITY or cfg.kind is BackendKind.MOCK_LEAD:
        return TranslationResult(text=req.text, backend_id=cfg.backend_id)
    if cfg.kind is BackendKind.MOCK_DICTIONARY:
        lexicon = _load_lexicon(cfg.lexicon_path)
        return TranslationResult(text=_apply_lexicon(req.text, lexicon), backend_id=cfg.backend_id)
    body = _post_json(
        cfg,
        {
            "text": req.text,
            "source_lang": req.source_lang,
            "target_lang": req.target_lang,
            "model_hint": cfg.model_hint,
        },
    )
    return TranslationResult(text=str(body["text"]), backend_id=cfg.backend_id)


def _lead_sentences(text: str, budget_tokens: int) -> str:
    """First sentences of *text* whose total token count fits the budget.

    Falls back to the first ``budget_tokens`` words when even the first
    sentence is over budget, so the result never exceeds it.
    """
    sentences = split_sentences(text)
    if not sentences:
        return ""
    taken: list[str] = []
    used = 0
    for sentence in sentences:
        size = len(tokenize(sentence))
        if used + size > budget_tokens:
            break
        taken.append(sentence)
        used += size
    if not taken:
        return " ".join(word_spans(sentences[0])[:budget_tokens])
    return " ".join(taken)


def abstractive_summarize(cfg: BackendConfig, text: str, budget_tokens: int) -> str:
    """Summarize *text* within a token budget.

    MOCK backends return the lead sentences; REMOTE_HTTP delegates and the
    response is truncated at a sentence boundary to respect the budget.
    """
    if budget_tokens < 1:
        raise BackendError("CONFIG", "budget_tokens must be >= 1")
    if not text.strip():
        return ""
    if cfg.kind is BackendKind.REMOTE_HTTP:
        body = _post_json(
            cfg,
            {"text": text, "budget_tokens": budget_tokens, "model_hint": cfg.model_hint},
        )
        return _lead_sentences(str(body["text"]), budget_tokens)
    return _lead_sentences(text, budget_tokens)


def generate_headline(cfg: BackendConfig, text: str, max_tokens: int) -> str:
    """Single-line headline of at most ``max_tokens`` tokens."""
    if max_tokens < 1:
        raise BackendError("CONFIG", "max_tokens must be >= 1")
    if not text.strip():
        raise BackendError("EMPTY_INPUT", "cannot build a headline from empty text")
    if cfg.kind is BackendKind.REMOTE_HTTP:
        body = _post_json(
            cfg, {"text": text, "max_tokens": max_tokens, "model_hint": cfg.model_hint}
        )
        words = word_spans(str(body["text"]))
        if not words:
            raise BackendError("REMOTE_REJECTED", "remote headline has no word tokens")
        return " ".join(words[:max_tokens])
    return headline_extractive(text, max_tokens, SummaryConfig())
