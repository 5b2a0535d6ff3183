"""Deterministic extractive summarization and two-stage multi-document fusion.

Sentences are ranked by the stationary distribution of a damped random walk
over their cosine-similarity graph. Selection is greedy by score with a
redundancy filter, stopping at the first sentence that would overflow the
token budget. The multi-document path summarizes each document, then
summarizes the concatenation of those summaries; the per-document engine is
a parameter, so the same orchestration drives the built-in extractive
summarizer or a remote abstractive backend.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .textproc import SentenceIndex, build_index, cosine, split_sentences, word_spans

__all__ = [
    "SummaryConfig",
    "MultiDocSummary",
    "SummarizeError",
    "centrality_scores",
    "extract_summary",
    "summarize_multi",
    "headline_extractive",
]

Engine = Callable[[str, int], str]


class SummarizeError(Exception):
    """Summarization cannot proceed (empty input, bad config, engine failure)."""


@dataclass
class SummaryConfig:
    similarity_threshold: float = 0.1
    damping: float = 0.85
    max_iterations: int = 100
    convergence_eps: float = 1e-6
    uni_budget_tokens: int = 120
    fused_budget_tokens: int = 160
    redundancy_max_cosine: float = 0.7

    def __post_init__(self) -> None:
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise SummarizeError("similarity_threshold must be in [0, 1]")
        if not 0.0 < self.damping < 1.0:
            raise SummarizeError("damping must be in (0, 1)")
        if self.max_iterations < 1:
            raise SummarizeError("max_iterations must be positive")
        if self.convergence_eps <= 0.0:
            raise SummarizeError("convergence_eps must be positive")
        if self.uni_budget_tokens < 1 or self.fused_budget_tokens < 1:
            raise SummarizeError("token budgets must be positive")
        if not 0.0 <= self.redundancy_max_cosine <= 1.0:
            raise SummarizeError("redundancy_max_cosine must be in [0, 1]")


def similarity_matrix(index: SentenceIndex, threshold: float) -> np.ndarray:
    """Thresholded cosine adjacency with a zero diagonal."""
    n = len(index)
    matrix = np.zeros((n, n), dtype=float)
    for i in range(n):
        for j in range(i + 1, n):
            sim = cosine(index.vectors[i], index.vectors[j])
            if sim >= threshold:
                matrix[i, j] = sim
                matrix[j, i] = sim
    return matrix


def transition_matrix(adjacency: np.ndarray) -> np.ndarray:
    """Row-normalize; rows without neighbors become uniform rows."""
    n = adjacency.shape[0]
    rows = adjacency.sum(axis=1)
    matrix = np.empty_like(adjacency)
    for i in range(n):
        if rows[i] == 0.0:
            matrix[i, :] = 1.0 / n
        else:
            matrix[i, :] = adjacency[i, :] / rows[i]
    return matrix


def centrality_scores(index: SentenceIndex, cfg: SummaryConfig) -> np.ndarray:
    """Stationary scores of the damped walk over the sentence graph.

    Power-iterates ``p <- d·Mᵀp + (1−d)/n`` from the uniform vector until
    the L1 change drops below ``convergence_eps`` or ``max_iterations`` is
    reached. Scores are non-negative and sum to 1.
    """
    n = len(index)
    if n == 0:
        raise SummarizeError("cannot score an empty sentence index")
    adjacency = similarity_matrix(index, cfg.similarity_threshold)
    transition = transition_matrix(adjacency)
    teleport = (1.0 - cfg.damping) / n
    p = np.full(n, 1.0 / n)
    for _ in range(cfg.max_iterations):
        p_next = cfg.damping * (transition.T @ p) + teleport
        delta = np.abs(p_next - p).sum()
        p = p_next
        if delta < cfg.convergence_eps:
            break
    return p


def _ranked(scores: np.ndarray) -> list[int]:
    return sorted(range(len(scores)), key=lambda i: (-scores[i], i))


def extract_summary(text: str, budget_tokens: int, cfg: SummaryConfig) -> str:
    """Greedy centrality-ranked extract of *text* within a token budget.

    Candidates are visited in descending score (earlier position wins
    ties). A candidate too similar to an already-selected sentence
    (cosine > redundancy_max_cosine) is skipped; the first remaining
    candidate that would overflow the budget stops selection. The top
    sentence is always taken, even alone over budget. Output keeps the
    original sentence order.
    """
    if budget_tokens < 1:
        raise SummarizeError("budget_tokens must be >= 1")
    if not text or not text.strip():
        raise SummarizeError("cannot summarize empty text")
    sentences = split_sentences(text)
    if not sentences:
        raise SummarizeError("no sentences found")
    index = build_index(sentences)
    scores = centrality_scores(index, cfg)

    selected: list[int] = []
    used = 0
    for i in _ranked(scores):
        if selected and any(
            cosine(index.vectors[i], index.vectors[j]) > cfg.redundancy_max_cosine
            for j in selected
        ):
            continue
        size = len(index.tokens[i])
        if not selected:
            selected.append(i)
            used = size
            if used >= budget_tokens:
                break
        else:
            if used + size > budget_tokens:
                break
            selected.append(i)
            used += size
    selected.sort()
    return " ".join(index.sentences[i] for i in selected)


@dataclass
class MultiDocSummary:
    per_doc_summaries: list[str]
    fused_summary: str


def summarize_multi(docs: list[str], cfg: SummaryConfig, engine: Engine) -> MultiDocSummary:
    """Two-stage multi-document summary.

    Stage 1 summarizes each document with ``engine`` under the
    per-document budget; stage 2 feeds the concatenated stage-1 summaries
    back through ``engine`` under the fused budget. Any per-document
    failure aborts the whole operation, naming the document index.
    """
    if not docs:
        raise SummarizeError("docs must be non-empty")
    per_doc: list[str] = []
    for idx, doc in enumerate(docs):
        if not doc or not doc.strip():
            raise SummarizeError(f"document {idx} is empty")
        try:
            per_doc.append(engine(doc, cfg.uni_budget_tokens))
        except SummarizeError:
            raise
        except Exception as exc:
            raise SummarizeError(f"document {idx}: {exc}") from exc
    fused = engine(" ".join(per_doc), cfg.fused_budget_tokens)
    return MultiDocSummary(per_doc_summaries=per_doc, fused_summary=fused)


def native_engine(cfg: SummaryConfig) -> Engine:
    """The built-in extractive summarizer as a (text, budget) engine."""

    def engine(text: str, budget_tokens: int) -> str:
        return extract_summary(text, budget_tokens, cfg)

    return engine


def headline_extractive(text: str, max_tokens: int, cfg: SummaryConfig) -> str:
    """First ``max_tokens`` words of the top-centrality sentence.

    Word tokens keep their original casing; trailing punctuation falls away
    with tokenization.
    """
    if max_tokens < 1:
        raise SummarizeError("max_tokens must be >= 1")
    if not text or not text.strip():
        raise SummarizeError("cannot build a headline from empty text")
    sentences = split_sentences(text)
    if not sentences:
        raise SummarizeError("no sentences found")
    index = build_index(sentences)
    scores = centrality_scores(index, cfg)
    best = _ranked(scores)[0]
    words = word_spans(index.sentences[best])
    if not words:
        raise SummarizeError("top sentence has no word tokens")
    return " ".join(words[:max_tokens])
