"""Deterministic text primitives shared across the enrichment pipeline.

Cleaning, sentence segmentation, tokenization and TF-IDF sentence vectors.
Everything here is pure and language-neutral: tokenization keeps Unicode
letters/digits and internal apostrophes, so Roman-script languages with
diacritics (e.g. Mizo "aṭanga") pass through unharmed. All returned text is
NFC-normalized.
"""

from __future__ import annotations

import html
import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

__all__ = [
    "SentenceIndex",
    "clean_text",
    "split_sentences",
    "tokenize",
    "word_spans",
    "map_words",
    "build_index",
    "cosine",
    "load_abbreviations",
    "default_abbreviations",
]

# Word = letters/digits with optional internal apostrophes; underscore is a
# separator like any other punctuation.
_WORD_RE = re.compile(r"[^\W_]+(?:['’][^\W_]+)*")

_COMMENT_RE = re.compile(r"<!--.*?-->", re.DOTALL)
_SCRIPT_STYLE_RE = re.compile(
    r"<(script|style)\b[^>]*>.*?</\1\s*>", re.DOTALL | re.IGNORECASE
)
_TAG_RE = re.compile(r"<[^>]*>")
_WS_RE = re.compile(r"\s+")

# Sentence boundary: terminal punctuation (plus any closing quotes/brackets)
# followed by whitespace; the split is confirmed only when the next character
# is an uppercase letter, a digit or an opening quote.
_BOUNDARY_RE = re.compile(r"([.!?]+[\"'”’)\]]*)(\s+)")
_OPENING_QUOTES = "\"'“‘«"
_CLOSING_TRAIL = "\"'”’)]"


def _strip_controls(text: str) -> str:
    return "".join(
        ch
        for ch in text
        if ch in "\t\n\r " or unicodedata.category(ch) not in ("Cc", "Cf")
    )


def _clean_pass(text: str) -> str:
    text = _COMMENT_RE.sub(" ", text)
    text = _SCRIPT_STYLE_RE.sub(" ", text)
    text = _TAG_RE.sub(" ", text)
    text = html.unescape(text)
    text = _strip_controls(text)
    text = _WS_RE.sub(" ", text)
    return unicodedata.normalize("NFC", text).strip()


def clean_text(raw: str) -> str:
    """Strip markup and noise from raw article text.

    Removes HTML tags and comments, decodes entities, drops control
    characters, collapses whitespace runs to single spaces, NFC-normalizes
    and trims. Applied to a fixpoint so cleaning is idempotent even on
    pathological input (e.g. double-escaped entities).
    """
    text = raw
    for _ in range(8):
        cleaned = _clean_pass(text)
        if cleaned == text:
            return cleaned
        text = cleaned
    return text


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens of *text*."""
    return [m.group(0).lower() for m in _WORD_RE.finditer(text)]


def word_spans(text: str) -> list[str]:
    """Word tokens of *text* with original casing preserved."""
    return [m.group(0) for m in _WORD_RE.finditer(text)]


def map_words(text: str, fn) -> str:
    """Rewrite each word token of *text* via *fn*, keeping separators."""
    return _WORD_RE.sub(lambda m: fn(m.group(0)), text)


def load_abbreviations(path: str | Path) -> frozenset[str]:
    """Read an abbreviation list: one entry per line, ``#`` comments."""
    entries = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.add(line)
    return frozenset(entries)


def default_abbreviations() -> frozenset[str]:
    source = resources.files("newsenrich.data").joinpath("abbreviations.txt")
    entries = set()
    for line in source.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            entries.add(line)
    return frozenset(entries)


_DEFAULT_ABBREVIATIONS: frozenset[str] | None = None


def _abbreviations() -> frozenset[str]:
    global _DEFAULT_ABBREVIATIONS
    if _DEFAULT_ABBREVIATIONS is None:
        _DEFAULT_ABBREVIATIONS = default_abbreviations()
    return _DEFAULT_ABBREVIATIONS


def split_sentences(
    text: str, abbreviations: frozenset[str] | None = None
) -> list[str]:
    """Segment cleaned text into sentences.

    Boundaries sit after ``.``, ``!`` or ``?`` (with any trailing closing
    quotes) followed by whitespace and an uppercase letter, digit or opening
    quote. The abbreviation denylist suppresses false splits after entries
    like "Mr." or "U.S.". Joining the result with single spaces reproduces
    the input's token content; no sentence is ever the empty string.
    """
    if not text or not text.strip():
        return []
    abbrevs = abbreviations if abbreviations is not None else _abbreviations()

    sentences: list[str] = []
    start = 0
    for match in _BOUNDARY_RE.finditer(text):
        if match.start() < start:
            continue
        next_pos = match.end()
        if next_pos >= len(text):
            break
        next_ch = text[next_pos]
        if not (
            next_ch.isupper() or next_ch.isdigit() or next_ch in _OPENING_QUOTES
        ):
            continue
        candidate = text[start : match.end(1)]
        tail = re.search(r"(\S+)$", candidate)
        if tail is not None and tail.group(1).rstrip(_CLOSING_TRAIL) in abbrevs:
            continue
        sentence = candidate.strip()
        if sentence:
            sentences.append(sentence)
        start = next_pos
    rest = text[start:].strip()
    if rest:
        sentences.append(rest)
    return sentences


@dataclass
class SentenceIndex:
    """Segmented, tokenized, TF-IDF-vectorized view of a sentence list.

    ``vectors[i]`` maps each in-vocabulary term of sentence *i* to
    ``tf × idf`` where tf is the raw in-sentence count and
    ``idf = ln((1+N)/(1+df)) + 1`` over the index's own N sentences.
    """

    sentences: list[str] = field(default_factory=list)
    tokens: list[list[str]] = field(default_factory=list)
    vectors: list[dict[str, float]] = field(default_factory=list)
    vocabulary: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.sentences)


def build_index(
    sentences: list[str], stopwords: frozenset[str] | None = None
) -> SentenceIndex:
    """Build a :class:`SentenceIndex` over *sentences*.

    ``stopwords`` (off by default) removes the given lowercased terms from
    the vocabulary and vectors; the per-sentence token lists keep every
    token.
    """
    tokens = [tokenize(s) for s in sentences]
    if stopwords:
        weighable = [[t for t in toks if t not in stopwords] for toks in tokens]
    else:
        weighable = tokens

    df: Counter[str] = Counter()
    for toks in weighable:
        df.update(set(toks))
    vocabulary = dict(df)

    n = len(sentences)
    idf = {t: math.log((1 + n) / (1 + d)) + 1.0 for t, d in vocabulary.items()}

    vectors: list[dict[str, float]] = []
    for toks in weighable:
        counts = Counter(toks)
        vectors.append({t: c * idf[t] for t, c in counts.items()})

    return SentenceIndex(
        sentences=list(sentences),
        tokens=tokens,
        vectors=vectors,
        vocabulary=vocabulary,
    )


def cosine(a: dict[str, float], b: dict[str, float]) -> float:
    """Cosine similarity of two sparse non-negative vectors, in [0, 1].

    Zero when either vector is empty. Terms are accumulated in sorted order
    so the result is bit-symmetric in its arguments.
    """
    if not a or not b:
        return 0.0
    common = sorted(set(a) & set(b))
    if not common:
        return 0.0
    dot = 0.0
    for term in common:
        dot += a[term] * b[term]
    if dot == 0.0:
        return 0.0
    norm_a = math.sqrt(math.fsum(v * v for v in a.values()))
    norm_b = math.sqrt(math.fsum(v * v for v in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return min(1.0, max(0.0, dot / (norm_a * norm_b)))
