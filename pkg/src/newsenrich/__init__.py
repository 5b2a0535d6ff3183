"""newsenrich: enrich low-resource-language news articles.

The pipeline translates an article into a pivot language, generates a
search headline, retrieves and cleans related web documents, produces a
two-stage multi-document summary, appends it to the article and
back-translates the result. A small HTTP service captures 4-category
human-evaluation scores and aggregates them.

Typical entry points:

- :func:`newsenrich.pipeline.run` / :func:`newsenrich.pipeline.resume`
- :func:`newsenrich.summarize.extract_summary` and
  :func:`newsenrich.summarize.summarize_multi`
- :func:`newsenrich.corpus.load_corpus` / :func:`newsenrich.corpus.save_corpus`
- :func:`newsenrich.evalsvc.create_batch` / :func:`newsenrich.evalsvc.aggregate`
- the ``newsenrich`` CLI (see ``newsenrich --help``)
"""

from .corpus import (
    ArticleRecord,
    CandidateUrl,
    CorpusStats,
    EvidenceDocument,
    Stage,
    Verdict,
    compute_stats,
    load_corpus,
    save_corpus,
)
from .summarize import SummaryConfig, extract_summary, headline_extractive, summarize_multi
from .textproc import build_index, clean_text, cosine, split_sentences, tokenize

__version__ = "0.1.0"

__all__ = [
    "ArticleRecord",
    "CandidateUrl",
    "CorpusStats",
    "EvidenceDocument",
    "Stage",
    "Verdict",
    "SummaryConfig",
    "compute_stats",
    "load_corpus",
    "save_corpus",
    "extract_summary",
    "headline_extractive",
    "summarize_multi",
    "build_index",
    "clean_text",
    "cosine",
    "split_sentences",
    "tokenize",
    "__version__",
]
