"""Acceptance suite: one test per criterion, each timed where the
criterion sets a budget. A summary table prints at the end of the run."""

import hashlib
import json
import random
import subprocess
import sys
import time

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from newsenrich.corpus import (
    ArticleRecord,
    CandidateUrl,
    Stage,
    Verdict,
    completed_stage_index,
    compute_stats,
    record_problems,
    save_corpus,
)
from newsenrich.evalsvc import EvaluationScore, aggregate
from newsenrich.pipeline import resume, run
from newsenrich.summarize import SummaryConfig, centrality_scores, extract_summary
from newsenrich.textproc import build_index, clean_text, cosine, split_sentences, tokenize
from newsenrich.webretrieval import (
    FetchPolicy,
    UrlFilterPolicy,
    classify_url,
    fetch,
    host_in_denylist,
)

from acceptance_report import criterion
from docgen import make_document, make_fixture_docs
from oracles import centrality_oracle, selection_oracle
from pipefix import PipelineHarness
from webfix import article_paragraphs, news_page

CLI = [sys.executable, "-m", "newsenrich"]


# --- Criterion 1: corpus URL statistics --------------------------------------


def full_scale_corpus():
    """767 valid-URL-bearing records holding 4054 URLs, plus 30 searched
    records without URLs and 16 unsearched ones."""
    records = []
    for i in range(767):
        n_urls = 6 if i < 219 else 5  # 219*6 + 548*5 = 4054
        urls = [
            CandidateUrl(f"https://site{i:03d}.example/story/{j}", j + 1, Verdict.VALID)
            for j in range(n_urls)
        ]
        records.append(
            ArticleRecord(
                id=f"doc-{i:04d}", source_lang="lus", target_pivot_lang="en",
                source_text="Thu.", cleaned_text="Thu.", pivot_text="Story.",
                headline=f"headline {i}", urls=urls, stage=Stage.SEARCHED,
            )
        )
    for i in range(30):
        records.append(
            ArticleRecord(
                id=f"nourl-{i:02d}", source_lang="lus", target_pivot_lang="en",
                source_text="Thu.", cleaned_text="Thu.", pivot_text="Story.",
                headline=f"quiet headline {i}", urls=[], stage=Stage.SEARCHED,
            )
        )
    for i in range(16):
        records.append(
            ArticleRecord(
                id=f"raw-{i:02d}", source_lang="lus", target_pivot_lang="en",
                source_text="Thu.", stage=Stage.RAW,
            )
        )
    return records


def test_corpus_url_statistics(tmp_path):
    with criterion("Corpus URL statistics: avg_urls_per_document = 5.29, < 1 s"):
        records = full_scale_corpus()
        start = time.perf_counter()
        stats = compute_stats(records)
        elapsed = time.perf_counter() - start
        assert stats.total_urls == 4054
        assert stats.documents_with_valid_urls_ge1 == 767
        assert stats.documents_without_urls == 30
        assert stats.avg_urls_per_document == 5.29
        assert elapsed < 1.0

        corpus_path = tmp_path / "fullscale.jsonl"
        save_corpus(records, corpus_path)
        result = subprocess.run(
            CLI + ["stats", "--corpus", str(corpus_path), "--json"],
            capture_output=True, text=True, timeout=60,
        )
        assert result.returncode == 0, result.stderr
        payload = json.loads(result.stdout)
        assert payload["avg_urls_per_document"] == 5.29


# --- Criterion 2: rubric score aggregation -----------------------------------


def reference_score_fixture():
    scores = []
    for i in range(50):
        scores.append(
            EvaluationScore(
                record_id=f"rec-{i:03d}",
                annotator_id="mizo-annotator",
                coherency=4 if i < 41 else 3,       # 41*4 + 9*3 = 191
                enrichment=3 if i < 22 else 2,      # 22*3 + 28*2 = 122
                relevancy=3 if i < 45 else 2,       # 45*3 + 5*2  = 145
                readability=4 if i < 49 else 3,     # 49*4 + 1*3  = 199
                submitted_at=f"2026-08-09T00:00:{i % 60:02d}Z",
            )
        )
    return scores


def test_rubric_aggregation(tmp_path):
    with criterion("Rubric aggregation: means 3.82 / 2.44 / 2.90 / 3.98, < 1 s"):
        scores = reference_score_fixture()
        assert sum(s.coherency for s in scores) == 191
        assert sum(s.enrichment for s in scores) == 122
        assert sum(s.relevancy for s in scores) == 145
        assert sum(s.readability for s in scores) == 199

        start = time.perf_counter()
        report = aggregate(scores)
        elapsed = time.perf_counter() - start
        assert report.means == {
            "coherency": 3.82, "enrichment": 2.44, "relevancy": 2.90, "readability": 3.98,
        }
        assert elapsed < 1.0

        # the same numbers through the CLI surface
        from newsenrich.corpus import save_corpus as _save

        records = []
        for i in range(50):
            records.append(
                ArticleRecord(
                    id=f"rec-{i:03d}", source_lang="lus", target_pivot_lang="en",
                    source_text=f"Thu {i}.", cleaned_text=f"Thu {i}.",
                    pivot_text=f"Story {i}.", headline=f"Story {i}", urls=[],
                    evidence=[], per_doc_summaries=["S."], fused_summary="S.",
                    enriched_pivot_text=f"Story {i}.\n\nS.",
                    enriched_source_text=f"Thu {i}.\n\nS.", stage=Stage.ENRICHED,
                )
            )
        corpus_path = tmp_path / "enriched.jsonl"
        _save(records, corpus_path)
        scores_file = tmp_path / "scores.jsonl"
        batch_result = subprocess.run(
            CLI + ["eval-batch", "--corpus", str(corpus_path), "--seed", "50",
                   "--sample-size", "50", "--scores-file", str(scores_file), "--json"],
            capture_output=True, text=True, timeout=60,
        )
        assert batch_result.returncode == 0, batch_result.stderr
        batch = json.loads(batch_result.stdout)
        assert len(batch["record_ids"]) == 50
        with scores_file.open("w", encoding="utf-8") as fh:
            for score, record_id in zip(scores, batch["record_ids"]):
                payload = score.to_dict()
                payload["record_id"] = record_id
                fh.write(json.dumps(payload) + "\n")
        report_result = subprocess.run(
            CLI + ["eval-report", "--batch-id", batch["batch_id"],
                   "--scores-file", str(scores_file), "--json"],
            capture_output=True, text=True, timeout=60,
        )
        assert report_result.returncode == 0, report_result.stderr
        cli_report = json.loads(report_result.stdout)
        assert cli_report["coherency"] == 3.82
        assert cli_report["enrichment"] == 2.44
        assert cli_report["relevancy"] == 2.90
        assert cli_report["readability"] == 3.98
        assert cli_report["score_count"] == 50


# --- Criterion 3: summarizer oracle equivalence ------------------------------


def test_summarizer_oracle_equivalence():
    with criterion(
        "Summarizer oracle equivalence: 48 fixtures <= 8 sentences, exact "
        "selection match + centrality within 1e-6, < 10 s"
    ):
        cfg = SummaryConfig(convergence_eps=1e-9)
        docs = make_fixture_docs(48, max_sentences=8, seed=20260809)
        assert len(docs) >= 40
        start = time.perf_counter()
        for doc in docs:
            sentences = split_sentences(doc)
            assert 1 <= len(sentences) <= 8
            index = build_index(sentences)
            scores = centrality_scores(index, cfg)
            expected_scores = centrality_oracle(index, cfg)
            assert np.abs(scores - expected_scores).max() < 1e-6

            total = len(tokenize(doc))
            for budget in (max(6, total // 2), total + 10):
                assert extract_summary(doc, budget, cfg) == selection_oracle(
                    doc, budget, cfg
                )
        elapsed = time.perf_counter() - start
        assert elapsed < 10.0


# --- Criterion 4: end-to-end identity round-trip -----------------------------


def test_end_to_end_identity_round_trip(tmp_path, session_http_server):
    with criterion(
        "End-to-end identity round-trip: 10 records all ENRICHED, "
        "enriched = cleaned + sep + summary byte-exact, < 30 s"
    ):
        harness = PipelineHarness(tmp_path, session_http_server, seed=99)
        mizo = (
            "Chhungkaw pariat an chenna in aṭanga chhuahtir an ni. "
            "Ruahsur nasa avangin tuilian a lo len. "
            "Sorkar chuan relief fund a puang."
        )
        harness.add_record(source_text=mizo)
        for _ in range(9):
            harness.add_record()
        corpus_path, config = harness.build()
        out = tmp_path / "out.jsonl"

        start = time.perf_counter()
        report = run(corpus_path, config, out)
        elapsed = time.perf_counter() - start
        assert elapsed < 30.0

        from newsenrich.corpus import load_corpus

        records = load_corpus(out)
        assert len(records) == 10
        for record in records:
            assert record.stage is Stage.ENRICHED
            assert record.pivot_text == record.cleaned_text
            assert record.enriched_source_text == (
                record.cleaned_text + "\n\n" + record.fused_summary
            )
        assert not report.any_failures
        assert "aṭanga" in records[0].enriched_source_text


# --- Criterion 5: URL filtering ----------------------------------------------


def test_url_filtering(session_http_server):
    with criterion(
        "URL filtering: denylisted never VALID over 100 URLs; fixture news "
        "pages VALID; sub-80-word page NON_ARTICLE"
    ):
        policy = UrlFilterPolicy()
        rng = random.Random(1312)
        hosts = [
            "wikipedia.org", "en.wikipedia.org", "simple.wikipedia.org",
            "youtube.com", "www.youtube.com", "m.youtube.com",
            "news.example", "dailyhill.example", "mizonews.example",
            "southern.example",
        ]
        verdicts = []
        for i in range(100):
            host = rng.choice(hosts)
            url = f"https://{host}/story/{i}"
            verdicts.append((host, classify_url(url, policy)))
        assert sum(1 for _, v in verdicts if v is Verdict.VALID) == 0
        for host, verdict in verdicts:
            if host_in_denylist(host, policy.denylist_hosts):
                assert verdict is Verdict.DENYLISTED

        # a denylisted URL stays DENYLISTED even with a perfect article page
        good_html = news_page("Fine article", article_paragraphs(["fine"], 10))
        fetch_policy = FetchPolicy(timeout_seconds=5.0, per_host_min_interval_ms=0)
        page_url = session_http_server.add_page("/acceptance/fine", good_html)
        page = fetch(page_url, fetch_policy)
        assert (
            classify_url("https://en.wikipedia.org/wiki/X", policy, page)
            is Verdict.DENYLISTED
        )

        # fixture news pages classify VALID
        for i in range(3):
            html = news_page(
                f"Valid article {i}", article_paragraphs([f"word{i}", "rain"], 10)
            )
            url = session_http_server.add_page(f"/acceptance/valid{i}", html)
            assert classify_url(url, policy, fetch(url, fetch_policy)) is Verdict.VALID

        # sub-80-word page classifies NON_ARTICLE
        short_html = (
            "<html><body><p>Fewer than eighty words live here. "
            "This page is a stub. It cannot count as evidence.</p></body></html>"
        )
        url = session_http_server.add_page("/acceptance/short", short_html)
        assert classify_url(url, policy, fetch(url, fetch_policy)) is Verdict.NON_ARTICLE


# --- Criterion 6: idempotent resume ------------------------------------------


def test_idempotent_resume(tmp_path, session_http_server):
    with criterion("Idempotent resume: run -> resume byte-identical (hash equality)"):
        harness = PipelineHarness(tmp_path, session_http_server, seed=123)
        for _ in range(4):
            harness.add_record()
        harness.add_record(searchable=False)  # a FAILED record must also round-trip
        corpus_path, config = harness.build()
        out1 = tmp_path / "out1.jsonl"
        out2 = tmp_path / "out2.jsonl"
        run(corpus_path, config, out1)
        resume(out1, config, out2)
        h1 = hashlib.sha256(out1.read_bytes()).hexdigest()
        h2 = hashlib.sha256(out2.read_bytes()).hexdigest()
        assert h1 == h2


# --- Criterion 7: property suites --------------------------------------------


@settings(max_examples=250, deadline=None)
@given(st.text(max_size=160))
def test_property_clean_text_idempotent(text):
    once = clean_text(text)
    assert clean_text(once) == once


_vectors = st.dictionaries(
    st.text(alphabet="abcdefg", min_size=1, max_size=3),
    st.floats(min_value=0.0, max_value=50.0, allow_nan=False),
    max_size=6,
)


@settings(max_examples=250, deadline=None)
@given(_vectors, _vectors)
def test_property_cosine_symmetric_bounded(a, b):
    ab = cosine(a, b)
    assert ab == cosine(b, a)
    assert 0.0 <= ab <= 1.0


@settings(max_examples=250, deadline=None)
@given(st.integers(min_value=0, max_value=10**6), st.integers(min_value=1, max_value=50))
def test_property_extractive_budget_order(seed, budget):
    cfg = SummaryConfig()
    doc = make_document(random.Random(seed), 1 + seed % 8)
    summary = extract_summary(doc, budget, cfg)
    source_sentences = split_sentences(doc)
    out_sentences = split_sentences(summary)
    positions = [source_sentences.index(s) for s in out_sentences]
    assert positions == sorted(positions)  # original order
    for sentence in out_sentences:
        assert sentence in doc  # extractiveness
    if len(tokenize(summary)) > budget:
        assert len(out_sentences) == 1  # only the lone top sentence may overflow


_stage_fields = [
    (),
    ("cleaned_text",),
    ("pivot_text",),
    ("headline",),
    ("urls",),
    ("evidence",),
    ("per_doc_summaries", "fused_summary"),
    ("enriched_pivot_text", "enriched_source_text"),
]


@settings(max_examples=250, deadline=None)
@given(st.integers(min_value=0, max_value=7), st.integers(min_value=0, max_value=7))
def test_property_stage_monotonicity(a, b):
    from newsenrich.corpus import STAGE_ORDER

    lo, hi = min(a, b), max(a, b)
    fields = {}
    for idx in range(hi + 1):
        for name in _stage_fields[idx]:
            fields[name] = [] if name in ("urls", "evidence", "per_doc_summaries") else "x"
    rec_lo = ArticleRecord(
        id="r", source_lang="l", target_pivot_lang="e", source_text="t",
        stage=STAGE_ORDER[lo], **{
            k: v for k, v in fields.items()
            if k in {n for i in range(lo + 1) for n in _stage_fields[i]}
        },
    )
    rec_hi = ArticleRecord(
        id="r", source_lang="l", target_pivot_lang="e", source_text="t",
        stage=STAGE_ORDER[hi], **fields,
    )
    assert record_problems(rec_lo) == []
    assert record_problems(rec_hi) == []
    assert completed_stage_index(rec_hi) >= completed_stage_index(rec_lo)


@settings(max_examples=250, deadline=None)
@given(
    st.lists(
        st.tuples(st.integers(0, 4), st.integers(0, 4), st.integers(0, 4), st.integers(0, 4)),
        min_size=1,
        max_size=25,
    ),
    st.randoms(use_true_random=False),
)
def test_property_aggregate_permutation_invariant(rows, rng):
    scores = [
        EvaluationScore(
            record_id=f"r{i}", annotator_id="a", coherency=c, enrichment=e,
            relevancy=r, readability=d, submitted_at="t",
        )
        for i, (c, e, r, d) in enumerate(rows)
    ]
    base = aggregate(scores).means
    shuffled = list(scores)
    rng.shuffle(shuffled)
    assert aggregate(shuffled).means == base


def test_property_failure_isolation(tmp_path, session_http_server):
    with criterion(
        "Property suites: failure isolation over 200 randomized cases "
        "(plus hypothesis suites for cleaning/cosine/extraction/stages/aggregation)"
    ):
        rng = random.Random(424242)
        page_cache: dict[str, str] = {}
        for case in range(200):
            case_dir = tmp_path / f"case{case:03d}"
            case_dir.mkdir()
            seed = rng.randrange(10**6)
            saboteur_position = rng.randrange(3)

            sources = [make_document(random.Random(seed + k), 2) for k in range(3)]

            def build_world(with_saboteur: bool):
                sub = case_dir / ("with" if with_saboteur else "without")
                sub.mkdir()
                harness = PipelineHarness(sub, session_http_server, seed=seed)
                for k, source in enumerate(sources):
                    if not with_saboteur and k == saboteur_position:
                        continue
                    is_saboteur = with_saboteur and k == saboteur_position
                    record_id = f"c{case}k{k}"
                    path = f"/iso/{seed}/{k}"
                    if path not in page_cache:
                        html = news_page(
                            f"Case page {seed} {k}",
                            article_paragraphs([f"s{seed}k{k}", "relief"], 4),
                        )
                        session_http_server.add_page(path, html)
                        page_cache[path] = html
                    harness.records.append(
                        ArticleRecord(
                            id=record_id, source_lang="lus", target_pivot_lang="en",
                            source_text=source,
                        )
                    )
                    if not is_saboteur:
                        from pipefix import expected_headline

                        harness.search_map[expected_headline(source)] = [
                            session_http_server.url(path)
                        ]
                corpus_path, config = harness.build(
                    parallel_records=2,
                    summary={"uni_budget_tokens": 30, "fused_budget_tokens": 40},
                )
                out = sub / "out.jsonl"
                run(corpus_path, config, out)
                return {
                    json.loads(line)["id"]: line
                    for line in out.read_text(encoding="utf-8").splitlines()
                }

            with_failure = build_world(True)
            without_failure = build_world(False)
            for record_id, line in without_failure.items():
                assert with_failure[record_id] == line, f"case {case}: {record_id} diverged"
            failed_line = json.loads(
                with_failure[f"c{case}k{saboteur_position}"]
            )
            assert failed_line["stage"] == "FAILED"
            assert failed_line["failure"]["stage"] == "SEARCHED"
