import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newsenrich.summarize import (
    MultiDocSummary,
    SummarizeError,
    SummaryConfig,
    centrality_scores,
    extract_summary,
    headline_extractive,
    native_engine,
    summarize_multi,
)
from newsenrich.textproc import build_index, split_sentences, tokenize

from docgen import make_document, make_fixture_docs
from oracles import centrality_oracle, headline_oracle, selection_oracle

DOC5 = (
    "Heavy rain flooded Tlabung town on Monday. "
    "The flooded river broke the old wooden bridge. "
    "Officials said the rain will continue all week. "
    "Rescue boats moved eight families across the river. "
    "District schools stayed closed as rain continued."
)

# Frozen from the dense-solve oracle (tests/oracles.py).
DOC5_SCORES = [
    0.045454545455,
    0.442260442260,
    0.184640338473,
    0.282190128357,
    0.045454545455,
]

DOC8 = (
    "Flash floods hit Lunglei district after heavy rainfall. "
    "Eight people died and six are missing in the floods. "
    "About 350 houses have been submerged since yesterday. "
    "Rescue workers used boats to reach stranded families. "
    "Heavy rainfall wrecked havoc across the district. "
    "The state government announced relief funds for victims. "
    "Roads to the district remain cut off by landslides. "
    "More rain is forecast for the coming days."
)

# Frozen from the subset-enumeration oracle.
DOC8_SUMMARY_B25 = (
    "Flash floods hit Lunglei district after heavy rainfall. "
    "Heavy rainfall wrecked havoc across the district. "
    "The state government announced relief funds for victims."
)
DOC8_SUMMARY_B40 = (
    "Flash floods hit Lunglei district after heavy rainfall. "
    "Heavy rainfall wrecked havoc across the district. "
    "The state government announced relief funds for victims. "
    "Roads to the district remain cut off by landslides. "
    "More rain is forecast for the coming days."
)


@pytest.fixture
def cfg():
    return SummaryConfig()


class TestCentralityScores:
    def test_single_sentence(self, cfg):
        index = build_index(["Only one sentence here."])
        scores = centrality_scores(index, cfg)
        assert scores.tolist() == pytest.approx([1.0], abs=1e-9)

    def test_two_identical_sentences(self, cfg):
        index = build_index(["Same words here.", "Same words here."])
        scores = centrality_scores(index, cfg)
        assert scores.tolist() == pytest.approx([0.5, 0.5], abs=1e-6)

    def test_five_sentence_fixture_matches_frozen_oracle_values(self, cfg):
        index = build_index(split_sentences(DOC5))
        scores = centrality_scores(index, cfg)
        assert scores.tolist() == pytest.approx(DOC5_SCORES, abs=1e-6)

    def test_matches_dense_solve_oracle_live(self, cfg):
        index = build_index(split_sentences(DOC8))
        scores = centrality_scores(index, cfg)
        expected = centrality_oracle(index, cfg)
        assert np.abs(scores - expected).max() < 1e-6

    def test_empty_index_errors(self, cfg):
        with pytest.raises(SummarizeError):
            centrality_scores(build_index([]), cfg)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=10**6))
    def test_sum_one_and_lower_bound(self, seed):
        cfg = SummaryConfig()
        doc = make_document(random.Random(seed), 1 + seed % 8)
        index = build_index(split_sentences(doc))
        scores = centrality_scores(index, cfg)
        n = len(index)
        assert abs(scores.sum() - 1.0) < 1e-9
        assert (scores >= (1.0 - cfg.damping) / n - 1e-9).all()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=10**6))
    def test_permutation_covariance(self, seed):
        cfg = SummaryConfig()
        rng = random.Random(seed)
        sentences = split_sentences(make_document(rng, 6))
        perm = list(range(len(sentences)))
        rng.shuffle(perm)
        base = centrality_scores(build_index(sentences), cfg)
        permuted = centrality_scores(build_index([sentences[i] for i in perm]), cfg)
        assert np.abs(permuted - base[perm]).max() < 1e-8

    def test_deterministic(self, cfg):
        index = build_index(split_sentences(DOC8))
        a = centrality_scores(index, cfg)
        b = centrality_scores(index, cfg)
        assert (a == b).all()


class TestExtractSummary:
    def test_single_sentence_any_budget(self, cfg):
        text = "A single sentence stands alone."
        assert extract_summary(text, 1, cfg) == text
        assert extract_summary(text, 100, cfg) == text

    def test_disjoint_sentences_budget_saturation(self, cfg):
        text = "Alpha beta gamma. Delta epsilon zeta. Eta theta iota."
        total = len(tokenize(text))
        assert extract_summary(text, total, cfg) == text

    def test_eight_sentence_fixture_budget_25(self, cfg):
        assert extract_summary(DOC8, 25, cfg) == DOC8_SUMMARY_B25

    def test_eight_sentence_fixture_budget_40(self, cfg):
        assert extract_summary(DOC8, 40, cfg) == DOC8_SUMMARY_B40

    def test_matches_subset_oracle_live(self, cfg):
        for budget in (12, 25, 33, 60):
            assert extract_summary(DOC8, budget, cfg) == selection_oracle(DOC8, budget, cfg)

    def test_empty_text_errors(self, cfg):
        with pytest.raises(SummarizeError):
            extract_summary("", 10, cfg)
        with pytest.raises(SummarizeError):
            extract_summary("   \n ", 10, cfg)

    def test_bad_budget_errors(self, cfg):
        with pytest.raises(SummarizeError):
            extract_summary("Some text.", 0, cfg)

    @settings(max_examples=80, deadline=None)
    @given(
        st.integers(min_value=0, max_value=10**6),
        st.integers(min_value=1, max_value=60),
    )
    def test_extractive_in_source_order(self, seed, budget):
        cfg = SummaryConfig()
        doc = make_document(random.Random(seed), 1 + seed % 8)
        source_sentences = split_sentences(doc)
        summary = extract_summary(doc, budget, cfg)
        out_sentences = split_sentences(summary)
        positions = [source_sentences.index(s) for s in out_sentences]
        assert positions == sorted(positions)
        for sentence in out_sentences:
            assert sentence in doc

    @settings(max_examples=80, deadline=None)
    @given(
        st.integers(min_value=0, max_value=10**6),
        st.integers(min_value=1, max_value=60),
    )
    def test_budget_respected_unless_lone_top_sentence(self, seed, budget):
        cfg = SummaryConfig()
        doc = make_document(random.Random(seed), 1 + seed % 8)
        summary = extract_summary(doc, budget, cfg)
        if len(tokenize(summary)) > budget:
            assert len(split_sentences(summary)) == 1

    def test_top_sentence_kept_even_over_budget(self, cfg):
        text = "Seven words walk into this long sentence."
        assert extract_summary(text, 2, cfg) == text

    def test_deterministic(self, cfg):
        assert extract_summary(DOC8, 30, cfg) == extract_summary(DOC8, 30, cfg)


class TestSummarizeMulti:
    def test_single_single_sentence_doc(self, cfg):
        doc = "One sentence only."
        result = summarize_multi([doc], cfg, native_engine(cfg))
        assert result == MultiDocSummary(per_doc_summaries=[doc], fused_summary=doc)

    def test_identical_docs_redundancy_filtered(self, cfg):
        doc = (
            "Flood waters rose in the valley. "
            "Rescue crews moved families to camps. "
            "Roads stayed closed overnight."
        )
        result = summarize_multi([doc, doc], cfg, native_engine(cfg))
        fused_sentences = split_sentences(result.fused_summary)
        assert len(fused_sentences) == len(set(fused_sentences))

    def test_three_docs_equals_two_stage_composition(self):
        cfg = SummaryConfig(uni_budget_tokens=20, fused_budget_tokens=24)
        docs = make_fixture_docs(3, max_sentences=6, seed=7)
        engine = native_engine(cfg)
        result = summarize_multi(docs, cfg, engine)
        stage1 = [engine(d, cfg.uni_budget_tokens) for d in docs]
        assert result.per_doc_summaries == stage1
        assert result.fused_summary == engine(" ".join(stage1), cfg.fused_budget_tokens)
        # stage-1 summaries agree with the subset-enumeration oracle
        for doc, got in zip(docs, stage1):
            assert got == selection_oracle(doc, cfg.uni_budget_tokens, cfg)

    def test_empty_docs_list_errors(self, cfg):
        with pytest.raises(SummarizeError):
            summarize_multi([], cfg, native_engine(cfg))

    def test_failure_names_document_index(self, cfg):
        with pytest.raises(SummarizeError) as err:
            summarize_multi(["Fine text here.", "   "], cfg, native_engine(cfg))
        assert "1" in str(err.value)


class TestHeadlineExtractive:
    def test_single_sentence_strips_punctuation(self, cfg):
        assert (
            headline_extractive("Floods hit Lunglei district.", 12, cfg)
            == "Floods hit Lunglei district"
        )

    def test_truncation(self, cfg):
        assert headline_extractive("Floods hit Lunglei district.", 2, cfg) == "Floods hit"

    def test_five_sentence_fixture_frozen(self, cfg):
        assert headline_extractive(DOC5, 6, cfg) == "The flooded river broke the old"
        assert (
            headline_extractive(DOC5, 12, cfg)
            == "The flooded river broke the old wooden bridge"
        )

    def test_matches_oracle_live(self, cfg):
        assert headline_extractive(DOC8, 8, cfg) == headline_oracle(DOC8, 8, cfg)

    def test_empty_errors(self, cfg):
        with pytest.raises(SummarizeError):
            headline_extractive("", 5, cfg)

    def test_token_limit_respected(self, cfg):
        headline = headline_extractive(DOC5, 3, cfg)
        assert len(tokenize(headline)) <= 3
        assert "\n" not in headline


class TestConfigValidation:
    def test_bad_damping(self):
        with pytest.raises(SummarizeError):
            SummaryConfig(damping=1.0)

    def test_bad_threshold(self):
        with pytest.raises(SummarizeError):
            SummaryConfig(similarity_threshold=1.5)

    def test_bad_budget(self):
        with pytest.raises(SummarizeError):
            SummaryConfig(uni_budget_tokens=0)
