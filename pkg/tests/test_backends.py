import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import newsenrich.backends as backends
from newsenrich.backends import (
    BackendConfig,
    BackendError,
    BackendKind,
    TranslationRequest,
    abstractive_summarize,
    generate_headline,
    translate,
)
from newsenrich.summarize import SummaryConfig, headline_extractive
from newsenrich.textproc import tokenize

from oracles import headline_oracle


@pytest.fixture
def identity():
    return BackendConfig(kind=BackendKind.MOCK_IDENTITY)


@pytest.fixture
def lexicon_cfg(tmp_path):
    path = tmp_path / "lexicon.tsv"
    path.write_text(
        "chhungkaw\tfamilies\nruahsur\train\nnasa\theavy\n", encoding="utf-8"
    )
    return BackendConfig(kind=BackendKind.MOCK_DICTIONARY, lexicon_path=str(path))


@pytest.fixture
def no_sleep(monkeypatch):
    sleeps = []
    monkeypatch.setattr(backends, "_sleep", sleeps.append)
    return sleeps


class TestTranslate:
    def test_identity(self, identity):
        result = translate(identity, TranslationRequest("chhungkaw 7", "lus", "en"))
        assert result.text == "chhungkaw 7"
        assert result.backend_id == "mock-identity"

    def test_dictionary(self, lexicon_cfg):
        result = translate(lexicon_cfg, TranslationRequest("chhungkaw 7", "lus", "en"))
        assert result.text == "families 7"

    def test_dictionary_preserves_leading_case_and_passthrough(self, lexicon_cfg):
        result = translate(
            lexicon_cfg, TranslationRequest("Chhungkaw sawnchhuah Ruahsur nasa", "lus", "en")
        )
        assert result.text == "Families sawnchhuah Rain heavy"

    def test_empty_text(self, identity):
        assert translate(identity, TranslationRequest("", "lus", "en")).text == ""

    def test_empty_lang_rejected(self, identity):
        with pytest.raises(BackendError):
            translate(identity, TranslationRequest("x", "", "en"))

    def test_lexicon_missing(self, tmp_path):
        cfg = BackendConfig(
            kind=BackendKind.MOCK_DICTIONARY, lexicon_path=str(tmp_path / "absent.tsv")
        )
        with pytest.raises(BackendError) as err:
            translate(cfg, TranslationRequest("x", "lus", "en"))
        assert err.value.code == "LEXICON_MISSING"

    @settings(max_examples=200)
    @given(st.text(max_size=120))
    def test_identity_round_trip_property(self, text):
        cfg = BackendConfig(kind=BackendKind.MOCK_IDENTITY)
        forward = translate(cfg, TranslationRequest(text, "lus", "en")).text
        back = translate(cfg, TranslationRequest(forward, "en", "lus")).text
        assert back == text

    def test_remote_http(self, http_server):
        def handler(payload):
            assert payload["source_lang"] == "lus"
            assert payload["target_lang"] == "en"
            assert payload["model_hint"] == "nmt-large"
            return 200, {"text": payload["text"].upper()}

        endpoint = http_server.add_json_endpoint("/translate", handler)
        cfg = BackendConfig(
            kind=BackendKind.REMOTE_HTTP, endpoint=endpoint, model_hint="nmt-large"
        )
        result = translate(cfg, TranslationRequest("thu thar", "lus", "en"))
        assert result.text == "THU THAR"
        assert result.backend_id == f"remote:{endpoint}"

    def test_remote_retries_on_503_then_succeeds(self, http_server, no_sleep):
        calls = {"n": 0}

        def handler(payload):
            calls["n"] += 1
            if calls["n"] < 3:
                return 503, {"error": "warming up"}
            return 200, {"text": "ok"}

        endpoint = http_server.add_json_endpoint("/translate", handler)
        cfg = BackendConfig(kind=BackendKind.REMOTE_HTTP, endpoint=endpoint, max_retries=3)
        result = translate(cfg, TranslationRequest("x", "lus", "en"))
        assert result.text == "ok"
        assert calls["n"] == 3
        assert no_sleep == [0.5, 1.0]  # exponential backoff, base 500 ms

    def test_remote_gives_up_after_retries(self, http_server, no_sleep):
        endpoint = http_server.add_json_endpoint("/t", lambda p: (503, {}))
        cfg = BackendConfig(kind=BackendKind.REMOTE_HTTP, endpoint=endpoint, max_retries=2)
        with pytest.raises(BackendError) as err:
            translate(cfg, TranslationRequest("x", "lus", "en"))
        assert err.value.code == "REMOTE_UNAVAILABLE"
        assert no_sleep == [0.5, 1.0]

    def test_remote_4xx_fails_immediately(self, http_server, no_sleep):
        endpoint = http_server.add_json_endpoint("/t", lambda p: (400, {"error": "bad"}))
        cfg = BackendConfig(kind=BackendKind.REMOTE_HTTP, endpoint=endpoint, max_retries=5)
        with pytest.raises(BackendError) as err:
            translate(cfg, TranslationRequest("x", "lus", "en"))
        assert err.value.code == "REMOTE_REJECTED"
        assert no_sleep == []

    def test_remote_429_retries(self, http_server, no_sleep):
        calls = {"n": 0}

        def handler(payload):
            calls["n"] += 1
            return (429, {}) if calls["n"] == 1 else (200, {"text": "ok"})

        endpoint = http_server.add_json_endpoint("/t", handler)
        cfg = BackendConfig(kind=BackendKind.REMOTE_HTTP, endpoint=endpoint, max_retries=1)
        assert translate(cfg, TranslationRequest("x", "lus", "en")).text == "ok"

    def test_auth_token_sent_but_never_logged(
        self, http_server, monkeypatch, caplog, capsys
    ):
        sentinel = "sekrit-token-XYZZY-042"
        monkeypatch.setenv("NEWSENRICH_TEST_TOKEN", sentinel)
        seen = {}

        def handler(payload):
            return 200, {"text": "fine"}

        endpoint = http_server.add_json_endpoint("/t", handler)

        cfg = BackendConfig(
            kind=BackendKind.REMOTE_HTTP,
            endpoint=endpoint,
            auth_token_env="NEWSENRICH_TEST_TOKEN",
        )
        with caplog.at_level(logging.DEBUG):
            result = translate(cfg, TranslationRequest("x", "lus", "en"))
        assert result.text == "fine"
        captured = capsys.readouterr()
        assert sentinel not in caplog.text
        assert sentinel not in captured.out
        assert sentinel not in captured.err
        assert sentinel not in repr(cfg)


class TestAbstractiveSummarize:
    TEXT = "First things happened today. Second events followed at night. Third items closed the week."

    def test_lead_two_of_three(self, identity):
        cfg = BackendConfig(kind=BackendKind.MOCK_LEAD)
        out = abstractive_summarize(cfg, self.TEXT, 9)
        assert out == "First things happened today. Second events followed at night."

    def test_budget_larger_than_text(self):
        cfg = BackendConfig(kind=BackendKind.MOCK_LEAD)
        assert abstractive_summarize(cfg, self.TEXT, 1000) == self.TEXT

    def test_single_sentence(self):
        cfg = BackendConfig(kind=BackendKind.MOCK_LEAD)
        assert abstractive_summarize(cfg, "Only one here.", 50) == "Only one here."

    def test_budget_always_respected(self):
        cfg = BackendConfig(kind=BackendKind.MOCK_LEAD)
        for budget in range(1, 20):
            out = abstractive_summarize(cfg, self.TEXT, budget)
            assert len(tokenize(out)) <= budget

    def test_bad_budget(self):
        cfg = BackendConfig(kind=BackendKind.MOCK_LEAD)
        with pytest.raises(BackendError):
            abstractive_summarize(cfg, "Text.", 0)

    def test_remote_truncated_at_sentence_boundary(self, http_server):
        def handler(payload):
            assert payload["budget_tokens"] == 8
            return 200, {"text": self.TEXT}

        endpoint = http_server.add_json_endpoint("/s", handler)
        cfg = BackendConfig(kind=BackendKind.REMOTE_HTTP, endpoint=endpoint)
        out = abstractive_summarize(cfg, "anything", 8)
        assert out == "First things happened today."


class TestGenerateHeadline:
    def test_single_sentence_truncated(self):
        cfg = BackendConfig(kind=BackendKind.MOCK_LEAD)
        out = generate_headline(cfg, "Floods hit Lunglei district again today.", 3)
        assert out == "Floods hit Lunglei"

    def test_empty_text_errors(self):
        cfg = BackendConfig(kind=BackendKind.MOCK_IDENTITY)
        with pytest.raises(BackendError) as err:
            generate_headline(cfg, "   ", 5)
        assert err.value.code == "EMPTY_INPUT"

    def test_mock_delegates_to_extractive_headline(self):
        # asymmetric overlaps so the top sentence is unambiguous
        text = (
            "Heavy rain flooded Tlabung town on Monday. "
            "The flooded river broke the old wooden bridge. "
            "Officials said the rain will continue all week. "
            "Rescue boats moved eight families across the river."
        )
        cfg = BackendConfig(kind=BackendKind.MOCK_IDENTITY)
        expected = headline_extractive(text, 7, SummaryConfig())
        got = generate_headline(cfg, text, 7)
        assert got == expected == headline_oracle(text, 7, SummaryConfig())

    def test_single_line_and_budget(self):
        cfg = BackendConfig(kind=BackendKind.MOCK_IDENTITY)
        out = generate_headline(cfg, "One two three four five six seven eight.", 4)
        assert "\n" not in out
        assert len(tokenize(out)) <= 4

    def test_remote(self, http_server):
        endpoint = http_server.add_json_endpoint(
            "/h", lambda p: (200, {"text": "Remote headline with extra trailing words"})
        )
        cfg = BackendConfig(kind=BackendKind.REMOTE_HTTP, endpoint=endpoint)
        assert generate_headline(cfg, "Body text.", 3) == "Remote headline with"


class TestConfig:
    def test_remote_requires_endpoint(self):
        with pytest.raises(BackendError):
            BackendConfig(kind=BackendKind.REMOTE_HTTP)

    def test_dictionary_requires_lexicon(self):
        with pytest.raises(BackendError):
            BackendConfig(kind=BackendKind.MOCK_DICTIONARY)

    def test_from_dict_accepts_strings(self):
        cfg = BackendConfig.from_dict({"kind": "MOCK_IDENTITY", "max_retries": 0})
        assert cfg.kind is BackendKind.MOCK_IDENTITY
        assert cfg.max_retries == 0

    def test_determinism_across_calls(self, lexicon_cfg):
        req = TranslationRequest("Chhungkaw ruahsur nasa chhungkaw", "lus", "en")
        first = translate(lexicon_cfg, req).text
        second = translate(lexicon_cfg, req).text
        assert first == second == "Families rain heavy families"
