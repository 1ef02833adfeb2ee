from __future__ import annotations

import json

import pytest

from mtcurator.errors import InferenceError, ValidationError
from mtcurator.tagging import FixtureQuality, FixtureTagger, SidecarQuality, SidecarTagger

from .helpers import StubHttpServer


def test_fixture_tagger_lookup(tmp_path):
    path = tmp_path / "tags.json"
    path.write_text(
        json.dumps({"en": {"Dogs bark.": [["Dogs", "NOUN"], ["bark", "VERB"], [".", "PUNCT"]]}}),
        encoding="utf-8",
    )
    tagger = FixtureTagger.from_json(path)
    [tags] = tagger.tag("en", ["Dogs bark."])
    assert [(t.surface, t.upos) for t in tags] == [("Dogs", "NOUN"), ("bark", "VERB"), (".", "PUNCT")]


def test_fixture_tagger_misses_are_loud():
    tagger = FixtureTagger({"en": {}})
    with pytest.raises(ValidationError, match="no tag fixture for"):
        tagger.tag("en", ["unseen text"])
    with pytest.raises(ValidationError, match="no tag fixtures for language"):
        tagger.tag("zh", ["x"])


def test_fixture_quality_lookup():
    quality = FixtureQuality({("src", "tgt"): 0.75})
    assert quality.score_pairs([("en", "zh", "src", "tgt")]) == [0.75]
    with pytest.raises(ValidationError, match="no quality fixture"):
        quality.score_pairs([("en", "zh", "other", "tgt")])


def test_sidecar_tagger_roundtrip():
    payload = {"results": [[{"surface": "Hi", "upos": "INTJ"}]], "model": "test"}
    with StubHttpServer({"/tag": [(200, payload)]}) as server:
        tagger = SidecarTagger(server.base_url)
        [tags] = tagger.tag("en", ["Hi"])
        assert [(t.surface, t.upos) for t in tags] == [("Hi", "INTJ")]
        assert server.requests[0][1] == {"lang": "en", "texts": ["Hi"]}


def test_sidecar_tagger_chunks_large_batches():
    def result_for(n):
        return {"results": [[{"surface": "x", "upos": "X"}] for _ in range(n)]}

    with StubHttpServer({"/tag": [(200, result_for(256)), (200, result_for(44))]}) as server:
        tagger = SidecarTagger(server.base_url)
        out = tagger.tag("en", ["x"] * 300)
        assert len(out) == 300
        assert [len(body["texts"]) for _, body in server.requests] == [256, 44]


def test_sidecar_tagger_error_statuses():
    with StubHttpServer({"/tag": [(422, {"error": "unsupported language"})]}) as server:
        with pytest.raises(InferenceError, match="HTTP 422"):
            SidecarTagger(server.base_url).tag("xx", ["text"])


def test_sidecar_quality_scores_and_validation():
    with StubHttpServer({"/quality": [(200, {"scores": [0.9, 0.1]})]}) as server:
        scores = SidecarQuality(server.base_url).score_pairs(
            [("en", "zh", "a", "b"), ("en", "zh", "c", "d")]
        )
        assert scores == [0.9, 0.1]

    with StubHttpServer({"/quality": [(200, {"scores": [1.5]})]}) as server:
        with pytest.raises(InferenceError, match="out of"):
            SidecarQuality(server.base_url).score_pairs([("en", "zh", "a", "b")])

    with StubHttpServer({"/quality": [(200, {"scores": [0.5, 0.5]})]}) as server:
        with pytest.raises(InferenceError, match="misaligned"):
            SidecarQuality(server.base_url).score_pairs([("en", "zh", "a", "b")])
