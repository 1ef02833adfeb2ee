"""Tagger and quality-estimation adapters.

The pipeline itself never runs model code. POS tags and quality scores come
either from the scoring sidecar's HTTP contract (``POST /tag``,
``POST /quality``) or from canned fixture tables, so the whole suite runs
offline.

Fixture tagger file: ``{"<lang>": {"<text>": [["surface", "UPOS"], ...]}}``.
Fixture quality file: ``[{"source", "translation", "score"}, ...]``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Protocol, Sequence

from .errors import InferenceError, ValidationError
from .metrics import TaggedToken

SIDECAR_BATCH_LIMIT = 256


class Tagger(Protocol):
    def tag(self, lang: str, texts: Sequence[str]) -> list[list[TaggedToken]]: ...


class QualityScorer(Protocol):
    def score_pairs(self, pairs: Sequence[tuple[str, str, str, str]]) -> list[float]: ...


class FixtureTagger:
    """Tags looked up from a canned table keyed by language and exact text."""

    def __init__(self, tables: dict[str, dict[str, list]]):
        self.tables = tables

    @classmethod
    def from_json(cls, path: str | Path) -> "FixtureTagger":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))

    def tag(self, lang: str, texts: Sequence[str]) -> list[list[TaggedToken]]:
        table = self.tables.get(lang)
        if table is None:
            raise ValidationError(f"no tag fixtures for language {lang!r}")
        out = []
        for text in texts:
            entry = table.get(text)
            if entry is None:
                raise ValidationError(f"no tag fixture for {lang!r} text: {text[:60]!r}")
            out.append([TaggedToken(surface, upos) for surface, upos in entry])
        return out


class FixtureQuality:
    """Quality scores looked up from canned (source, translation) pairs."""

    def __init__(self, scores: dict[tuple[str, str], float]):
        self.scores = scores

    @classmethod
    def from_json(cls, path: str | Path) -> "FixtureQuality":
        entries = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls({(e["source"], e["translation"]): float(e["score"]) for e in entries})

    def score_pairs(self, pairs: Sequence[tuple[str, str, str, str]]) -> list[float]:
        out = []
        for _, _, source, translation in pairs:
            score = self.scores.get((source, translation))
            if score is None:
                raise ValidationError(f"no quality fixture for pair: {source[:40]!r} -> {translation[:40]!r}")
            out.append(score)
        return out


class _SidecarBase:
    def __init__(self, base_url: str, timeout: float = 60.0, transport=None):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        if transport is None:
            import requests

            session = requests.Session()

            def transport(url, body):
                try:
                    resp = session.post(url, json=body, timeout=self.timeout)
                except requests.RequestException as exc:
                    raise InferenceError(f"sidecar transport failure: {exc}") from exc
                return resp.status_code, resp.content

        self._post = transport

    def _call(self, route: str, body: dict) -> dict:
        status, data = self._post(self.base_url + route, body)
        if status != 200:
            detail = data[:200].decode("utf-8", errors="replace")
            raise InferenceError(f"sidecar {route} returned HTTP {status}: {detail}")
        try:
            return json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise InferenceError(f"sidecar {route} returned malformed JSON: {exc}") from None


class SidecarTagger(_SidecarBase):
    """POS tagging over the sidecar wire contract, batched at its size limit."""

    def tag(self, lang: str, texts: Sequence[str]) -> list[list[TaggedToken]]:
        out: list[list[TaggedToken]] = []
        texts = list(texts)
        for start in range(0, len(texts), SIDECAR_BATCH_LIMIT):
            chunk = texts[start : start + SIDECAR_BATCH_LIMIT]
            payload = self._call("/tag", {"lang": lang, "texts": chunk})
            results = payload.get("results")
            if not isinstance(results, list) or len(results) != len(chunk):
                raise InferenceError("sidecar /tag: results missing or misaligned")
            for tokens in results:
                out.append([TaggedToken(t["surface"], t["upos"]) for t in tokens])
        return out


class SidecarQuality(_SidecarBase):
    """Reference-free quality scores over the sidecar wire contract."""

    def score_pairs(self, pairs: Sequence[tuple[str, str, str, str]]) -> list[float]:
        out: list[float] = []
        pairs = list(pairs)
        for start in range(0, len(pairs), SIDECAR_BATCH_LIMIT):
            chunk = pairs[start : start + SIDECAR_BATCH_LIMIT]
            body = {
                "pairs": [
                    {"src_lang": s, "tgt_lang": t, "source": src, "translation": tgt}
                    for s, t, src, tgt in chunk
                ]
            }
            payload = self._call("/quality", body)
            scores = payload.get("scores")
            if not isinstance(scores, list) or len(scores) != len(chunk):
                raise InferenceError("sidecar /quality: scores missing or misaligned")
            for score in scores:
                score = float(score)
                if not 0.0 <= score <= 1.0:
                    raise InferenceError(f"sidecar /quality: score out of [0,1]: {score}")
                out.append(score)
        return out
