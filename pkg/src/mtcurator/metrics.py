"""Automatic naturalness metrics: perplexity, lexical density, length variety.

Perplexity is exp(-mean token logprob) of the target text scored on its own,
with no source context. Lexical density is the share of content words
(nouns, proper nouns, verbs, adjectives, adverbs) among non-punctuation
words. Length variety is |len(src) - len(tgt)| / len(src) over token counts,
both sides tokenized in their own language. Aggregation averages per
(direction, granularity, system, variant) group, and paired_significance is
a two-sided paired bootstrap test on matched score vectors.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .corpus import Corpus, ParallelRecord
from .errors import CuratorError, ValidationError
from .inference import InferenceClient, TokenScore

UPOS_TAGS = frozenset(
    {
        "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM",
        "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X",
    }
)

# Content words for lexical density. Proper nouns count as nouns;
# auxiliaries are function words, not verbs.
CONTENT_TAGS = frozenset({"NOUN", "PROPN", "VERB", "ADJ", "ADV"})


@dataclass(frozen=True)
class TaggedToken:
    surface: str
    upos: str

    def __post_init__(self):
        if not self.surface:
            raise ValidationError("token surface is empty")
        if self.upos not in UPOS_TAGS:
            raise ValidationError(f"unknown UPOS tag {self.upos!r}")


@dataclass(frozen=True)
class MetricRecord:
    """Naturalness measurements for one translation of one record."""

    record_id: str
    system_id: str
    variant: str
    direction: str
    granularity: str
    ppl: float
    lexical_density: float
    length_variety: float
    quality: float | None = None

    def __post_init__(self):
        for name in ("ppl", "lexical_density", "length_variety"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f"{name} is not finite: {value}")
        if self.ppl <= 0:
            raise ValidationError(f"ppl must be > 0, got {self.ppl}")
        if not 0.0 <= self.lexical_density <= 1.0:
            raise ValidationError(f"lexical_density out of [0,1]: {self.lexical_density}")
        if self.length_variety < 0:
            raise ValidationError(f"length_variety must be >= 0: {self.length_variety}")
        if self.quality is not None and not 0.0 <= self.quality <= 1.0:
            raise ValidationError(f"quality out of [0,1]: {self.quality}")


def perplexity(scores: Sequence[TokenScore]) -> float:
    """exp(-mean logprob) over tokens that carry a logprob.

    Tokens without one (the first token under echo scoring) are skipped.
    """
    logprobs = [s.logprob for s in scores if s.logprob is not None]
    if not logprobs:
        raise ValidationError("no scorable tokens (every logprob is absent)")
    return math.exp(-sum(logprobs) / len(logprobs))


def lexical_density(tokens: Sequence[TaggedToken]) -> float:
    """Content words over non-punctuation words."""
    words = [t for t in tokens if t.upos != "PUNCT"]
    if not words:
        raise ValidationError("no non-punctuation tokens")
    content = sum(1 for t in words if t.upos in CONTENT_TAGS)
    return content / len(words)


def length_variety(src_token_count: int, tgt_token_count: int) -> float:
    """|len(src) - len(tgt)| / len(src)."""
    if src_token_count < 1:
        raise ValidationError("source token count must be >= 1")
    if tgt_token_count < 0:
        raise ValidationError("target token count must be >= 0")
    return abs(src_token_count - tgt_token_count) / src_token_count


def score_translation(
    client: InferenceClient,
    tagger,
    record: ParallelRecord,
    system_id: str | None = None,
    variant: str | None = None,
    quality=None,
) -> MetricRecord:
    """Compose the three metrics (plus optional quality) for one translation.

    A failing quality call leaves quality absent; the other components
    propagate their errors.
    """
    translation = record.translation(system_id, variant)
    src_lang = record.direction.source_lang
    tgt_lang = record.direction.target_lang

    ppl = perplexity(client.score_text(translation.text))
    tgt_tokens = tagger.tag(tgt_lang, [translation.text])[0]
    src_tokens = tagger.tag(src_lang, [record.source_text])[0]

    quality_score = None
    if quality is not None:
        try:
            quality_score = quality.score_pairs(
                [(src_lang, tgt_lang, record.source_text, translation.text)]
            )[0]
        except CuratorError:
            quality_score = None

    return MetricRecord(
        record_id=record.id,
        system_id=translation.system_id,
        variant=translation.variant,
        direction=record.direction.label,
        granularity=record.granularity,
        ppl=ppl,
        lexical_density=lexical_density(tgt_tokens),
        length_variety=length_variety(len(src_tokens), len(tgt_tokens)),
        quality=quality_score,
    )


def score_corpus(
    client: InferenceClient,
    tagger,
    corpus: Corpus,
    systems: Sequence[str] | None = None,
    variants: Sequence[str] | None = None,
    quality=None,
) -> list[MetricRecord]:
    """Score every matching translation in the corpus.

    Target texts are scored through the client's bounded fan-out; tagging is
    batched per language.
    """
    items: list[tuple[ParallelRecord, int]] = []
    for rec in corpus:
        for i, t in enumerate(rec.translations):
            if systems is not None and t.system_id not in systems:
                continue
            if variants is not None and t.variant not in variants:
                continue
            items.append((rec, i))
    if not items:
        raise ValidationError("no translations match the requested systems/variants")

    # One source tagging per record, one target tagging per translation.
    src_by_lang: dict[str, list[str]] = {}
    src_slot: dict[str, int] = {}
    for rec in corpus:
        lang = rec.direction.source_lang
        src_slot[rec.id] = len(src_by_lang.setdefault(lang, []))
        src_by_lang[lang].append(rec.source_text)
    src_tags = {lang: tagger.tag(lang, texts) for lang, texts in src_by_lang.items()}

    tgt_by_lang: dict[str, list[str]] = {}
    tgt_slot: list[int] = []
    for rec, i in items:
        lang = rec.direction.target_lang
        tgt_slot.append(len(tgt_by_lang.setdefault(lang, [])))
        tgt_by_lang[lang].append(rec.translations[i].text)
    tgt_tags = {lang: tagger.tag(lang, texts) for lang, texts in tgt_by_lang.items()}

    score_results = client.score_text_many([rec.translations[i].text for rec, i in items])

    quality_scores: list[float | None] = [None] * len(items)
    if quality is not None:
        pairs = [
            (
                rec.direction.source_lang,
                rec.direction.target_lang,
                rec.source_text,
                rec.translations[i].text,
            )
            for rec, i in items
        ]
        try:
            quality_scores = list(quality.score_pairs(pairs))
        except CuratorError:
            quality_scores = [None] * len(items)

    out = []
    for pos, (rec, i) in enumerate(items):
        scored = score_results[pos]
        if isinstance(scored, Exception):
            raise scored
        t = rec.translations[i]
        n_src = len(src_tags[rec.direction.source_lang][src_slot[rec.id]])
        tgt_tokens = tgt_tags[rec.direction.target_lang][tgt_slot[pos]]
        out.append(
            MetricRecord(
                record_id=rec.id,
                system_id=t.system_id,
                variant=t.variant,
                direction=rec.direction.label,
                granularity=rec.granularity,
                ppl=perplexity(scored),
                lexical_density=lexical_density(tgt_tokens),
                length_variety=length_variety(n_src, len(tgt_tokens)),
                quality=quality_scores[pos],
            )
        )
    return out


@dataclass(frozen=True)
class AggregateRow:
    direction: str
    granularity: str
    system_id: str
    variant: str
    lex: float
    len_variety: float
    ppl: float
    quality: float | None
    n: int


def aggregate_metrics(records: Sequence[MetricRecord]) -> list[AggregateRow]:
    """Mean of each metric per (direction, granularity, system, variant)."""
    if not records:
        raise ValidationError("no metric records to aggregate")
    groups: dict[tuple[str, str, str, str], list[MetricRecord]] = {}
    for r in records:
        groups.setdefault((r.direction, r.granularity, r.system_id, r.variant), []).append(r)
    rows = []
    for key in sorted(groups):
        members = groups[key]
        qualities = [m.quality for m in members if m.quality is not None]
        rows.append(
            AggregateRow(
                direction=key[0],
                granularity=key[1],
                system_id=key[2],
                variant=key[3],
                lex=sum(m.lexical_density for m in members) / len(members),
                len_variety=sum(m.length_variety for m in members) / len(members),
                ppl=sum(m.ppl for m in members) / len(members),
                quality=(sum(qualities) / len(qualities)) if qualities else None,
                n=len(members),
            )
        )
    return rows


def write_aggregates_csv(rows: Sequence[AggregateRow], path: str | Path) -> None:
    """Aggregate table at report precision: Lex./Len. 3 decimals, PPL 1,
    quality scaled x100 with 1 decimal."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["direction", "granularity", "system", "variant", "lex", "len", "ppl", "quality", "n"])
        for r in rows:
            writer.writerow(
                [
                    r.direction,
                    r.granularity,
                    r.system_id,
                    r.variant,
                    f"{r.lex:.3f}",
                    f"{r.len_variety:.3f}",
                    f"{r.ppl:.1f}",
                    "" if r.quality is None else f"{100 * r.quality:.1f}",
                    r.n,
                ]
            )


def write_metric_records_csv(records: Sequence[MetricRecord], path: str | Path) -> None:
    """Per-translation measurements at full precision (for downstream joins)."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["record_id", "direction", "granularity", "system", "variant", "ppl", "lex", "len", "quality"]
        )
        for r in records:
            writer.writerow(
                [
                    r.record_id,
                    r.direction,
                    r.granularity,
                    r.system_id,
                    r.variant,
                    repr(r.ppl),
                    repr(r.lexical_density),
                    repr(r.length_variety),
                    "" if r.quality is None else repr(r.quality),
                ]
            )


def load_metric_records_csv(path: str | Path) -> list[MetricRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                MetricRecord(
                    record_id=row["record_id"],
                    direction=row["direction"],
                    granularity=row["granularity"],
                    system_id=row["system"],
                    variant=row["variant"],
                    ppl=float(row["ppl"]),
                    lexical_density=float(row["lex"]),
                    length_variety=float(row["len"]),
                    quality=float(row["quality"]) if row.get("quality") else None,
                )
            )
    if not records:
        raise ValidationError(f"no metric records in {path}")
    return records


def paired_significance(
    a: Sequence[float], b: Sequence[float], seed: int, iterations: int = 1000
) -> float:
    """Two-sided paired bootstrap p-value for the mean difference of a - b.

    The null distribution is built by resampling the mean-centered pairwise
    differences; the p-value is smoothed as (hits + 1) / (iterations + 1)
    and is deterministic for a given seed.
    """
    if len(a) != len(b):
        raise ValidationError(f"length mismatch: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ValidationError("need at least 2 pairs")
    if iterations < 1000:
        raise ValidationError(f"iterations must be >= 1000, got {iterations}")
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    if not np.all(np.isfinite(d)):
        raise ValidationError("non-finite values in input")
    observed = abs(float(d.mean()))
    centered = d - d.mean()
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, len(d), size=(iterations, len(d)))
    hits = kernels.bootstrap_tail_count(centered, idx, observed)
    return (hits + 1) / (iterations + 1)
