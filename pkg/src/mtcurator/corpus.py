"""Parallel-corpus ingestion, validation, splitting, and summary statistics.

A corpus is an immutable sequence of ParallelRecord values, loaded from one
of two on-disk schemas:

* ``parallel-jsonl`` — one JSON object per line:
  ``{"id"?, "src_lang", "tgt_lang", "domain"?, "granularity",
  "source_text", "translations": [{"system", "variant", "text"}]}``
* ``tsv-pairs`` — ``source<TAB>target`` lines, interpreted as variant
  "reference" under system "gold" (direction supplied by the caller).

Exports are canonical JSONL (stable key order, compact separators), so
ingest followed by export reproduces a canonically-formed input byte for
byte.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

from .errors import ValidationError

# ISO-639-1 codes the toolkit accepts, with display names used in prompts.
LANGUAGE_REGISTRY: dict[str, str] = {
    "en": "English",
    "zh": "Chinese",
    "de": "German",
    "ru": "Russian",
    "cs": "Czech",
    "is": "Icelandic",
}

GRANULARITIES = ("document", "sentence")

# The four variants accepted on ingest, plus the provenance tag attached to
# an original reference once a polishing job replaces it.
VARIANTS = ("direct", "specified", "polishing", "reference", "reference-original")


@dataclass(frozen=True)
class Direction:
    """A source-language/target-language pair, e.g. en -> zh."""

    source_lang: str
    target_lang: str

    def __post_init__(self):
        for code in (self.source_lang, self.target_lang):
            if code not in LANGUAGE_REGISTRY:
                raise ValidationError(f"unknown language code: {code!r}")
        if self.source_lang == self.target_lang:
            raise ValidationError(f"source and target language are both {self.source_lang!r}")

    @property
    def label(self) -> str:
        return f"{self.source_lang}-{self.target_lang}"

    @classmethod
    def parse(cls, label: str) -> "Direction":
        parts = label.split("-")
        if len(parts) != 2:
            raise ValidationError(f"direction label must look like 'en-zh', got {label!r}")
        return cls(parts[0], parts[1])


def language_name(code_or_name: str) -> str:
    """Resolve an ISO code (or an already-resolved display name) to a display name."""
    if code_or_name in LANGUAGE_REGISTRY:
        return LANGUAGE_REGISTRY[code_or_name]
    if code_or_name in LANGUAGE_REGISTRY.values():
        return code_or_name
    raise ValidationError(f"unresolvable language: {code_or_name!r}")


@dataclass(frozen=True)
class Translation:
    system_id: str
    variant: str
    text: str

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"unknown variant {self.variant!r}")
        if not self.text:
            raise ValidationError("translation text is empty")


@dataclass(frozen=True)
class ParallelRecord:
    """One source text with its translations."""

    id: str
    direction: Direction
    domain: str
    granularity: str
    source_text: str
    translations: tuple[Translation, ...]

    def __post_init__(self):
        if not self.id:
            raise ValidationError("record id is empty")
        if self.granularity not in GRANULARITIES:
            raise ValidationError(f"unknown granularity {self.granularity!r}")
        if not self.source_text:
            raise ValidationError(f"record {self.id}: source_text is empty")
        seen = set()
        for t in self.translations:
            key = (t.system_id, t.variant)
            if key in seen:
                raise ValidationError(f"record {self.id}: duplicate translation {key}")
            seen.add(key)

    def translation(self, system_id: str | None = None, variant: str | None = None) -> Translation:
        """The unique translation matching the given system/variant filters."""
        matches = [
            t
            for t in self.translations
            if (system_id is None or t.system_id == system_id)
            and (variant is None or t.variant == variant)
        ]
        wanted = f"system={system_id!r}, variant={variant!r}"
        if not matches:
            raise ValidationError(f"record {self.id}: translation not found ({wanted})")
        if len(matches) > 1:
            raise ValidationError(f"record {self.id}: ambiguous translation selector ({wanted})")
        return matches[0]

    def has_translation(self, system_id: str | None = None, variant: str | None = None) -> bool:
        return any(
            (system_id is None or t.system_id == system_id)
            and (variant is None or t.variant == variant)
            for t in self.translations
        )


class Corpus:
    """Immutable, order-preserving collection of records with unique ids."""

    def __init__(self, records: Sequence[ParallelRecord]):
        self.records: tuple[ParallelRecord, ...] = tuple(records)
        self._by_id: dict[str, ParallelRecord] = {}
        dups = []
        for rec in self.records:
            if rec.id in self._by_id:
                dups.append(rec.id)
            self._by_id[rec.id] = rec
        if dups:
            raise ValidationError(
                "duplicate record ids", [f"duplicate record id: {i}" for i in sorted(set(dups))]
            )

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ParallelRecord]:
        return iter(self.records)

    def __getitem__(self, index: int) -> ParallelRecord:
        return self.records[index]

    def get(self, record_id: str) -> ParallelRecord:
        try:
            return self._by_id[record_id]
        except KeyError:
            raise ValidationError(f"no record with id {record_id!r}") from None

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._by_id

    def directions(self) -> list[Direction]:
        seen: dict[str, Direction] = {}
        for rec in self.records:
            seen.setdefault(rec.direction.label, rec.direction)
        return [seen[label] for label in sorted(seen)]

    def with_records(self, records: Sequence[ParallelRecord]) -> "Corpus":
        return Corpus(records)


@dataclass(frozen=True)
class CorpusStats:
    direction: Direction
    record_count: int
    avg_source_tokens: float
    domains: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if sum(self.domains.values()) != self.record_count:
            raise ValidationError("domain counts do not sum to record_count")


@dataclass(frozen=True)
class SplitSpec:
    dev_fraction: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.dev_fraction < 1.0:
            raise ValidationError(f"dev_fraction must be in [0, 1), got {self.dev_fraction}")


def _parse_jsonl_record(obj: dict, line_no: int, default_id: str) -> ParallelRecord:
    for key in ("src_lang", "tgt_lang", "granularity", "source_text", "translations"):
        if key not in obj:
            raise ValidationError(f"line {line_no}: missing field {key!r}")
    direction = Direction(obj["src_lang"], obj["tgt_lang"])
    translations = []
    for i, t in enumerate(obj["translations"]):
        for key in ("system", "variant", "text"):
            if key not in t:
                raise ValidationError(f"line {line_no}: translation {i}: missing field {key!r}")
        translations.append(Translation(t["system"], t["variant"], t["text"]))
    return ParallelRecord(
        id=obj.get("id") or default_id,
        direction=direction,
        domain=obj.get("domain", "general"),
        granularity=obj["granularity"],
        source_text=obj["source_text"],
        translations=tuple(translations),
    )


def ingest_corpus(
    path: str | Path,
    schema: str = "parallel-jsonl",
    direction: Direction | None = None,
) -> Corpus:
    """Load and validate a corpus file.

    Malformed lines are reported with their line numbers, all at once.
    Records lacking an explicit id get ``<filename>:<line>``. For the
    ``tsv-pairs`` schema a ``direction`` must be supplied.
    """
    path = Path(path)
    if schema not in ("parallel-jsonl", "tsv-pairs"):
        raise ValidationError(f"unknown corpus schema {schema!r}")
    if schema == "tsv-pairs" and direction is None:
        raise ValidationError("tsv-pairs schema requires a direction")
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValidationError(f"corpus file not found: {path}") from None
    except UnicodeDecodeError as exc:
        raise ValidationError(f"corpus file is not UTF-8: {path} ({exc})") from None

    records: list[ParallelRecord] = []
    problems: list[str] = []
    explicit_ids: dict[str, int] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        default_id = f"{path.name}:{line_no}"
        try:
            if schema == "parallel-jsonl":
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValidationError(f"line {line_no}: invalid JSON ({exc.msg})") from None
                if not isinstance(obj, dict):
                    raise ValidationError(f"line {line_no}: expected a JSON object")
                if "id" in obj and obj["id"]:
                    prev = explicit_ids.get(obj["id"])
                    if prev is not None:
                        raise ValidationError(
                            f"line {line_no}: duplicate id {obj['id']!r} (first seen line {prev})"
                        )
                    explicit_ids[obj["id"]] = line_no
                records.append(_parse_jsonl_record(obj, line_no, default_id))
            else:
                cols = line.split("\t")
                if len(cols) != 2:
                    raise ValidationError(f"line {line_no}: expected 2 tab-separated columns, got {len(cols)}")
                source, target = cols
                if not source:
                    raise ValidationError(f"line {line_no}: empty source text")
                if not target:
                    raise ValidationError(f"line {line_no}: empty target text")
                records.append(
                    ParallelRecord(
                        id=default_id,
                        direction=direction,  # type: ignore[arg-type]
                        domain="general",
                        granularity="sentence",
                        source_text=source,
                        translations=(Translation("gold", "reference", target),),
                    )
                )
        except ValidationError as exc:
            problems.extend(exc.problems)
    if problems:
        raise ValidationError(f"{path}: {len(problems)} malformed line(s)", problems)
    if not records:
        raise ValidationError(f"{path}: empty corpus")
    return Corpus(records)


def record_to_dict(rec: ParallelRecord) -> dict:
    """Canonical JSON-ready form of a record (stable key order)."""
    return {
        "id": rec.id,
        "src_lang": rec.direction.source_lang,
        "tgt_lang": rec.direction.target_lang,
        "domain": rec.domain,
        "granularity": rec.granularity,
        "source_text": rec.source_text,
        "translations": [
            {"system": t.system_id, "variant": t.variant, "text": t.text} for t in rec.translations
        ],
    }


def export_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write the corpus as canonical JSONL (one record per line, LF endings)."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in corpus:
            fh.write(json.dumps(record_to_dict(rec), ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")


def corpus_stats(corpus: Corpus, tagger) -> list[CorpusStats]:
    """Per-direction record counts, mean source token counts, and domain tallies.

    Token counts come from the tagger's tokenization of each source text in
    its own language.
    """
    if len(corpus) == 0:
        raise ValidationError("empty corpus")
    out = []
    for direction in corpus.directions():
        recs = [r for r in corpus if r.direction.label == direction.label]
        token_lists = tagger.tag(direction.source_lang, [r.source_text for r in recs])
        total_tokens = sum(len(tokens) for tokens in token_lists)
        domains: dict[str, int] = {}
        for r in recs:
            domains[r.domain] = domains.get(r.domain, 0) + 1
        out.append(
            CorpusStats(
                direction=direction,
                record_count=len(recs),
                avg_source_tokens=total_tokens / len(recs),
                domains=dict(sorted(domains.items())),
            )
        )
    return out


def split_train_dev(corpus: Corpus, spec: SplitSpec) -> tuple[Corpus, Corpus]:
    """Seed-deterministic train/dev split, stratified by direction.

    The dev set has exactly floor(dev_fraction * N) records. Each direction
    contributes floor(dev_fraction * N_dir), and any shortfall against the
    overall floor is topped up from the directions with the largest
    fractional remainders (ties broken by direction label).
    """
    n = len(corpus)
    target_dev = math.floor(spec.dev_fraction * n)
    by_direction: dict[str, list[str]] = {}
    for rec in corpus:
        by_direction.setdefault(rec.direction.label, []).append(rec.id)

    quotas: dict[str, int] = {}
    remainders: list[tuple[float, str]] = []
    for label, ids in by_direction.items():
        exact = spec.dev_fraction * len(ids)
        quotas[label] = math.floor(exact)
        remainders.append((exact - quotas[label], label))
    shortfall = target_dev - sum(quotas.values())
    for _, label in sorted(remainders, key=lambda pair: (-pair[0], pair[1])):
        if shortfall <= 0:
            break
        if quotas[label] < len(by_direction[label]):
            quotas[label] += 1
            shortfall -= 1

    dev_ids: set[str] = set()
    for label in sorted(by_direction):
        ids = list(by_direction[label])
        random.Random(f"{spec.seed}:{label}").shuffle(ids)
        dev_ids.update(ids[: quotas[label]])

    train = [r for r in corpus if r.id not in dev_ids]
    dev = [r for r in corpus if r.id in dev_ids]
    return Corpus(train), Corpus(dev)
