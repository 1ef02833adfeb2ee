"""Mitigation dataset construction: polished references, teacher
re-translations, perplexity-ranked filtering, and SFT export.

Polishing rewrites each record's golden reference with the polishing prompt
(the original is kept under the "reference-original" variant); kd adds a
teacher system's direct translation; filtering drops the least natural
fraction of records by reference perplexity, per direction. emit_sft_dataset
writes prompt/completion JSONL plus a flat key=value training-config sidecar
for the external trainer.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import Corpus, ParallelRecord, Translation, language_name
from .errors import InferenceError, JobAborted, ValidationError
from .inference import InferenceClient

PROMPT_VARIANTS = ("direct", "specified", "polishing")

_TEMPLATES = {
    "direct": (
        "Please translate the following {source_language} text to {target_language}.\n"
        "### Source text: {source_text}\n"
        "### Translation:"
    ),
    "specified": (
        "Please translate the following {source_language} text to {target_language}, "
        "ensuring that the translation is fluent, accurate, and conforms to typical "
        "{target_language} expressions and style.\n"
        "### Source text: {source_text}\n"
        "### Translation:"
    ),
    "polishing": (
        "Please polish the corresponding {target_language} translation of an "
        "{source_language} text, ensuring that the translation is fluent, accurate, "
        "and conforms to typical {target_language} expressions and style.\n"
        "### Source text: {source_text}\n"
        "### Original Translation: {target_text}\n"
        "### Translation:"
    ),
}

# Pinned fine-tuning hyperparameters emitted alongside every SFT dataset.
TRAINING_CONFIG = {
    "lora_rank": 16,
    "learning_rate": 0.0001,
    "warmup_ratio": 0.1,
    "epochs": 3,
    "batch_size": 16,
}

DEFAULT_ABORT_FAILURE_RATE = 0.05


def render_prompt(
    variant: str,
    source_language: str,
    target_language: str,
    source_text: str,
    target_text: str | None = None,
) -> str:
    """Instantiate a translation/polishing prompt template, byte-exactly.

    Languages may be ISO codes or display names; target_text is required for
    the polishing variant and forbidden otherwise.
    """
    if variant not in PROMPT_VARIANTS:
        raise ValidationError(f"unknown prompt variant {variant!r}")
    if variant == "polishing" and target_text is None:
        raise ValidationError("polishing prompt requires target_text")
    if variant != "polishing" and target_text is not None:
        raise ValidationError(f"{variant} prompt takes no target_text")
    fields = {
        "source_language": language_name(source_language),
        "target_language": language_name(target_language),
        "source_text": source_text,
    }
    if target_text is not None:
        fields["target_text"] = target_text
    return _TEMPLATES[variant].format(**fields)


def extract_source_text(rendered: str, variant: str = "direct") -> str:
    """Recover {source_text} from a rendered direct/specified prompt."""
    if variant not in ("direct", "specified"):
        raise ValidationError(f"cannot extract source text from variant {variant!r}")
    marker = "\n### Source text: "
    suffix = "\n### Translation:"
    header_end = rendered.find(marker)
    if header_end < 0 or not rendered.endswith(suffix):
        raise ValidationError("text does not look like a rendered translation prompt")
    return rendered[header_end + len(marker) : len(rendered) - len(suffix)]


@dataclass(frozen=True)
class SftInstance:
    record_id: str
    direction: str
    prompt_text: str
    completion_text: str

    def __post_init__(self):
        if not self.completion_text:
            raise ValidationError(f"record {self.record_id}: empty completion")


@dataclass
class JobSummary:
    """Outcome of a polish/kd run: which records succeeded and which failed."""

    total: int
    succeeded: int
    failed_ids: list[str] = field(default_factory=list)

    @property
    def failure_rate(self) -> float:
        return len(self.failed_ids) / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "succeeded": self.succeeded,
            "failed": sorted(self.failed_ids),
            "failure_rate": self.failure_rate,
        }


def _reference_of(record: ParallelRecord) -> Translation:
    refs = [t for t in record.translations if t.variant == "reference"]
    if not refs:
        raise ValidationError(f"record {record.id}: no reference translation")
    if len(refs) > 1:
        raise ValidationError(f"record {record.id}: multiple reference translations")
    return refs[0]


def _run_job(
    corpus: Corpus,
    client: InferenceClient,
    build_messages,
    apply_result,
    abort_failure_rate: float,
) -> tuple[Corpus, JobSummary]:
    """Fan a chat call out over every record, then rebuild the corpus.

    Failures are tolerated up to ``abort_failure_rate`` (strictly above
    aborts); failing records pass through unchanged and are listed in the
    summary.
    """
    records = list(corpus)
    results = client.chat_complete_many([build_messages(rec) for rec in records])
    results = [
        InferenceError("endpoint returned an empty generation")
        if isinstance(res, str) and not res.strip()
        else res
        for res in results
    ]
    failed = [rec.id for rec, res in zip(records, results) if isinstance(res, Exception)]
    rate = len(failed) / len(records)
    if rate > abort_failure_rate:
        raise JobAborted(
            f"failure rate {rate:.1%} exceeds abort threshold {abort_failure_rate:.1%} "
            f"({len(failed)}/{len(records)} records): {sorted(failed)[:5]}..."
        )
    new_records = [
        rec if isinstance(res, Exception) else apply_result(rec, res)
        for rec, res in zip(records, results)
    ]
    summary = JobSummary(
        total=len(records), succeeded=len(records) - len(failed), failed_ids=failed
    )
    return Corpus(new_records), summary


def polish_references(
    corpus: Corpus,
    client: InferenceClient,
    abort_failure_rate: float = DEFAULT_ABORT_FAILURE_RATE,
) -> tuple[Corpus, JobSummary]:
    """Rewrite each record's reference with the polishing prompt.

    The polished text replaces the reference; the original is retained under
    the "reference-original" variant for audit.
    """
    if len(corpus) == 0:
        raise ValidationError("empty corpus")
    for rec in corpus:
        _reference_of(rec)

    def build_messages(rec: ParallelRecord):
        ref = _reference_of(rec)
        prompt = render_prompt(
            "polishing",
            rec.direction.source_lang,
            rec.direction.target_lang,
            rec.source_text,
            ref.text,
        )
        return [("user", prompt)]

    def apply_result(rec: ParallelRecord, polished: str) -> ParallelRecord:
        ref = _reference_of(rec)
        translations = []
        for t in rec.translations:
            if t is ref:
                translations.append(Translation(t.system_id, "reference", polished))
                translations.append(Translation(t.system_id, "reference-original", t.text))
            elif t.variant == "reference-original":
                continue  # re-polishing replaces the previous audit copy
            else:
                translations.append(t)
        return ParallelRecord(
            id=rec.id,
            direction=rec.direction,
            domain=rec.domain,
            granularity=rec.granularity,
            source_text=rec.source_text,
            translations=tuple(translations),
        )

    return _run_job(corpus, client, build_messages, apply_result, abort_failure_rate)


def kd_translate(
    corpus: Corpus,
    client: InferenceClient,
    system_id: str = "kd",
    force: bool = False,
    abort_failure_rate: float = DEFAULT_ABORT_FAILURE_RATE,
) -> tuple[Corpus, JobSummary]:
    """Add a teacher system's direct translation to every record."""
    if len(corpus) == 0:
        raise ValidationError("empty corpus")
    if not force:
        taken = [rec.id for rec in corpus if rec.has_translation(system_id=system_id)]
        if taken:
            raise ValidationError(
                f"system {system_id!r} already present on {len(taken)} record(s) "
                f"(e.g. {taken[0]}); pass force to overwrite"
            )

    def build_messages(rec: ParallelRecord):
        prompt = render_prompt(
            "direct", rec.direction.source_lang, rec.direction.target_lang, rec.source_text
        )
        return [("user", prompt)]

    def apply_result(rec: ParallelRecord, generated: str) -> ParallelRecord:
        translations = tuple(t for t in rec.translations if t.system_id != system_id) + (
            Translation(system_id, "direct", generated),
        )
        return ParallelRecord(
            id=rec.id,
            direction=rec.direction,
            domain=rec.domain,
            granularity=rec.granularity,
            source_text=rec.source_text,
            translations=translations,
        )

    return _run_job(corpus, client, build_messages, apply_result, abort_failure_rate)


@dataclass(frozen=True)
class RemovalEntry:
    record_id: str
    direction: str
    ppl: float
    rank: int  # 1 = highest perplexity within its direction


@dataclass
class FilterResult:
    retained: Corpus
    removed: list[RemovalEntry]


def filter_by_perplexity(corpus: Corpus, ppl_by_record: dict[str, float], proportion: float) -> FilterResult:
    """Drop the least natural floor(p * N) records per direction.

    Records are ranked by descending reference perplexity; ties at the cut
    are broken by ascending record id. The retained corpus preserves input
    order.
    """
    if not 0.0 <= proportion < 1.0:
        raise ValidationError(f"proportion must be in [0, 1), got {proportion}")
    missing = [rec.id for rec in corpus if rec.id not in ppl_by_record]
    if missing:
        raise ValidationError(
            f"{len(missing)} record(s) lack a perplexity", [f"missing ppl: {i}" for i in missing]
        )

    by_direction: dict[str, list[ParallelRecord]] = {}
    for rec in corpus:
        by_direction.setdefault(rec.direction.label, []).append(rec)

    removed_ids: set[str] = set()
    removed: list[RemovalEntry] = []
    for label in sorted(by_direction):
        recs = by_direction[label]
        ranked = sorted(recs, key=lambda r: (-ppl_by_record[r.id], r.id))
        cut = math.floor(proportion * len(recs))
        for rank, rec in enumerate(ranked[:cut], start=1):
            removed_ids.add(rec.id)
            removed.append(RemovalEntry(rec.id, label, ppl_by_record[rec.id], rank))

    retained = [rec for rec in corpus if rec.id not in removed_ids]
    return FilterResult(retained=Corpus(retained) if retained else Corpus([]), removed=removed)


def write_removal_manifest(removed: Sequence[RemovalEntry], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["record_id", "direction", "ppl", "rank"])
        for entry in sorted(removed, key=lambda e: (e.direction, e.rank)):
            writer.writerow([entry.record_id, entry.direction, repr(entry.ppl), entry.rank])


def build_sft_instances(
    corpus: Corpus, target_variant: str, system_id: str | None = None
) -> list[SftInstance]:
    """One direct-prompt training instance per record, ordered by record id."""
    instances = []
    for rec in sorted(corpus, key=lambda r: r.id):
        translation = rec.translation(system_id=system_id, variant=target_variant)
        prompt = render_prompt(
            "direct", rec.direction.source_lang, rec.direction.target_lang, rec.source_text
        )
        instances.append(
            SftInstance(
                record_id=rec.id,
                direction=rec.direction.label,
                prompt_text=prompt,
                completion_text=translation.text,
            )
        )
    return instances


def emit_sft_dataset(
    corpus: Corpus,
    target_variant: str,
    out_path: str | Path,
    config_path: str | Path | None = None,
    system_id: str | None = None,
) -> int:
    """Write the SFT JSONL plus the training-config sidecar; returns the count."""
    instances = build_sft_instances(corpus, target_variant, system_id)
    out_path = Path(out_path)
    with out_path.open("w", encoding="utf-8", newline="\n") as fh:
        for inst in instances:
            fh.write(
                json.dumps(
                    {
                        "id": inst.record_id,
                        "prompt": inst.prompt_text,
                        "completion": inst.completion_text,
                        "direction": inst.direction,
                    },
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
            )
            fh.write("\n")
    if config_path is None:
        config_path = out_path.with_name("training_config.txt")
    with Path(config_path).open("w", encoding="utf-8", newline="\n") as fh:
        for key, value in TRAINING_CONFIG.items():
            fh.write(f"{key}={value}\n")
    return len(instances)
