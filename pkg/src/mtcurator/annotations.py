"""Span-annotation analytics: TSR, category counts, rankings, agreement.

Ingests the annotation platform's JSON export (an array of tasks, each
carrying the annotated translation in ``data`` and per-annotator span lists
under ``annotations[].result[]``) and ranking sheets (CSV
``annotator,record_id,rank1,rank2,...``).

The translationese span ratio (TSR) of one annotator on one translation is
the union length of their translationese spans (unnatural sentence/phrase
flow by default) divided by the translation length, measured in unicode
scalar values. Per-record TSRs average the annotators; system-level TSRs
average the records.
"""

from __future__ import annotations

import csv
import enum
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from . import kernels
from .errors import ValidationError


class SpanCategory(enum.Enum):
    UNNATURAL_SENTENCE_FLOW = "Unnatural Sentence Flow"
    UNNATURAL_PHRASE_FLOW = "Unnatural Phrase Flow"
    CULTURE_SPECIFIC_REFERENCE = "Culture-specific Reference"
    SENSITIVE_CONTENT = "Sensitive Content"
    MISTRANSLATION = "Mistranslation"
    TERMINOLOGY = "Terminology"
    NON_TRANSLATION = "Non-translation"
    OTHERS = "Others"

    @classmethod
    def from_label(cls, label: str) -> "SpanCategory":
        try:
            return _LABELS[label]
        except KeyError:
            raise ValidationError(f"unknown category label {label!r}") from None


_LABELS = {c.value: c for c in SpanCategory}

# The two categories that constitute translationese proper.
TRANSLATIONESE_CATEGORIES = frozenset(
    {SpanCategory.UNNATURAL_SENTENCE_FLOW, SpanCategory.UNNATURAL_PHRASE_FLOW}
)

DEFAULT_HISTOGRAM_EDGES = (0.0, 0.1, 0.2, 0.4, 1.0)
SIGNIFICANT_TSR_THRESHOLD = 0.2


@dataclass(frozen=True)
class AnnotatedSpan:
    annotator_id: str
    record_id: str
    system_id: str
    start: int
    end: int
    category: SpanCategory

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValidationError(
                f"record {self.record_id}: invalid span offsets [{self.start}, {self.end})"
            )


@dataclass(frozen=True)
class TsrRecord:
    record_id: str
    system_id: str
    per_annotator: dict[str, float]
    mean_tsr: float

    def __post_init__(self):
        if not self.per_annotator:
            raise ValidationError(f"record {self.record_id}: no annotator ratios")
        for annotator, ratio in self.per_annotator.items():
            if not 0.0 <= ratio <= 1.0:
                raise ValidationError(f"record {self.record_id}: ratio out of [0,1] for {annotator}")
        expected = sum(self.per_annotator.values()) / len(self.per_annotator)
        if abs(self.mean_tsr - expected) > 1e-12:
            raise ValidationError(f"record {self.record_id}: mean_tsr does not match annotator mean")


@dataclass(frozen=True)
class RankingRecord:
    annotator_id: str
    record_id: str
    ranking: tuple[str, ...]  # position 0 = rank 1 = most natural

    def __post_init__(self):
        if len(self.ranking) < 2:
            raise ValidationError(f"record {self.record_id}: ranking needs at least 2 systems")
        if len(set(self.ranking)) != len(self.ranking):
            raise ValidationError(f"record {self.record_id}: ranking repeats a system")


@dataclass
class AnnotationExport:
    """Parsed platform export: spans plus the annotated texts themselves."""

    spans: list[AnnotatedSpan] = field(default_factory=list)
    texts: dict[tuple[str, str], str] = field(default_factory=dict)
    task_annotators: dict[tuple[str, str], tuple[str, ...]] = field(default_factory=dict)

    def text_length(self, record_id: str, system_id: str) -> int:
        return len(self.texts[(record_id, system_id)])


def _annotator_id(entry: dict) -> str | None:
    completed_by = entry.get("completed_by")
    if isinstance(completed_by, dict):
        completed_by = completed_by.get("id")
    if completed_by is None:
        return None
    return str(completed_by)


def parse_annotation_export(path: str | Path) -> AnnotationExport:
    """Parse and validate the annotation platform's JSON export."""
    import json

    path = Path(path)
    try:
        tasks = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ValidationError(f"annotation export not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc.msg})") from None
    if not isinstance(tasks, list):
        raise ValidationError(f"{path}: expected a JSON array of tasks")

    export = AnnotationExport()
    problems: list[str] = []
    for task_no, task in enumerate(tasks):
        data = task.get("data") if isinstance(task, dict) else None
        if not isinstance(data, dict):
            problems.append(f"task {task_no}: missing data object")
            continue
        missing = [k for k in ("record_id", "system_id", "text") if not data.get(k)]
        if missing:
            problems.append(f"task {task_no}: missing task metadata: {', '.join(missing)}")
            continue
        record_id, system_id, text = data["record_id"], data["system_id"], data["text"]
        key = (record_id, system_id)
        export.texts[key] = text
        annotators: list[str] = []
        for ann_no, annotation in enumerate(task.get("annotations", [])):
            annotator = _annotator_id(annotation)
            if annotator is None:
                problems.append(f"task {task_no}: annotation {ann_no}: missing completed_by")
                continue
            annotators.append(annotator)
            for result in annotation.get("result", []):
                value = result.get("value", {})
                labels = value.get("labels") or []
                if not labels:
                    problems.append(
                        f"task {task_no} ({record_id}/{system_id}): span without a label"
                    )
                    continue
                try:
                    category = SpanCategory.from_label(labels[0])
                    span = AnnotatedSpan(
                        annotator_id=annotator,
                        record_id=record_id,
                        system_id=system_id,
                        start=int(value["start"]),
                        end=int(value["end"]),
                        category=category,
                    )
                except (ValidationError, KeyError, TypeError, ValueError) as exc:
                    problems.append(f"task {task_no} ({record_id}/{system_id}): {exc}")
                    continue
                if span.end > len(text):
                    problems.append(
                        f"record {record_id} ({system_id}): span [{span.start}, {span.end}) "
                        f"exceeds text length {len(text)}"
                    )
                    continue
                export.spans.append(span)
        export.task_annotators[key] = tuple(dict.fromkeys(annotators))
    if problems:
        raise ValidationError(f"{path}: {len(problems)} invalid annotation(s)", problems)
    return export


def merge_spans(
    spans: Sequence[AnnotatedSpan],
    categories: Iterable[SpanCategory] = TRANSLATIONESE_CATEGORIES,
) -> int:
    """Union length of one annotator's spans on one translation.

    Spans outside ``categories`` are ignored; overlapping and touching
    intervals collapse before lengths are summed.
    """
    keys = {(s.annotator_id, s.record_id, s.system_id) for s in spans}
    if len(keys) > 1:
        raise ValidationError(f"spans mix annotator/record/system groups: {sorted(keys)}")
    wanted = set(categories)
    return kernels.merged_interval_length(
        (s.start, s.end) for s in spans if s.category in wanted
    )


def compute_tsr(
    spans: Sequence[AnnotatedSpan],
    translation_length: int,
    categories: Iterable[SpanCategory] = TRANSLATIONESE_CATEGORIES,
) -> float:
    """Fraction of the translation covered by translationese spans."""
    if translation_length < 1:
        raise ValidationError("translation length must be >= 1")
    return merge_spans(spans, categories) / translation_length


def tsr_records(
    export: AnnotationExport,
    categories: Iterable[SpanCategory] = TRANSLATIONESE_CATEGORIES,
) -> list[TsrRecord]:
    """Per-(record, system) TSRs: one ratio per annotator, then their mean.

    Annotators who completed a task without marking spans contribute 0.
    """
    grouped: dict[tuple[str, str], dict[str, list[AnnotatedSpan]]] = {}
    for span in export.spans:
        key = (span.record_id, span.system_id)
        grouped.setdefault(key, {}).setdefault(span.annotator_id, []).append(span)

    out = []
    for key in sorted(export.texts):
        annotators = export.task_annotators.get(key, ())
        if not annotators:
            continue
        length = export.text_length(*key)
        by_annotator = grouped.get(key, {})
        ratios = {
            annotator: compute_tsr(by_annotator.get(annotator, []), length, categories)
            for annotator in annotators
        }
        out.append(
            TsrRecord(
                record_id=key[0],
                system_id=key[1],
                per_annotator=ratios,
                mean_tsr=sum(ratios.values()) / len(ratios),
            )
        )
    return out


def system_mean_tsr(records: Sequence[TsrRecord]) -> dict[str, float]:
    """Mean of per-record TSRs for each system."""
    grouped: dict[str, list[float]] = {}
    for r in records:
        grouped.setdefault(r.system_id, []).append(r.mean_tsr)
    return {system: sum(vals) / len(vals) for system, vals in sorted(grouped.items())}


def proportion_significant(
    values: Sequence[float], threshold: float = SIGNIFICANT_TSR_THRESHOLD
) -> float:
    """Fraction of values strictly greater than the threshold."""
    if not values:
        raise ValidationError("empty value list")
    return sum(1 for v in values if v > threshold) / len(values)


def category_counts(
    spans: Sequence[AnnotatedSpan],
    key: Callable[[AnnotatedSpan], str] | None = None,
) -> dict[str, Counter]:
    """Raw span counts per category, optionally grouped (e.g. by system)."""
    grouped: dict[str, Counter] = {}
    for span in spans:
        group = key(span) if key else "all"
        grouped.setdefault(group, Counter())[span.category] += 1
    return grouped


def averaged_category_counts(
    spans: Sequence[AnnotatedSpan],
    key: Callable[[AnnotatedSpan], str] | None = None,
) -> dict[str, dict[SpanCategory, float]]:
    """Category counts averaged over the distinct annotators in each group."""
    counts = category_counts(spans, key)
    annotators: dict[str, set[str]] = {}
    for span in spans:
        group = key(span) if key else "all"
        annotators.setdefault(group, set()).add(span.annotator_id)
    return {
        group: {cat: n / len(annotators[group]) for cat, n in sorted(counter.items(), key=lambda kv: kv[0].value)}
        for group, counter in counts.items()
    }


@dataclass(frozen=True)
class HistogramBin:
    low: float
    high: float
    count: int
    proportion: float


@dataclass(frozen=True)
class TsrHistogram:
    bins: tuple[HistogramBin, ...]
    share_above_threshold: float
    threshold: float


def tsr_histogram(
    values: Sequence[float],
    edges: Sequence[float] = DEFAULT_HISTOGRAM_EDGES,
    threshold: float = SIGNIFICANT_TSR_THRESHOLD,
) -> TsrHistogram:
    """Proportion of TSR values per bin; first bin closed, the rest (lo, hi].

    Also reports the headline share of values strictly above ``threshold``.
    """
    edges = list(edges)
    if len(edges) < 2 or any(a >= b for a, b in zip(edges, edges[1:])):
        raise ValidationError(f"bin edges must be strictly increasing, got {edges}")
    if edges[0] != 0.0 or edges[-1] != 1.0:
        raise ValidationError(f"bin edges must cover [0, 1], got {edges}")
    if not values:
        raise ValidationError("empty value list")
    counts = [0] * (len(edges) - 1)
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ValidationError(f"TSR value out of [0,1]: {v}")
        for i in range(1, len(edges)):
            if v <= edges[i]:
                counts[i - 1] += 1
                break
    total = len(values)
    bins = tuple(
        HistogramBin(low=edges[i], high=edges[i + 1], count=c, proportion=c / total)
        for i, c in enumerate(counts)
    )
    return TsrHistogram(
        bins=bins,
        share_above_threshold=proportion_significant(values, threshold),
        threshold=threshold,
    )


def average_rank(rankings: Sequence[RankingRecord]) -> dict[str, float]:
    """Mean rank position per system (1 = ranked most natural)."""
    if not rankings:
        raise ValidationError("no rankings")
    systems = set(rankings[0].ranking)
    positions: dict[str, list[int]] = {s: [] for s in sorted(systems)}
    for r in rankings:
        if set(r.ranking) != systems:
            raise ValidationError(
                f"inconsistent system sets: {sorted(systems)} vs {sorted(r.ranking)} "
                f"({r.annotator_id}/{r.record_id})"
            )
        for idx, system in enumerate(r.ranking):
            positions[system].append(idx + 1)
    return {s: sum(p) / len(p) for s, p in positions.items()}


def kendall_tau(rank_a: Sequence, rank_b: Sequence) -> float:
    """Tau-a rank correlation between two strict rankings of the same items."""
    n = len(rank_a)
    if n != len(rank_b):
        raise ValidationError(f"length mismatch: {n} vs {len(rank_b)}")
    if n < 2:
        raise ValidationError("need at least 2 items")
    if len(set(rank_a)) != n or len(set(rank_b)) != n:
        raise ValidationError("rankings must not repeat items")
    position_in_b = {item: i for i, item in enumerate(rank_b)}
    if set(rank_a) != set(position_in_b):
        raise ValidationError("rankings cover different item sets")
    sequence = [position_in_b[item] for item in rank_a]
    discordant = kernels.count_inversions(sequence)
    pairs = n * (n - 1) // 2
    return (pairs - 2 * discordant) / pairs


@dataclass(frozen=True)
class AgreementPair:
    annotator_a: str
    annotator_b: str
    mean_tau: float
    n_records: int


def agreement_matrix(rankings: Sequence[RankingRecord]) -> list[AgreementPair]:
    """Pairwise annotator agreement: mean Kendall tau over shared records."""
    by_annotator: dict[str, dict[str, RankingRecord]] = {}
    for r in rankings:
        by_annotator.setdefault(r.annotator_id, {})[r.record_id] = r
    annotators = sorted(by_annotator)
    out = []
    for i, a in enumerate(annotators):
        for b in annotators[i + 1 :]:
            shared = sorted(set(by_annotator[a]) & set(by_annotator[b]))
            if not shared:
                continue
            taus = [
                kendall_tau(by_annotator[a][rid].ranking, by_annotator[b][rid].ranking)
                for rid in shared
            ]
            out.append(AgreementPair(a, b, sum(taus) / len(taus), len(shared)))
    return out


def parse_rankings_csv(path: str | Path) -> list[RankingRecord]:
    """Read a ranking sheet: ``annotator,record_id,rank1,rank2,...``."""
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["annotator", "record_id"]:
            raise ValidationError(f"{path}: header must start with annotator,record_id")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) < 4:
                raise ValidationError(f"{path}: line {line_no}: need at least 2 ranked systems")
            ranking = tuple(cell for cell in row[2:] if cell)
            records.append(RankingRecord(annotator_id=row[0], record_id=row[1], ranking=ranking))
    if not records:
        raise ValidationError(f"{path}: no rankings found")
    return records


# -- CSV writers -------------------------------------------------------------


def write_tsr_system_csv(
    records: Sequence[TsrRecord],
    path: str | Path,
    direction_of: dict[str, str] | None = None,
    threshold: float = SIGNIFICANT_TSR_THRESHOLD,
) -> None:
    """Per-system mean TSR and share of records above the threshold."""
    grouped: dict[tuple[str, str], list[float]] = {}
    for r in records:
        direction = direction_of.get(r.record_id, "") if direction_of else ""
        grouped.setdefault((direction, r.system_id), []).append(r.mean_tsr)
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["direction", "system", "mean_tsr", f"proportion_gt_{threshold}", "n"])
        for (direction, system), values in sorted(grouped.items()):
            writer.writerow(
                [
                    direction,
                    system,
                    f"{sum(values) / len(values):.6f}",
                    f"{proportion_significant(values, threshold):.6f}",
                    len(values),
                ]
            )


def write_tsr_records_csv(records: Sequence[TsrRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["record_id", "system", "mean_tsr", "n_annotators"])
        for r in records:
            writer.writerow([r.record_id, r.system_id, repr(r.mean_tsr), len(r.per_annotator)])


def load_tsr_records_csv(path: str | Path) -> list[tuple[str, str, float]]:
    """(record_id, system, mean_tsr) rows from write_tsr_records_csv output."""
    rows = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append((row["record_id"], row["system"], float(row["mean_tsr"])))
    if not rows:
        raise ValidationError(f"no TSR records in {path}")
    return rows


def write_histogram_csv(histogram: TsrHistogram, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_low", "bin_high", "count", "proportion"])
        for b in histogram.bins:
            writer.writerow([b.low, b.high, b.count, f"{b.proportion:.6f}"])


def write_category_counts_csv(
    counts: dict[str, Counter], averaged: dict[str, dict[SpanCategory, float]], path: str | Path
) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["group", "category", "count", "avg_per_annotator"])
        for group in sorted(counts):
            for category in SpanCategory:
                if counts[group].get(category, 0):
                    writer.writerow(
                        [
                            group,
                            category.value,
                            counts[group][category],
                            f"{averaged[group][category]:.1f}",
                        ]
                    )


def write_ranks_csv(ranks: dict[str, float], n: int, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["system", "mean_rank", "n"])
        for system in sorted(ranks):
            writer.writerow([system, f"{ranks[system]:.1f}", n])


def write_agreement_csv(pairs: Sequence[AgreementPair], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["annotator_a", "annotator_b", "kendall_tau", "n_records"])
        for p in pairs:
            writer.writerow([p.annotator_a, p.annotator_b, f"{p.mean_tau:.3f}", p.n_records])
