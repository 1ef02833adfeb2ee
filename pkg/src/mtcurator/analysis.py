"""Correlation and comparison analytics over metric and TSR tables.

correlate() reports Pearson and Spearman coefficients (perplexity is
heavy-tailed, so the rank view matters) plus equal-count binned means for
plotting. compare_variants() lines up metric
tables from differently-trained systems against a baseline with paired
bootstrap significance. filter_sweep() evaluates perplexity filtering at a
ladder of proportions.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus
from .curation import filter_by_perplexity
from .errors import ValidationError
from .metrics import MetricRecord, paired_significance


@dataclass(frozen=True)
class CorrelationBin:
    x_low: float
    x_high: float
    mean_y: float
    count: int


@dataclass(frozen=True)
class CorrelationResult:
    n: int
    pearson_r: float | None  # None when a side has zero variance
    spearman_rho: float | None
    binned_means: tuple[CorrelationBin, ...]


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(np.dot(dx, dx)))
    sy = math.sqrt(float(np.dot(dy, dy)))
    if sx == 0.0 or sy == 0.0:
        return None
    return float(np.dot(dx, dy) / (sx * sy))


def rank_with_ties(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the average of their positions."""
    arr = np.asarray(values, dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=np.float64)
    i = 0
    n = len(arr)
    while i < n:
        j = i
        while j + 1 < n and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def correlate(x: Sequence[float], y: Sequence[float], bins: int = 10) -> CorrelationResult:
    """Pearson on raw values, Spearman via average-rank transform, plus
    equal-count binned means of y along x."""
    if len(x) != len(y):
        raise ValidationError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise ValidationError("need at least 3 points")
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if not (np.all(np.isfinite(xa)) and np.all(np.isfinite(ya))):
        raise ValidationError("non-finite values in input")

    pearson_r = _pearson(xa, ya)
    spearman_rho = _pearson(rank_with_ties(xa), rank_with_ties(ya))

    order = np.lexsort((np.arange(len(xa)), xa))
    chunks = np.array_split(order, min(bins, len(xa)))
    binned = tuple(
        CorrelationBin(
            x_low=float(xa[chunk].min()),
            x_high=float(xa[chunk].max()),
            mean_y=float(ya[chunk].mean()),
            count=len(chunk),
        )
        for chunk in chunks
        if len(chunk)
    )
    return CorrelationResult(
        n=len(xa), pearson_r=pearson_r, spearman_rho=spearman_rho, binned_means=binned
    )


@dataclass(frozen=True)
class VariantStats:
    label: str
    n: int
    lex: float
    len_variety: float
    ppl: float
    quality: float | None
    delta_ppl: float | None  # vs baseline; None on the baseline row
    p_ppl: float | None
    p_quality: float | None
    best_metrics: frozenset[str]
    worst_metrics: frozenset[str]


@dataclass(frozen=True)
class GroupComparison:
    direction: str
    granularity: str
    rows: tuple[VariantStats, ...]


@dataclass(frozen=True)
class ComparisonReport:
    baseline: str
    groups: tuple[GroupComparison, ...]


def compare_variants(
    records_by_label: dict[str, list[MetricRecord]],
    baseline: str | None = None,
    seed: int = 0,
    iterations: int = 1000,
) -> ComparisonReport:
    """Compare metric tables from several training variants against a baseline.

    Records are paired by record id within each (direction, granularity)
    group; every label must cover the same groups and ids. PPL and quality
    differences against the baseline get paired bootstrap p-values.
    """
    if not records_by_label:
        raise ValidationError("no variants to compare")
    labels = list(records_by_label)
    if baseline is None:
        baseline = labels[0]
    if baseline not in records_by_label:
        raise ValidationError(f"baseline {baseline!r} not among variants {labels}")

    def grouped(records: list[MetricRecord]) -> dict[tuple[str, str], dict[str, MetricRecord]]:
        out: dict[tuple[str, str], dict[str, MetricRecord]] = {}
        for r in records:
            out.setdefault((r.direction, r.granularity), {})[r.record_id] = r
        return out

    tables = {label: grouped(records) for label, records in records_by_label.items()}
    base_groups = tables[baseline]
    for label, table in tables.items():
        if set(table) != set(base_groups):
            raise ValidationError(
                f"variant {label!r} covers groups {sorted(table)} "
                f"but baseline covers {sorted(base_groups)}"
            )
        for key in base_groups:
            if set(table[key]) != set(base_groups[key]):
                raise ValidationError(
                    f"variant {label!r} and baseline rank different records in group {key}"
                )

    groups = []
    for key in sorted(base_groups):
        ids = sorted(base_groups[key])
        stats: dict[str, dict] = {}
        for label in labels:
            members = [tables[label][key][i] for i in ids]
            qualities = [m.quality for m in members if m.quality is not None]
            stats[label] = {
                "n": len(members),
                "lex": sum(m.lexical_density for m in members) / len(members),
                "len": sum(m.length_variety for m in members) / len(members),
                "ppl": sum(m.ppl for m in members) / len(members),
                "quality": (sum(qualities) / len(qualities)) if qualities else None,
            }

        def paired_p(label: str, metric: str) -> float | None:
            if label == baseline:
                return None
            base_vals, other_vals = [], []
            for i in ids:
                b = tables[baseline][key][i]
                o = tables[label][key][i]
                bv = b.ppl if metric == "ppl" else b.quality
                ov = o.ppl if metric == "ppl" else o.quality
                if bv is None or ov is None:
                    continue
                base_vals.append(bv)
                other_vals.append(ov)
            if len(base_vals) < 2:
                return None
            return paired_significance(other_vals, base_vals, seed=seed, iterations=iterations)

        best: dict[str, str] = {}
        worst: dict[str, str] = {}
        for metric, prefer_high in (("lex", True), ("len", True), ("ppl", False), ("quality", True)):
            values = {l: stats[l][metric] for l in labels if stats[l][metric] is not None}
            if len(values) < 2:
                continue
            ordered = sorted(values, key=lambda l: (values[l], l))
            best[metric] = ordered[-1] if prefer_high else ordered[0]
            worst[metric] = ordered[0] if prefer_high else ordered[-1]

        rows = []
        for label in labels:
            s = stats[label]
            rows.append(
                VariantStats(
                    label=label,
                    n=s["n"],
                    lex=s["lex"],
                    len_variety=s["len"],
                    ppl=s["ppl"],
                    quality=s["quality"],
                    delta_ppl=None if label == baseline else s["ppl"] - stats[baseline]["ppl"],
                    p_ppl=paired_p(label, "ppl"),
                    p_quality=paired_p(label, "quality"),
                    best_metrics=frozenset(m for m, l in best.items() if l == label),
                    worst_metrics=frozenset(m for m, l in worst.items() if l == label),
                )
            )
        groups.append(GroupComparison(direction=key[0], granularity=key[1], rows=tuple(rows)))
    return ComparisonReport(baseline=baseline, groups=tuple(groups))


@dataclass(frozen=True)
class SweepPoint:
    proportion: float
    mean_ppl: float
    mean_quality: float | None


def filter_sweep(
    corpus: Corpus,
    proportions: Sequence[float],
    ppl_by_record: dict[str, float],
    quality_by_record: dict[str, float] | None = None,
    evaluator: Callable[[Corpus], tuple[float, float | None]] | None = None,
) -> list[SweepPoint]:
    """Evaluate perplexity filtering at each proportion.

    The default evaluator reports the mean reference perplexity (and mean
    quality, when provided) of the retained records.
    """
    if not proportions:
        raise ValidationError("no proportions given")
    if any(not 0.0 <= p < 1.0 for p in proportions):
        raise ValidationError(f"proportions must each be in [0, 1): {list(proportions)}")
    if any(a >= b for a, b in zip(proportions, proportions[1:])):
        raise ValidationError(f"proportions must be strictly increasing: {list(proportions)}")

    def default_evaluator(retained: Corpus) -> tuple[float, float | None]:
        ppls = [ppl_by_record[rec.id] for rec in retained]
        mean_ppl = sum(ppls) / len(ppls)
        mean_quality = None
        if quality_by_record is not None:
            qualities = [
                quality_by_record[rec.id] for rec in retained if rec.id in quality_by_record
            ]
            if qualities:
                mean_quality = sum(qualities) / len(qualities)
        return mean_ppl, mean_quality

    evaluate = evaluator or default_evaluator
    points = []
    for p in proportions:
        result = filter_by_perplexity(corpus, ppl_by_record, p)
        mean_ppl, mean_quality = evaluate(result.retained)
        points.append(SweepPoint(proportion=p, mean_ppl=mean_ppl, mean_quality=mean_quality))
    return points


# -- CSV / report output ------------------------------------------------------


def write_correlation_csv(
    rows: Sequence[tuple[str, str, float, float]], path: str | Path
) -> None:
    """Per-record (record_id, system, ppl, tsr) rows."""
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["record_id", "system", "ppl", "tsr"])
        for record_id, system, ppl, tsr in rows:
            writer.writerow([record_id, system, repr(ppl), repr(tsr)])


def write_correlation_summary_csv(result: CorrelationResult, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "pearson_r", "spearman_rho"])
        writer.writerow(
            [
                result.n,
                "undefined" if result.pearson_r is None else f"{result.pearson_r:.6f}",
                "undefined" if result.spearman_rho is None else f"{result.spearman_rho:.6f}",
            ]
        )


def write_binned_means_csv(result: CorrelationResult, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin", "ppl_low", "ppl_high", "mean_tsr", "count"])
        for i, b in enumerate(result.binned_means, start=1):
            writer.writerow([i, f"{b.x_low:.6f}", f"{b.x_high:.6f}", f"{b.mean_y:.6f}", b.count])


def write_sweep_csv(points: Sequence[SweepPoint], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["proportion", "mean_ppl", "mean_quality"])
        for p in points:
            writer.writerow(
                [
                    p.proportion,
                    f"{p.mean_ppl:.4f}",
                    "" if p.mean_quality is None else f"{100 * p.mean_quality:.1f}",
                ]
            )


def render_markdown_table(headers: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    lines = [
        "| " + " | ".join(headers) + " |",
        "|" + "|".join(" --- " for _ in headers) + "|",
    ]
    for row in rows:
        lines.append("| " + " | ".join(str(cell) for cell in row) + " |")
    return "\n".join(lines)


REPORT_FOOTNOTES = (
    "Span lengths and TSR denominators are measured in unicode scalar values (characters).",
    "Texts are scored exactly as given; granularity is surfaced in group keys, not normalized.",
    "Perplexity bins in the correlation view are equal-count (quantile) bins.",
    "Significance tests are paired bootstrap over records, two-sided.",
)


def build_report(sections: Sequence[tuple[str, str]], title: str = "Curation report") -> str:
    """Assemble the Markdown report from (heading, body) sections."""
    parts = [f"# {title}", ""]
    for heading, body in sections:
        parts.append(f"## {heading}")
        parts.append("")
        parts.append(body)
        parts.append("")
    parts.append("## Notes")
    parts.append("")
    for note in REPORT_FOOTNOTES:
        parts.append(f"- {note}")
    parts.append("")
    return "\n".join(parts)
