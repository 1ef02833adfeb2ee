"""Command-line pipeline: ingest, score, analyze, curate, emit, report.

Every subcommand validates its effective configuration (config file merged
with flags, flags winning), writes its outputs under --out, and always
leaves a run-meta.json recording the config hash, seeds, and endpoint/model
identifiers — on failure the error summary is embedded there too. Exit
codes: 0 success, 1 runtime failure, 2 usage/config error.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
from pathlib import Path

import click

from . import __version__, analysis, annotations, curation, kernels, metrics
from .corpus import Direction, corpus_stats, export_corpus, ingest_corpus
from .errors import CuratorError, ValidationError
from .inference import EndpointConfig, InferenceClient
from .metrics import aggregate_metrics, load_metric_records_csv, score_corpus
from .tagging import (
    FixtureQuality,
    FixtureTagger,
    SidecarQuality,
    SidecarTagger,
)

REPLAY_DEFAULT_URL = "http://replay.invalid/v1"


def _config_hash(payload: dict) -> str:
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class Run:
    """Per-invocation bookkeeping: config merge, run-meta, error envelope."""

    def __init__(self, subcommand: str, out: str, config_path: str | None, flags: dict):
        self.subcommand = subcommand
        self.out_dir = Path(out)
        self.outputs: list[str] = []
        file_config = {}
        if config_path:
            try:
                file_config = json.loads(Path(config_path).read_text(encoding="utf-8"))
            except FileNotFoundError:
                raise click.UsageError(f"config file not found: {config_path}")
            except json.JSONDecodeError as exc:
                raise click.UsageError(f"config file is not valid JSON: {exc}")
            if not isinstance(file_config, dict):
                raise click.UsageError("config file must hold a flat JSON object")
        # flags win over config entries; None means "not provided"
        self.params = dict(file_config)
        for key, value in flags.items():
            if value is not None and value != ():
                self.params[key] = value

    def param(self, key: str, default=None):
        return self.params.get(key, default)

    def require(self, problems: list[str], key: str, flag: str):
        value = self.params.get(key)
        if value in (None, "", ()):
            problems.append(f"missing required option {flag}")
        return value

    def config_hash(self) -> str:
        safe = {k: v for k, v in sorted(self.params.items()) if k != "api_key"}
        return _config_hash({"subcommand": self.subcommand, "params": safe})

    def meta(self, status: str, error: dict | None = None) -> dict:
        meta = {
            "subcommand": self.subcommand,
            "config_hash": self.config_hash(),
            "params": {k: v for k, v in sorted(self.params.items()) if k != "api_key"},
            "seeds": {"seed": self.param("seed", 0)},
            "endpoints": {
                "chat_scoring": {
                    "base_url": self.param("endpoint_url"),
                    "model": self.param("model"),
                    "temperature": 0.0,
                    "replay": self.param("replay"),
                },
                "sidecar": self.param("sidecar_url"),
            },
            "kernel_backend": kernels.backend_name(),
            "version": __version__,
            "status": status,
            "outputs": sorted(self.outputs),
        }
        if error is not None:
            meta["error"] = error
        return meta

    def write_meta(self, status: str, error: dict | None = None) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / "run-meta.json"
        path.write_text(
            json.dumps(self.meta(status, error), sort_keys=True, ensure_ascii=False, indent=2)
            + "\n",
            encoding="utf-8",
        )

    def path(self, name: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.outputs.append(name)
        return self.out_dir / name

    def execute(self, fn) -> None:
        try:
            fn()
        except CuratorError as exc:
            error = {"type": type(exc).__name__, "message": str(exc)}
            problems = getattr(exc, "problems", None)
            if problems and problems != [str(exc)]:
                error["problems"] = problems
            self.write_meta("failed", error)
            click.echo(json.dumps({"error": error}, sort_keys=True), err=True)
            sys.exit(1)
        self.write_meta("ok")

    def usage_failure(self, problems: list[str]) -> None:
        error = {"type": "ConfigError", "message": "invalid configuration", "problems": problems}
        self.write_meta("failed", error)
        click.echo(json.dumps({"error": error}, sort_keys=True), err=True)
        sys.exit(2)


def _build_client(run: Run, problems: list[str]) -> InferenceClient | None:
    replay = run.param("replay")
    url = run.param("endpoint_url")
    model = run.require(problems, "model", "--model")
    if not replay and not url:
        problems.append("exactly one endpoint mode is required: --replay FIXTURE or --endpoint-url URL")
    if replay and not Path(replay).exists():
        problems.append(f"replay fixture not found: {replay}")
    if problems:
        return None
    config = EndpointConfig(
        base_url=url or REPLAY_DEFAULT_URL,
        model_id=model,
        api_key=run.param("api_key"),
        max_concurrency=int(run.param("max_concurrency", 4)),
        timeout=float(run.param("timeout", 60.0)),
        max_retries=int(run.param("max_retries", 3)),
    )
    if replay:
        return InferenceClient.with_replay(config, replay)
    return InferenceClient(config, cache_dir=run.param("cache_dir"))


def _build_tagger(run: Run, problems: list[str]):
    fixture = run.param("tagger_fixture")
    sidecar = run.param("sidecar_url")
    if bool(fixture) == bool(sidecar):
        problems.append("exactly one tagger is required: --tagger-fixture PATH or --sidecar-url URL")
        return None
    if fixture:
        if not Path(fixture).exists():
            problems.append(f"tagger fixture not found: {fixture}")
            return None
        return FixtureTagger.from_json(fixture)
    return SidecarTagger(sidecar)


def _build_quality(run: Run, problems: list[str]):
    fixture = run.param("quality_fixture")
    sidecar = run.param("quality_url")
    if fixture and sidecar:
        problems.append("at most one of --quality-fixture and --quality-url may be given")
        return None
    if fixture:
        if not Path(fixture).exists():
            problems.append(f"quality fixture not found: {fixture}")
            return None
        return FixtureQuality.from_json(fixture)
    if sidecar:
        return SidecarQuality(sidecar)
    return None


def _ppl_map(records: list[metrics.MetricRecord], variant: str) -> dict[str, float]:
    out: dict[str, float] = {}
    for r in records:
        if r.variant == variant:
            out[r.record_id] = r.ppl
    return out


def _quality_map(records: list[metrics.MetricRecord], variant: str) -> dict[str, float] | None:
    out = {r.record_id: r.quality for r in records if r.variant == variant and r.quality is not None}
    return out or None


common_options = [
    click.option("--config", "config_path", type=click.Path(), default=None, help="JSON config file; flags override its entries."),
    click.option("--out", required=True, type=click.Path(), help="Output directory."),
    click.option("--seed", type=int, default=None, help="Seed for seeded operations (default 0)."),
]

endpoint_options = [
    click.option("--endpoint-url", default=None, help="OpenAI-compatible base URL."),
    click.option("--model", default=None, help="Model identifier at the endpoint."),
    click.option("--replay", default=None, type=click.Path(), help="Replay fixture JSONL; hermetic mode."),
    click.option("--cache-dir", default=None, type=click.Path(), help="Response cache directory."),
    click.option("--max-concurrency", type=int, default=None),
    click.option("--timeout", type=float, default=None),
    click.option("--max-retries", type=int, default=None),
]

tagger_options = [
    click.option("--tagger-fixture", default=None, type=click.Path(), help="Canned tag tables (JSON)."),
    click.option("--sidecar-url", default=None, help="Scorer sidecar base URL."),
]

quality_options = [
    click.option("--quality-fixture", default=None, type=click.Path(), help="Canned quality scores (JSON)."),
    click.option("--quality-url", default=None, help="Quality sidecar base URL."),
]


def add_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@click.group()
@click.version_option(version=__version__)
def main():
    """Translationese curation and evaluation pipeline."""


@main.command()
@add_options(common_options)
@click.option("--input", "input_path", default=None, type=click.Path(), help="Corpus file to ingest.")
@click.option("--schema", default=None, type=click.Choice(["parallel-jsonl", "tsv-pairs"]))
@click.option("--src-lang", default=None, help="Source language for tsv-pairs.")
@click.option("--tgt-lang", default=None, help="Target language for tsv-pairs.")
def ingest(config_path, out, seed, input_path, schema, src_lang, tgt_lang):
    """Validate a corpus file and write it back in canonical JSONL."""
    run = Run("ingest", out, config_path, {
        "input": input_path, "schema": schema, "src_lang": src_lang,
        "tgt_lang": tgt_lang, "seed": seed,
    })
    problems: list[str] = []
    input_file = run.require(problems, "input", "--input")
    schema = run.param("schema", "parallel-jsonl")
    direction = None
    if schema == "tsv-pairs":
        src = run.require(problems, "src_lang", "--src-lang")
        tgt = run.require(problems, "tgt_lang", "--tgt-lang")
        if src and tgt:
            try:
                direction = Direction(src, tgt)
            except ValidationError as exc:
                problems.append(str(exc))
    if problems:
        run.usage_failure(problems)

    def work():
        corpus = ingest_corpus(input_file, schema, direction)
        export_corpus(corpus, run.path("corpus.jsonl"))
        click.echo(f"ingested {len(corpus)} records")

    run.execute(work)


@main.command()
@add_options(common_options)
@click.option("--corpus", "corpus_path", default=None, type=click.Path())
@add_options(tagger_options)
def stats(config_path, out, seed, corpus_path, tagger_fixture, sidecar_url):
    """Per-direction corpus statistics (records, mean source tokens, domains)."""
    run = Run("stats", out, config_path, {
        "corpus": corpus_path, "tagger_fixture": tagger_fixture,
        "sidecar_url": sidecar_url, "seed": seed,
    })
    problems: list[str] = []
    corpus_file = run.require(problems, "corpus", "--corpus")
    tagger = _build_tagger(run, problems)
    if problems:
        run.usage_failure(problems)

    def work():
        corpus = ingest_corpus(corpus_file)
        rows = corpus_stats(corpus, tagger)
        with run.path("stats.csv").open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["direction", "record_count", "avg_source_tokens", "domains"])
            for s in rows:
                domains = "|".join(f"{k}={v}" for k, v in s.domains.items())
                writer.writerow([s.direction.label, s.record_count, f"{s.avg_source_tokens:.1f}", domains])

    run.execute(work)


@main.command()
@add_options(common_options)
@click.option("--corpus", "corpus_path", default=None, type=click.Path())
@add_options(endpoint_options)
@add_options(tagger_options)
@add_options(quality_options)
@click.option("--systems", default=None, help="Comma-separated system filter.")
@click.option("--variants", default=None, help="Comma-separated variant filter.")
def score(config_path, out, seed, corpus_path, endpoint_url, model, replay, cache_dir,
          max_concurrency, timeout, max_retries, tagger_fixture, sidecar_url,
          quality_fixture, quality_url, systems, variants):
    """Compute naturalness metrics for corpus translations."""
    run = Run("score", out, config_path, {
        "corpus": corpus_path, "endpoint_url": endpoint_url, "model": model,
        "replay": replay, "cache_dir": cache_dir, "max_concurrency": max_concurrency,
        "timeout": timeout, "max_retries": max_retries, "tagger_fixture": tagger_fixture,
        "sidecar_url": sidecar_url, "quality_fixture": quality_fixture,
        "quality_url": quality_url, "systems": systems, "variants": variants, "seed": seed,
    })
    problems: list[str] = []
    corpus_file = run.require(problems, "corpus", "--corpus")
    client = _build_client(run, problems)
    tagger = _build_tagger(run, problems)
    quality = _build_quality(run, problems)
    if problems:
        run.usage_failure(problems)

    def work():
        corpus = ingest_corpus(corpus_file)
        system_filter = run.param("systems")
        variant_filter = run.param("variants")
        records = score_corpus(
            client,
            tagger,
            corpus,
            systems=system_filter.split(",") if system_filter else None,
            variants=variant_filter.split(",") if variant_filter else None,
            quality=quality,
        )
        metrics.write_metric_records_csv(records, run.path("metrics.csv"))
        metrics.write_aggregates_csv(aggregate_metrics(records), run.path("aggregates.csv"))
        click.echo(f"scored {len(records)} translations")

    run.execute(work)


@main.command()
@add_options(common_options)
@click.option("--annotations", "annotations_path", default=None, type=click.Path())
@click.option("--corpus", "corpus_path", default=None, type=click.Path(), help="Optional corpus for integrity checks and direction labels.")
@click.option("--categories", default=None, help="Comma-separated category labels for TSR (default: the two flow categories).")
def tsr(config_path, out, seed, annotations_path, corpus_path, categories):
    """TSR analytics from an annotation export."""
    run = Run("tsr", out, config_path, {
        "annotations": annotations_path, "corpus": corpus_path,
        "categories": categories, "seed": seed,
    })
    problems: list[str] = []
    export_file = run.require(problems, "annotations", "--annotations")
    if problems:
        run.usage_failure(problems)

    def work():
        export = annotations.parse_annotation_export(export_file)
        selected = annotations.TRANSLATIONESE_CATEGORIES
        if run.param("categories"):
            selected = frozenset(
                annotations.SpanCategory.from_label(label.strip())
                for label in run.param("categories").split(",")
            )
        direction_of: dict[str, str] | None = None
        corpus_file = run.param("corpus")
        if corpus_file:
            corpus = ingest_corpus(corpus_file)
            missing = sorted({rid for rid, _ in export.texts if rid not in corpus})
            if missing:
                raise ValidationError(
                    f"{len(missing)} annotated record(s) missing from corpus",
                    [f"not in corpus: {rid}" for rid in missing],
                )
            direction_of = {rec.id: rec.direction.label for rec in corpus}

        records = annotations.tsr_records(export, selected)
        annotations.write_tsr_records_csv(records, run.path("tsr_records.csv"))
        annotations.write_tsr_system_csv(records, run.path("tsr.csv"), direction_of)
        histogram = annotations.tsr_histogram([r.mean_tsr for r in records])
        annotations.write_histogram_csv(histogram, run.path("histogram.csv"))
        counts = annotations.category_counts(export.spans, key=lambda s: s.system_id)
        averaged = annotations.averaged_category_counts(export.spans, key=lambda s: s.system_id)
        annotations.write_category_counts_csv(counts, averaged, run.path("categories.csv"))
        click.echo(
            f"TSR over {len(records)} record-system pairs; "
            f"share above {histogram.threshold}: {histogram.share_above_threshold:.3f}"
        )

    run.execute(work)


@main.command()
@add_options(common_options)
@click.option("--rankings", "rankings_path", default=None, type=click.Path())
def agreement(config_path, out, seed, rankings_path):
    """Average ranks and pairwise annotator agreement from a ranking sheet."""
    run = Run("agreement", out, config_path, {"rankings": rankings_path, "seed": seed})
    problems: list[str] = []
    rankings_file = run.require(problems, "rankings", "--rankings")
    if problems:
        run.usage_failure(problems)

    def work():
        rankings = annotations.parse_rankings_csv(rankings_file)
        ranks = annotations.average_rank(rankings)
        annotations.write_ranks_csv(ranks, len(rankings), run.path("ranks.csv"))
        pairs = annotations.agreement_matrix(rankings)
        annotations.write_agreement_csv(pairs, run.path("agreement.csv"))

    run.execute(work)


@main.command()
@add_options(common_options)
@click.option("--metrics", "metrics_path", default=None, type=click.Path(), help="metrics.csv from `score`.")
@click.option("--tsr-records", "tsr_records_path", default=None, type=click.Path(), help="tsr_records.csv from `tsr`.")
@click.option("--bins", type=int, default=None, help="Equal-count bins for the binned view (default 10).")
def correlate(config_path, out, seed, metrics_path, tsr_records_path, bins):
    """Correlate per-record perplexity against annotated TSR."""
    run = Run("correlate", out, config_path, {
        "metrics": metrics_path, "tsr_records": tsr_records_path, "bins": bins, "seed": seed,
    })
    problems: list[str] = []
    metrics_file = run.require(problems, "metrics", "--metrics")
    tsr_file = run.require(problems, "tsr_records", "--tsr-records")
    if problems:
        run.usage_failure(problems)

    def work():
        metric_rows = load_metric_records_csv(metrics_file)
        tsr_rows = annotations.load_tsr_records_csv(tsr_file)
        ppl_by_key: dict[tuple[str, str], float] = {}
        for r in metric_rows:
            ppl_by_key[(r.record_id, r.system_id)] = r.ppl
        joined = [
            (record_id, system, ppl_by_key[(record_id, system)], tsr_value)
            for record_id, system, tsr_value in tsr_rows
            if (record_id, system) in ppl_by_key
        ]
        if len(joined) < 3:
            raise ValidationError(
                f"only {len(joined)} (record, system) pairs join across metrics and TSR; need >= 3"
            )
        result = analysis.correlate(
            [j[2] for j in joined], [j[3] for j in joined], bins=int(run.param("bins", 10))
        )
        analysis.write_correlation_csv(joined, run.path("correlation.csv"))
        analysis.write_correlation_summary_csv(result, run.path("correlation_summary.csv"))
        analysis.write_binned_means_csv(result, run.path("binned_means.csv"))

    run.execute(work)


def _curation_command(run: Run, mode: str):
    problems: list[str] = []
    corpus_file = run.require(problems, "corpus", "--corpus")
    client = _build_client(run, problems)
    if problems:
        run.usage_failure(problems)

    def work():
        corpus = ingest_corpus(corpus_file)
        threshold = float(run.param("abort_threshold", curation.DEFAULT_ABORT_FAILURE_RATE))
        if mode == "polish":
            result, summary = curation.polish_references(corpus, client, abort_failure_rate=threshold)
        else:
            result, summary = curation.kd_translate(
                corpus,
                client,
                system_id=run.param("system", "kd"),
                force=bool(run.param("force", False)),
                abort_failure_rate=threshold,
            )
        export_corpus(result, run.path("corpus.jsonl"))
        run.path(f"{mode}_summary.json").write_text(
            json.dumps(summary.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
        click.echo(f"{mode}: {summary.succeeded}/{summary.total} records succeeded")

    run.execute(work)


@main.command()
@add_options(common_options)
@click.option("--corpus", "corpus_path", default=None, type=click.Path())
@add_options(endpoint_options)
@click.option("--abort-threshold", type=float, default=None, help="Abort when the failure rate exceeds this (default 0.05).")
def polish(config_path, out, seed, corpus_path, endpoint_url, model, replay, cache_dir,
           max_concurrency, timeout, max_retries, abort_threshold):
    """Polish golden references via the polishing prompt."""
    run = Run("polish", out, config_path, {
        "corpus": corpus_path, "endpoint_url": endpoint_url, "model": model,
        "replay": replay, "cache_dir": cache_dir, "max_concurrency": max_concurrency,
        "timeout": timeout, "max_retries": max_retries, "abort_threshold": abort_threshold,
        "seed": seed,
    })
    _curation_command(run, "polish")


@main.command()
@add_options(common_options)
@click.option("--corpus", "corpus_path", default=None, type=click.Path())
@add_options(endpoint_options)
@click.option("--system", default=None, help="System id for the teacher translations (default kd).")
@click.option("--force", is_flag=True, default=None, help="Overwrite an existing teacher system.")
@click.option("--abort-threshold", type=float, default=None)
def kd(config_path, out, seed, corpus_path, endpoint_url, model, replay, cache_dir,
       max_concurrency, timeout, max_retries, system, force, abort_threshold):
    """Add teacher direct translations to every record."""
    run = Run("kd", out, config_path, {
        "corpus": corpus_path, "endpoint_url": endpoint_url, "model": model,
        "replay": replay, "cache_dir": cache_dir, "max_concurrency": max_concurrency,
        "timeout": timeout, "max_retries": max_retries, "system": system,
        "force": force, "abort_threshold": abort_threshold, "seed": seed,
    })
    _curation_command(run, "kd")


@main.command("filter")
@add_options(common_options)
@click.option("--corpus", "corpus_path", default=None, type=click.Path())
@click.option("--metrics", "metrics_path", default=None, type=click.Path())
@click.option("--proportion", type=float, default=None)
@click.option("--variant", default=None, help="Variant whose PPL ranks records (default reference).")
def filter_cmd(config_path, out, seed, corpus_path, metrics_path, proportion, variant):
    """Drop the least natural fraction of records by reference perplexity."""
    run = Run("filter", out, config_path, {
        "corpus": corpus_path, "metrics": metrics_path, "proportion": proportion,
        "variant": variant, "seed": seed,
    })
    problems: list[str] = []
    corpus_file = run.require(problems, "corpus", "--corpus")
    metrics_file = run.require(problems, "metrics", "--metrics")
    if run.param("proportion") is None:
        problems.append("missing required option --proportion")
    if problems:
        run.usage_failure(problems)

    def work():
        corpus = ingest_corpus(corpus_file)
        records = load_metric_records_csv(metrics_file)
        ppl_map = _ppl_map(records, run.param("variant", "reference"))
        result = curation.filter_by_perplexity(corpus, ppl_map, float(run.param("proportion")))
        export_corpus(result.retained, run.path("corpus.jsonl"))
        curation.write_removal_manifest(result.removed, run.path("removed.csv"))
        click.echo(f"removed {len(result.removed)} of {len(corpus)} records")

    run.execute(work)


@main.command()
@add_options(common_options)
@click.option("--corpus", "corpus_path", default=None, type=click.Path())
@click.option("--metrics", "metrics_path", default=None, type=click.Path())
@click.option("--proportions", default=None, help="Comma-separated, strictly increasing, e.g. 0,0.1,0.2,0.4")
@click.option("--variant", default=None)
def sweep(config_path, out, seed, corpus_path, metrics_path, proportions, variant):
    """Mean naturalness (and quality) after filtering at each proportion."""
    run = Run("sweep", out, config_path, {
        "corpus": corpus_path, "metrics": metrics_path, "proportions": proportions,
        "variant": variant, "seed": seed,
    })
    problems: list[str] = []
    corpus_file = run.require(problems, "corpus", "--corpus")
    metrics_file = run.require(problems, "metrics", "--metrics")
    raw = run.require(problems, "proportions", "--proportions")
    values: list[float] = []
    if raw:
        try:
            values = [float(tok) for tok in str(raw).split(",")]
        except ValueError:
            problems.append(f"--proportions must be comma-separated numbers, got {raw!r}")
    if problems:
        run.usage_failure(problems)

    def work():
        corpus = ingest_corpus(corpus_file)
        records = load_metric_records_csv(metrics_file)
        variant_name = run.param("variant", "reference")
        points = analysis.filter_sweep(
            corpus,
            values,
            _ppl_map(records, variant_name),
            _quality_map(records, variant_name),
        )
        analysis.write_sweep_csv(points, run.path("sweep.csv"))

    run.execute(work)


@main.command("emit-sft")
@add_options(common_options)
@click.option("--corpus", "corpus_path", default=None, type=click.Path())
@click.option("--variant", default=None, help="Variant used as the training target.")
@click.option("--system", default=None, help="Disambiguate when several systems carry the variant.")
def emit_sft(config_path, out, seed, corpus_path, variant, system):
    """Emit prompt/completion JSONL plus the training-config sidecar."""
    run = Run("emit-sft", out, config_path, {
        "corpus": corpus_path, "variant": variant, "system": system, "seed": seed,
    })
    problems: list[str] = []
    corpus_file = run.require(problems, "corpus", "--corpus")
    target_variant = run.require(problems, "variant", "--variant")
    if problems:
        run.usage_failure(problems)

    def work():
        corpus = ingest_corpus(corpus_file)
        count = curation.emit_sft_dataset(
            corpus,
            target_variant,
            run.path("sft.jsonl"),
            run.path("training_config.txt"),
            system_id=run.param("system"),
        )
        click.echo(f"emitted {count} training instances")

    run.execute(work)


REPORT_SECTIONS = (
    ("stats.csv", "Corpus statistics"),
    ("aggregates.csv", "Naturalness metrics"),
    ("ranks.csv", "Human ranking"),
    ("agreement.csv", "Inter-annotator agreement"),
    ("tsr.csv", "Translationese span ratios"),
    ("categories.csv", "Error categories"),
    ("histogram.csv", "TSR distribution"),
    ("correlation_summary.csv", "Perplexity-TSR correlation"),
    ("binned_means.csv", "Correlation binned means"),
    ("sweep.csv", "Filtering sweep"),
)


def _csv_to_markdown(path: Path) -> str:
    with path.open("r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return "(empty)"
    return analysis.render_markdown_table(rows[0], rows[1:])


@main.command()
@add_options(common_options)
@click.option("--inputs", multiple=True, type=click.Path(), help="Directories holding CSVs from earlier steps (repeatable).")
@click.option("--metrics", "metrics_path", default=None, type=click.Path(), help="metrics.csv for the variant comparison section.")
@click.option("--baseline", default=None, help="Baseline label for the comparison (system id or variant).")
@click.option("--compare-by", type=click.Choice(["system", "variant"]), default=None)
def report(config_path, out, seed, inputs, metrics_path, baseline, compare_by):
    """Assemble a Markdown report from the CSVs earlier steps produced."""
    run = Run("report", out, config_path, {
        "inputs": list(inputs) if inputs else None, "metrics": metrics_path,
        "baseline": baseline, "compare_by": compare_by, "seed": seed,
    })
    problems: list[str] = []
    dirs = run.param("inputs") or []
    if not dirs:
        problems.append("at least one --inputs directory is required")
    for d in dirs:
        if not Path(d).is_dir():
            problems.append(f"input directory not found: {d}")
    if problems:
        run.usage_failure(problems)

    def work():
        sections: list[tuple[str, str]] = []
        for filename, heading in REPORT_SECTIONS:
            for d in dirs:
                path = Path(d) / filename
                if path.exists():
                    sections.append((heading, _csv_to_markdown(path)))
                    break
        if run.param("metrics") and run.param("baseline"):
            records = load_metric_records_csv(run.param("metrics"))
            by_label: dict[str, list[metrics.MetricRecord]] = {}
            attr = "system_id" if run.param("compare_by", "system") == "system" else "variant"
            for r in records:
                by_label.setdefault(getattr(r, attr), []).append(r)
            comparison = analysis.compare_variants(
                by_label, baseline=run.param("baseline"), seed=int(run.param("seed", 0))
            )
            sections.append(("Variant comparison", _comparison_markdown(comparison)))
        if not sections:
            raise ValidationError("no report inputs found in the given directories")
        run.path("report.md").write_text(analysis.build_report(sections), encoding="utf-8")

    run.execute(work)


def _comparison_markdown(comparison: analysis.ComparisonReport) -> str:
    blocks = []
    for group in comparison.groups:
        headers = ["training", "Lex.", "Len.", "PPL", "Quality", "dPPL", "p (PPL)", "p (quality)", "n"]
        rows = []
        for r in group.rows:
            def mark(value: str, metric: str) -> str:
                if metric in r.best_metrics:
                    return f"**{value}**"
                if metric in r.worst_metrics:
                    return f"_{value}_"
                return value

            rows.append(
                [
                    r.label + (" (baseline)" if r.label == comparison.baseline else ""),
                    mark(f"{r.lex:.3f}", "lex"),
                    mark(f"{r.len_variety:.3f}", "len"),
                    mark(f"{r.ppl:.1f}", "ppl"),
                    "" if r.quality is None else mark(f"{100 * r.quality:.1f}", "quality"),
                    "" if r.delta_ppl is None else f"{r.delta_ppl:+.1f}",
                    "" if r.p_ppl is None else f"{r.p_ppl:.4f}",
                    "" if r.p_quality is None else f"{r.p_quality:.4f}",
                    r.n,
                ]
            )
        blocks.append(
            f"### {group.direction} ({group.granularity})\n\n"
            + analysis.render_markdown_table(headers, rows)
        )
    return "\n\n".join(blocks)


if __name__ == "__main__":
    main()
