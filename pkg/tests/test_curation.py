from __future__ import annotations

import json
import math
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mtcurator.corpus import Corpus
from mtcurator.curation import (
    build_sft_instances,
    emit_sft_dataset,
    extract_source_text,
    filter_by_perplexity,
    kd_translate,
    polish_references,
    render_prompt,
    write_removal_manifest,
)
from mtcurator.errors import JobAborted, ValidationError
from mtcurator.inference import InferenceClient

from .helpers import chat_fixture_entry, make_config, simple_corpus, simple_record, write_jsonl

GOLDEN = Path(__file__).parent / "data" / "golden"


@pytest.mark.parametrize(
    "name,variant,src,tgt,source_text,target_text",
    [
        ("direct_en_zh.txt", "direct", "en", "zh", "The cat sat on the mat.", None),
        ("specified_en_zh.txt", "specified", "en", "zh", "The cat sat on the mat.", None),
        ("polishing_en_zh.txt", "polishing", "en", "zh", "The cat sat on the mat.", "猫坐在垫子上。"),
        ("direct_de_en.txt", "direct", "de", "en", "Guten Morgen, Welt.", None),
        ("specified_de_en.txt", "specified", "de", "en", "Guten Morgen, Welt.", None),
        ("polishing_de_en.txt", "polishing", "de", "en", "Guten Morgen, Welt.", "Good morning, world."),
    ],
)
def test_prompts_match_golden_files(name, variant, src, tgt, source_text, target_text):
    rendered = render_prompt(variant, src, tgt, source_text, target_text)
    assert rendered.encode("utf-8") == (GOLDEN / name).read_bytes()


def test_render_prompt_accepts_display_names():
    by_code = render_prompt("direct", "en", "zh", "Hello")
    by_name = render_prompt("direct", "English", "Chinese", "Hello")
    assert by_code == by_name
    assert by_code.startswith("Please translate the following English text to Chinese.")


def test_render_prompt_polishing_includes_original():
    rendered = render_prompt("polishing", "de", "en", "src", "tgt text")
    assert "### Original Translation: tgt text" in rendered


def test_render_prompt_parameter_errors():
    with pytest.raises(ValidationError):
        render_prompt("direct", "en", "zh", "Hello", "unexpected target")
    with pytest.raises(ValidationError):
        render_prompt("polishing", "en", "zh", "Hello")
    with pytest.raises(ValidationError):
        render_prompt("direct", "qq", "zh", "Hello")
    with pytest.raises(ValidationError):
        render_prompt("reference", "en", "zh", "Hello")


@settings(max_examples=50, deadline=None)
@given(st.text(min_size=1))
def test_prompt_source_round_trip(source_text):
    rendered = render_prompt("direct", "en", "zh", source_text)
    assert extract_source_text(rendered) == source_text


def polish_fixture(tmp_path, config, corpus, reply_for, skip=()):
    entries = []
    for rec in corpus:
        if rec.id in skip:
            continue
        ref = rec.translation(variant="reference")
        prompt = render_prompt(
            "polishing",
            rec.direction.source_lang,
            rec.direction.target_lang,
            rec.source_text,
            ref.text,
        )
        entries.append(chat_fixture_entry(config, [("user", prompt)], reply_for(rec)))
    path = tmp_path / "polish_replay.jsonl"
    write_jsonl(path, entries)
    return path


def test_polish_replaces_reference_and_keeps_original(tmp_path):
    corpus = simple_corpus(4)
    config = make_config()
    fixture = polish_fixture(tmp_path, config, corpus, lambda rec: f"polished-{rec.id}")
    client = InferenceClient.with_replay(config, fixture)
    polished, summary = polish_references(corpus, client)
    assert summary.total == 4 and summary.succeeded == 4 and not summary.failed_ids
    for rec in polished:
        assert rec.translation(variant="reference").text == f"polished-{rec.id}"
        assert rec.translation(variant="reference-original").text == "你好世界。"


def test_polish_is_deterministic_under_replay(tmp_path):
    corpus = simple_corpus(3)
    config = make_config()
    fixture = polish_fixture(tmp_path, config, corpus, lambda rec: f"p-{rec.id}")
    first, _ = polish_references(corpus, InferenceClient.with_replay(config, fixture))
    second, _ = polish_references(corpus, InferenceClient.with_replay(config, fixture))
    assert [r.translations for r in first] == [r.translations for r in second]


def test_polish_tolerates_failures_under_threshold(tmp_path):
    corpus = simple_corpus(20)
    config = make_config()
    fixture = polish_fixture(tmp_path, config, corpus, lambda rec: f"p-{rec.id}", skip={"rec-007"})
    polished, summary = polish_references(corpus, InferenceClient.with_replay(config, fixture))
    assert summary.failed_ids == ["rec-007"]
    assert summary.failure_rate == pytest.approx(0.05)
    # the failed record keeps its original reference, unpolished
    kept = polished.get("rec-007")
    assert kept.translation(variant="reference").text == "你好世界。"
    assert not kept.has_translation(variant="reference-original")


def test_polish_aborts_above_threshold(tmp_path):
    corpus = simple_corpus(20)
    config = make_config()
    fixture = polish_fixture(
        tmp_path, config, corpus, lambda rec: f"p-{rec.id}", skip={"rec-003", "rec-011"}
    )
    with pytest.raises(JobAborted, match="10.0%"):
        polish_references(corpus, InferenceClient.with_replay(config, fixture))


def test_polish_requires_references(tmp_path):
    corpus = Corpus([simple_record("r1", translations=(("mt", "direct", "x"),))])
    (tmp_path / "none.jsonl").write_text("", encoding="utf-8")
    client = InferenceClient.with_replay(make_config(), tmp_path / "none.jsonl")
    with pytest.raises(ValidationError, match="no reference translation"):
        polish_references(corpus, client)


def kd_fixture(tmp_path, config, corpus, reply_for):
    entries = []
    for rec in corpus:
        prompt = render_prompt(
            "direct", rec.direction.source_lang, rec.direction.target_lang, rec.source_text
        )
        entries.append(chat_fixture_entry(config, [("user", prompt)], reply_for(rec)))
    path = tmp_path / "kd_replay.jsonl"
    write_jsonl(path, entries)
    return path


def test_kd_adds_teacher_system(tmp_path):
    corpus = simple_corpus(3)
    config = make_config()
    fixture = kd_fixture(tmp_path, config, corpus, lambda rec: f"kd-{rec.id}")
    result, summary = kd_translate(corpus, InferenceClient.with_replay(config, fixture))
    assert summary.succeeded == 3
    for rec in result:
        kd_translation = rec.translation(system_id="kd")
        assert (kd_translation.variant, kd_translation.text) == ("direct", f"kd-{rec.id}")


def test_kd_refuses_to_overwrite_without_force(tmp_path):
    corpus = Corpus(
        [simple_record("r1", translations=(("gold", "reference", "x"), ("kd", "direct", "old")))]
    )
    config = make_config()
    fixture = kd_fixture(tmp_path, config, corpus, lambda rec: "new")
    client = InferenceClient.with_replay(config, fixture)
    with pytest.raises(ValidationError, match="already present"):
        kd_translate(corpus, client)
    result, _ = kd_translate(corpus, client, force=True)
    assert result.get("r1").translation(system_id="kd").text == "new"


def test_kd_empty_corpus(tmp_path):
    (tmp_path / "empty.jsonl").write_text("", encoding="utf-8")
    client = InferenceClient.with_replay(make_config(), tmp_path / "empty.jsonl")
    with pytest.raises(ValidationError, match="empty corpus"):
        kd_translate(Corpus([]), client)


def ppl_corpus(ppls: dict[str, float], direction="en-zh") -> Corpus:
    return Corpus(
        [
            simple_record(rid, direction=direction, translations=(("gold", "reference", "text"),))
            for rid in ppls
        ]
    )


def test_filter_removes_top_perplexities():
    ppls = {f"r{i:02d}": float(i) for i in range(1, 11)}
    result = filter_by_perplexity(ppl_corpus(ppls), ppls, 0.2)
    assert sorted(e.record_id for e in result.removed) == ["r09", "r10"]
    assert [e.rank for e in sorted(result.removed, key=lambda e: e.rank)] == [1, 2]
    assert len(result.retained) == 8


def test_filter_zero_proportion_is_identity():
    ppls = {"a": 1.0, "b": 2.0}
    result = filter_by_perplexity(ppl_corpus(ppls), ppls, 0.0)
    assert result.removed == []
    assert [r.id for r in result.retained] == ["a", "b"]


def test_filter_tie_break_removes_smaller_id():
    # two records tied at the cut with one removal slot
    ppls = {"beta": 5.0, "alpha": 5.0, "zeta": 1.0, "eta": 0.5}
    result = filter_by_perplexity(ppl_corpus(ppls), ppls, 0.25)
    assert [e.record_id for e in result.removed] == ["alpha"]


def test_filter_missing_ppl_errors():
    corpus = ppl_corpus({"a": 1.0, "b": 2.0})
    with pytest.raises(ValidationError, match="lack a perplexity"):
        filter_by_perplexity(corpus, {"a": 1.0}, 0.1)


def test_filter_respects_direction_boundaries():
    zh = {f"z{i}": float(i) for i in range(10)}
    de = {f"d{i}": 100.0 + i for i in range(10)}
    records = [simple_record(rid) for rid in zh]
    records += [
        simple_record(rid, direction="de-en", translations=(("gold", "reference", "x"),))
        for rid in de
    ]
    result = filter_by_perplexity(Corpus(records), {**zh, **de}, 0.2)
    removed_by_dir = {}
    for e in result.removed:
        removed_by_dir.setdefault(e.direction, []).append(e.record_id)
    # two removed per direction, not four from the globally-highest direction
    assert sorted(removed_by_dir["en-zh"]) == ["z8", "z9"]
    assert sorted(removed_by_dir["de-en"]) == ["d8", "d9"]


def test_filter_nested_removals_property():
    ppls = {f"r{i:03d}": float((i * 37) % 101) for i in range(60)}
    corpus = ppl_corpus(ppls)
    removed_sets = []
    for p in (0.1, 0.25, 0.4):
        result = filter_by_perplexity(corpus, ppls, p)
        removed_sets.append({e.record_id for e in result.removed})
        assert len(removed_sets[-1]) == math.floor(p * 60)
    assert removed_sets[0] <= removed_sets[1] <= removed_sets[2]


def test_removal_manifest_format(tmp_path):
    ppls = {"a": 3.0, "b": 9.0}
    result = filter_by_perplexity(ppl_corpus(ppls), ppls, 0.5)
    path = tmp_path / "removed.csv"
    write_removal_manifest(result.removed, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "record_id,direction,ppl,rank"
    assert lines[1] == "b,en-zh,9.0,1"


def test_emit_sft_dataset_deterministic(tmp_path):
    corpus = simple_corpus(3)
    first = tmp_path / "sft1.jsonl"
    second = tmp_path / "sft2.jsonl"
    n = emit_sft_dataset(corpus, "reference", first, tmp_path / "cfg1.txt")
    emit_sft_dataset(corpus, "reference", second, tmp_path / "cfg2.txt")
    assert n == 3
    assert first.read_bytes() == second.read_bytes()
    lines = [json.loads(line) for line in first.read_text(encoding="utf-8").splitlines()]
    assert [obj["id"] for obj in lines] == ["rec-000", "rec-001", "rec-002"]
    assert all(obj["direction"] == "en-zh" for obj in lines)
    assert lines[0]["prompt"].startswith("Please translate the following English text to Chinese.")
    assert lines[0]["completion"] == "你好世界。"


def test_emit_sft_training_config_contents(tmp_path):
    corpus = simple_corpus(1)
    config_path = tmp_path / "training_config.txt"
    emit_sft_dataset(corpus, "reference", tmp_path / "sft.jsonl", config_path)
    content = config_path.read_text(encoding="utf-8")
    assert "lora_rank=16" in content
    assert "learning_rate=0.0001" in content
    assert "warmup_ratio=0.1" in content
    assert "epochs=3" in content
    assert "batch_size=16" in content


def test_emit_sft_missing_variant_names_record():
    records = [
        simple_record("ok", translations=(("gold", "reference", "x"), ("gold", "polishing", "y"))),
        simple_record("broken", translations=(("gold", "reference", "x"),)),
    ]
    with pytest.raises(ValidationError, match="broken"):
        build_sft_instances(Corpus(records), "polishing")


def test_emit_sft_ambiguous_variant_requires_system():
    record = simple_record(
        "r1", translations=(("mt-a", "direct", "x"), ("mt-b", "direct", "y"))
    )
    with pytest.raises(ValidationError, match="ambiguous"):
        build_sft_instances(Corpus([record]), "direct")
    instances = build_sft_instances(Corpus([record]), "direct", system_id="mt-b")
    assert instances[0].completion_text == "y"
