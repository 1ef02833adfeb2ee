"""Builder for the 20-record hermetic end-to-end workspace.

Constructs a corpus (10 en-zh documents, 10 de-en sentences), replay
fixtures for every scoring/polishing request, canned tag and quality
tables, and an annotation export — all with hand-designed values so the
pipeline's outputs can be checked against independently-computed numbers.

Design (index i = 0..9 within each direction):

* en-zh: mt-1 token logprobs are constant -(1 + i/10)  -> ppl = e^(1+i/10)
         gold logprobs are constant -(0.5 + i/10)      -> ppl = e^(0.5+i/10)
         mt-1 target tags [NOUN, VERB, DET, PUNCT]     -> lex 2/3, 4 tokens
         gold target tags [NOUN, VERB, ADJ, DET, PUNCT]-> lex 3/4, 5 tokens
         source: 5 tokens                              -> len: mt-1 0.2, gold 0.0
* de-en: mt-1 logprobs -(0.8 + i/20), gold -(0.4 + i/20)
         mt-1/gold target tags [DET, ADJ, NOUN, VERB, PUNCT] -> lex 3/4, 5 tokens
         source: 4 tokens                              -> len 0.25 both
* annotation export covers (record, mt-1): zh texts are 10 chars with
  annotator unions i and i+1 chars -> mean TSR (2i+1)/30; en texts get
  unions 2i and i -> mean TSR 3i/(3*len(text)).
* every (source, translation) quality pair scores 0.8.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from mtcurator.inference import EndpointConfig

from .helpers import chat_fixture_entry, score_fixture_entry, write_jsonl

MODEL = "scorer-1"
REPLAY_URL = "http://replay.invalid/v1"


def zh_text(i: int) -> str:
    return f"译文{i:02d}系统优秀好。"  # 10 unicode scalars


def zh_gold(i: int) -> str:
    return f"参考{i:02d}译文好棒。"


def en_text(i: int) -> str:
    return f"The quick fox {i} jumps over."


def en_gold(i: int) -> str:
    return f"A fast fox {i} leaps."


def en_source(i: int) -> str:
    return f"Fox story number {i} begins."


def de_source(i: int) -> str:
    return f"Fuchsgeschichte {i} beginnt hier."


def polished_text(record_id: str, direction: str) -> str:
    return f"润色后{record_id}。" if direction == "en-zh" else f"Polished {record_id} text."


def mt1_logprob(direction: str, i: int) -> float:
    return -(1.0 + i / 10) if direction == "en-zh" else -(0.8 + i / 20)


def gold_logprob(direction: str, i: int) -> float:
    return -(0.5 + i / 10) if direction == "en-zh" else -(0.4 + i / 20)


def expected_ppl(logprob: float) -> float:
    # constant per-token logprob -l scores to e^l
    return math.exp(-logprob)


def record_rows() -> list[dict]:
    rows = []
    for i in range(10):
        rows.append(
            {
                "id": f"zh{i:02d}",
                "src_lang": "en",
                "tgt_lang": "zh",
                "domain": "news" if i % 2 == 0 else "wiki",
                "granularity": "document",
                "source_text": en_source(i),
                "translations": [
                    {"system": "mt-1", "variant": "direct", "text": zh_text(i)},
                    {"system": "gold", "variant": "reference", "text": zh_gold(i)},
                ],
            }
        )
    for i in range(10):
        rows.append(
            {
                "id": f"de{i:02d}",
                "src_lang": "de",
                "tgt_lang": "en",
                "domain": "forum",
                "granularity": "sentence",
                "source_text": de_source(i),
                "translations": [
                    {"system": "mt-1", "variant": "direct", "text": en_text(i)},
                    {"system": "gold", "variant": "reference", "text": en_gold(i)},
                ],
            }
        )
    return rows


def tag_tables() -> dict:
    en_src_tags = lambda text: [[w, "NOUN"] for w in text.split()]  # noqa: E731
    tables: dict[str, dict[str, list]] = {"en": {}, "zh": {}, "de": {}}
    for i in range(10):
        tables["en"][en_source(i)] = en_src_tags(en_source(i))  # 5 tokens
        tables["zh"][zh_text(i)] = [
            [zh_text(i)[:4], "NOUN"], [zh_text(i)[4:6], "VERB"],
            [zh_text(i)[6:9], "DET"], ["。", "PUNCT"],
        ]
        tables["zh"][zh_gold(i)] = [
            [zh_gold(i)[:2], "NOUN"], [zh_gold(i)[2:4], "VERB"], [zh_gold(i)[4:6], "ADJ"],
            [zh_gold(i)[6:8], "DET"], ["。", "PUNCT"],
        ]
        tables["de"][de_source(i)] = [
            ["Fuchsgeschichte", "NOUN"], [str(i), "NUM"], ["beginnt", "VERB"], ["hier.", "ADV"],
        ]
        for text in (en_text(i), en_gold(i)):
            words = text.split()
            tables["en"][text] = [
                [words[0], "DET"], [words[1], "ADJ"], [words[2], "NOUN"],
                [" ".join(words[3:]), "VERB"], [".", "PUNCT"],
            ]
    return tables


def quality_entries(rows: list[dict]) -> list[dict]:
    entries = []
    for row in rows:
        for t in row["translations"]:
            entries.append({"source": row["source_text"], "translation": t["text"], "score": 0.8})
    return entries


def replay_entries(rows: list[dict]) -> list[dict]:
    from mtcurator.curation import render_prompt

    config = EndpointConfig(base_url=REPLAY_URL, model_id=MODEL)
    entries = []
    for row in rows:
        direction = f"{row['src_lang']}-{row['tgt_lang']}"
        i = int(row["id"][2:])
        for t in row["translations"]:
            logprob = mt1_logprob(direction, i) if t["system"] == "mt-1" else gold_logprob(direction, i)
            tokens = [f"t{k}" for k in range(4)]
            entries.append(
                score_fixture_entry(config, t["text"], tokens, [None, logprob, logprob, logprob])
            )
        reference = next(t for t in row["translations"] if t["variant"] == "reference")
        prompt = render_prompt(
            "polishing", row["src_lang"], row["tgt_lang"], row["source_text"], reference["text"]
        )
        entries.append(
            chat_fixture_entry(config, [("user", prompt)], polished_text(row["id"], direction))
        )
    return entries


def annotation_tasks(rows: list[dict]) -> list[dict]:
    tasks = []
    for row in rows:
        i = int(row["id"][2:])
        text = next(t["text"] for t in row["translations"] if t["system"] == "mt-1")
        if row["tgt_lang"] == "zh":
            spans = {
                "a1": [(0, i, "Unnatural Phrase Flow")] if i else [],
                "a2": [(0, i + 1, "Unnatural Sentence Flow")],
                "a3": [],
            }
        else:
            spans = {
                "a1": [(0, 2 * i, "Unnatural Sentence Flow")] if i else [],
                "a2": [(0, i, "Unnatural Phrase Flow")] if i else [],
                "a3": [],
            }
        tasks.append(
            {
                "data": {"record_id": row["id"], "system_id": "mt-1", "text": text},
                "annotations": [
                    {
                        "completed_by": annotator,
                        "result": [
                            {"value": {"start": s, "end": e, "labels": [label]}}
                            for s, e, label in span_list
                        ],
                    }
                    for annotator, span_list in spans.items()
                ],
            }
        )
    return tasks


def expected_mean_tsr(record_id: str) -> float:
    i = int(record_id[2:])
    if record_id.startswith("zh"):
        return (i + (i + 1)) / (3 * 10)
    return (2 * i + i) / (3 * len(en_text(i)))


def build_workspace(root: Path) -> dict[str, Path]:
    fixtures = root / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    rows = record_rows()

    corpus = fixtures / "corpus.jsonl"
    with corpus.open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, separators=(",", ":")) + "\n")

    tags = fixtures / "tags.json"
    tags.write_text(json.dumps(tag_tables(), ensure_ascii=False), encoding="utf-8")

    quality = fixtures / "quality.json"
    quality.write_text(json.dumps(quality_entries(rows), ensure_ascii=False), encoding="utf-8")

    replay = fixtures / "replay.jsonl"
    write_jsonl(replay, replay_entries(rows))

    export = fixtures / "export.json"
    export.write_text(json.dumps(annotation_tasks(rows), ensure_ascii=False), encoding="utf-8")

    return {
        "corpus": corpus,
        "tags": tags,
        "quality": quality,
        "replay": replay,
        "export": export,
    }
