from __future__ import annotations

import json

from click.testing import CliRunner

from framescope.cli import main
from framescope.corpus import write_episodes
from framescope.synth import synth_corpus


def run(args):
    result = CliRunner().invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def test_ingest_chunk_filter_entities_roundtrip(tmp_path):
    episodes = synth_corpus(n_titles=6, episodes_per_title=(4, 8), seed=3)
    raw = tmp_path / "raw.jsonl"
    with open(raw, "w", encoding="utf-8") as fh:
        for ep in episodes:
            obj = ep.to_json()
            del obj["episodeId"]  # exercise derived ids
            fh.write(json.dumps(obj) + "\n")

    run(["ingest", "--in", str(raw), "--out", str(tmp_path / "ingested")])
    assert (tmp_path / "ingested" / "episodes.jsonl").exists()
    stats = json.loads((tmp_path / "ingested" / "ingest_stats.json").read_text())
    assert stats["accepted"] == len(episodes)

    run(
        [
            "filter",
            "--in",
            str(tmp_path / "ingested" / "episodes.jsonl"),
            "--out",
            str(tmp_path / "filtered"),
            "--min-episodes",
            "2",
            "--min-duration",
            "0",
            "--cap",
            "10",
            "--seed",
            "5",
        ]
    )
    report = json.loads((tmp_path / "filtered" / "filter_report.json").read_text())
    assert [s["name"] for s in report["stages"]] == [
        "cadence_and_volume",
        "min_duration",
        "top_categories",
        "cap_per_title",
        "stratified_sample",
    ]

    run(["chunk", "--in", str(tmp_path / "filtered" / "episodes.jsonl"), "--out", str(tmp_path / "chunks.jsonl"), "--size", "100"])
    assert (tmp_path / "chunks.jsonl").exists()

    run(
        [
            "entities",
            "--chunks",
            str(tmp_path / "chunks.jsonl"),
            "--episodes",
            str(tmp_path / "filtered" / "episodes.jsonl"),
            "--out",
            str(tmp_path / "ents"),
            "--timeseries",
            "covid",
        ]
    )
    header = (tmp_path / "ents" / "entities.tsv").read_text().splitlines()[0]
    assert header == "entity\ttype\tpagerank\traw_count"
    assert (tmp_path / "ents" / "timeseries" / "covid.tsv").exists()


def test_prompt_features_analyze(tmp_path):
    episodes = synth_corpus(n_titles=3, episodes_per_title=(2, 3), seed=8)
    eps_path = tmp_path / "episodes.jsonl"
    write_episodes(episodes, eps_path)
    run(["chunk", "--in", str(eps_path), "--out", str(tmp_path / "chunks.jsonl"), "--size", "120"])
    run(["prompt", "--chunks", str(tmp_path / "chunks.jsonl"), "--out", str(tmp_path / "preds.jsonl")])
    lines = (tmp_path / "preds.jsonl").read_text().splitlines()
    assert lines
    first = json.loads(lines[0])
    assert {"chunk_id", "frame", "key_phrases", "parse_status", "verdicts", "template_hash"} <= set(first)

    run(["features", "--chunks", str(tmp_path / "chunks.jsonl"), "--out", str(tmp_path / "features.tsv")])
    assert (tmp_path / "features.tsv").read_text().startswith("chunk_id\ttoxicity")
