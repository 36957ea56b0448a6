"""Line-delimited gold-annotation records.

This is the contract between the annotation service's export and the
trainer's input: one JSON object per line with `chunk_id`, `text`, `frame`,
and `key_phrases` (each a text plus character span). Serialization is
canonical (sorted keys, compact separators) so exports are byte-stable.
See docs/formats.md.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .frames import Frame, parse_frame


@dataclass(frozen=True)
class KeyPhrase:
    text: str
    start: int
    end: int


@dataclass(frozen=True)
class GoldRecord:
    chunk_id: str
    text: str
    frame: Frame
    key_phrases: tuple[KeyPhrase, ...]


def gold_record_to_json(record: GoldRecord) -> dict:
    return {
        "chunk_id": record.chunk_id,
        "text": record.text,
        "frame": record.frame.value,
        "key_phrases": [{"text": p.text, "start": p.start, "end": p.end} for p in record.key_phrases],
    }


def gold_record_to_line(record: GoldRecord) -> str:
    return json.dumps(gold_record_to_json(record), ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def gold_record_from_json(obj: dict) -> GoldRecord:
    phrases = tuple(
        KeyPhrase(text=p["text"], start=int(p["start"]), end=int(p["end"]))
        for p in obj.get("key_phrases", [])
    )
    return GoldRecord(
        chunk_id=obj["chunk_id"],
        text=obj["text"],
        frame=parse_frame(obj["frame"]),
        key_phrases=phrases,
    )


def load_gold(path: str | Path) -> list[GoldRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(gold_record_from_json(json.loads(line)))
    return records


def write_gold(records: Iterable[GoldRecord], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(gold_record_to_line(record) + "\n")
            n += 1
    return n
