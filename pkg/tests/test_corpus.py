from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framescope.corpus import (
    EmptyTranscriptError,
    IngestStats,
    RecordError,
    chunk_transcript,
    load_episodes,
    parse_episode,
    read_chunks,
    write_chunks,
)
from framescope.text import normalize_text

FULL_RECORD = {
    "transcript": "hello world this is a show",
    "podTitle": "My Show",
    "epTitle": "Pilot",
    "durationSeconds": 1800,
    "episodeDate": "2020-05-03",
    "categories": ["news", "comedy"],
}


def test_load_full_record_round_trips_values():
    stats = IngestStats()
    eps = list(load_episodes([json.dumps(FULL_RECORD)], stats=stats))
    assert len(eps) == 1
    ep = eps[0]
    assert ep.pod_title == "My Show"
    assert ep.ep_title == "Pilot"
    assert ep.duration_seconds == 1800
    assert ep.episode_date.isoformat() == "2020-05-03"
    assert ep.categories == ("news", "comedy")
    assert ep.transcript == "hello world this is a show"
    assert stats.accepted == 1 and stats.rejected_count == 0


def test_empty_stream():
    stats = IngestStats()
    assert list(load_episodes([], stats=stats)) == []
    assert stats.accepted == 0 and stats.rejected_count == 0


def test_missing_transcript_rejected_with_reason():
    record = {k: v for k, v in FULL_RECORD.items() if k != "transcript"}
    stats = IngestStats()
    assert list(load_episodes([json.dumps(record)], stats=stats)) == []
    assert stats.rejected == [(1, "missing field: transcript")]


def test_strict_mode_aborts():
    record = {k: v for k, v in FULL_RECORD.items() if k != "transcript"}
    with pytest.raises(RecordError, match="missing field: transcript"):
        list(load_episodes([json.dumps(record)], strict=True))


def test_invalid_json_line_skipped():
    stats = IngestStats()
    eps = list(load_episodes(["{nope", json.dumps(FULL_RECORD)], stats=stats))
    assert len(eps) == 1
    assert stats.rejected == [(1, "invalid JSON")]


def test_duplicate_episode_id_rejected():
    line = json.dumps({**FULL_RECORD, "episodeId": "x1"})
    stats = IngestStats()
    eps = list(load_episodes([line, line], stats=stats))
    assert len(eps) == 1
    assert stats.rejected_count == 1 and "duplicate" in stats.rejected[0][1]


def test_derived_ids_are_stable():
    a = parse_episode(dict(FULL_RECORD))
    b = parse_episode(dict(FULL_RECORD))
    assert a.episode_id == b.episode_id


def test_episode_invariants():
    with pytest.raises(RecordError):
        parse_episode({**FULL_RECORD, "durationSeconds": -5})
    with pytest.raises(RecordError):
        parse_episode({**FULL_RECORD, "categories": []})
    with pytest.raises(RecordError):
        parse_episode({**FULL_RECORD, "categories": [str(i) for i in range(11)]})


def test_chunk_exact_multiple():
    transcript = " ".join(f"w{i}" for i in range(500))
    chunks = chunk_transcript(transcript, 250, episode_id="e1")
    assert [c.token_count for c in chunks] == [250, 250]
    assert [c.chunk_id for c in chunks] == ["e1:0000", "e1:0001"]


def test_chunk_remainder():
    transcript = " ".join(f"w{i}" for i in range(600))
    chunks = chunk_transcript(transcript, 250, episode_id="e1")
    assert [c.token_count for c in chunks] == [250, 250, 100]


def test_chunk_offsets_index_normalized_text():
    transcript = "  a\tb\n\nc   d e  "
    chunks = chunk_transcript(transcript, 2, episode_id="e1")
    normalized = normalize_text(transcript)
    for c in chunks:
        assert normalized[c.char_start : c.char_end] == c.text


def test_whitespace_only_transcript():
    with pytest.raises(EmptyTranscriptError):
        chunk_transcript(" \t\n ")


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.text(alphabet="abcxyz0", min_size=1, max_size=8), min_size=1, max_size=200),
    st.integers(min_value=1, max_value=60),
)
def test_chunk_round_trip_property(words, size):
    transcript = " ".join(words)
    normalized = normalize_text(transcript)
    chunks = chunk_transcript(transcript, size, episode_id="e")
    assert " ".join(c.text for c in chunks) == normalized
    assert sum(c.token_count for c in chunks) == len(normalized.split())
    assert all(c.token_count == size for c in chunks[:-1])
    assert 1 <= chunks[-1].token_count <= size
    # contiguity and non-overlap
    for left, right in zip(chunks, chunks[1:]):
        assert left.char_end < right.char_start


def test_chunk_determinism():
    transcript = " ".join(f"tok{i}" for i in range(123))
    a = chunk_transcript(transcript, 25, episode_id="e9")
    b = chunk_transcript(transcript, 25, episode_id="e9")
    assert a == b


def test_chunk_store_round_trip(tmp_path):
    chunks = chunk_transcript(" ".join(f"w{i}" for i in range(90)), 40, episode_id="e2")
    path = tmp_path / "chunks.jsonl"
    assert write_chunks(chunks, path) == 3
    assert read_chunks(path) == chunks
