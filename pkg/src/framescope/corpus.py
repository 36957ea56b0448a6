"""Episode ingestion and fixed-size transcript chunking.

Input records are line-delimited JSON with the upstream column names
(`transcript`, `podTitle`, `epTitle`, `durationSeconds`, `episodeDate`,
`categories`). A record may carry an explicit `episodeId`; otherwise a
stable id is derived from the record content so re-ingestion of the same
bytes yields the same ids.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterable, Iterator

from .text import Token, normalize_text, tokenize_with_offsets

MAX_CATEGORIES = 10
DEFAULT_CHUNK_SIZE = 250

REQUIRED_FIELDS = ("transcript", "podTitle", "epTitle", "durationSeconds", "episodeDate", "categories")


class CorpusError(Exception):
    """Base error for ingestion and chunking failures."""


class RecordError(CorpusError):
    """A single input record is malformed."""


class EmptyTranscriptError(CorpusError):
    """Transcript is empty after whitespace normalization."""


@dataclass(frozen=True)
class EpisodeRecord:
    """One podcast episode. `transcript` is stored in normalized form."""

    episode_id: str
    pod_title: str
    ep_title: str
    episode_date: date
    duration_seconds: int
    categories: tuple[str, ...]
    transcript: str

    def __post_init__(self) -> None:
        if self.duration_seconds < 0:
            raise RecordError("durationSeconds must be >= 0")
        if not 1 <= len(self.categories) <= MAX_CATEGORIES:
            raise RecordError(f"categories must list 1..{MAX_CATEGORIES} entries")
        if not self.transcript:
            raise RecordError("empty transcript")

    @property
    def primary_category(self) -> str:
        return self.categories[0]

    def to_json(self) -> dict:
        return {
            "episodeId": self.episode_id,
            "podTitle": self.pod_title,
            "epTitle": self.ep_title,
            "episodeDate": self.episode_date.isoformat(),
            "durationSeconds": self.duration_seconds,
            "categories": list(self.categories),
            "transcript": self.transcript,
        }


@dataclass(frozen=True)
class ChunkRecord:
    """A fixed-size token window of one episode's normalized transcript."""

    chunk_id: str
    episode_id: str
    index: int
    text: str
    token_count: int
    char_start: int
    char_end: int

    def to_json(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "episode_id": self.episode_id,
            "index": self.index,
            "text": self.text,
            "token_count": self.token_count,
            "char_start": self.char_start,
            "char_end": self.char_end,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChunkRecord":
        return cls(
            chunk_id=obj["chunk_id"],
            episode_id=obj["episode_id"],
            index=int(obj["index"]),
            text=obj["text"],
            token_count=int(obj["token_count"]),
            char_start=int(obj["char_start"]),
            char_end=int(obj["char_end"]),
        )


@dataclass
class IngestStats:
    """Accepted/rejected tallies for one ingestion pass."""

    accepted: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)

    @property
    def rejected_count(self) -> int:
        return len(self.rejected)

    def to_json(self) -> dict:
        return {
            "accepted": self.accepted,
            "rejected": [{"line": n, "reason": r} for n, r in self.rejected],
        }


def _derive_episode_id(obj: dict) -> str:
    basis = chr(31).join(
        [
            str(obj.get("podTitle", "")),
            str(obj.get("epTitle", "")),
            str(obj.get("episodeDate", "")),
            hashlib.sha1(str(obj.get("transcript", "")).encode("utf-8")).hexdigest(),
        ]
    )
    return hashlib.sha1(basis.encode("utf-8")).hexdigest()[:16]


def parse_episode(obj: dict) -> EpisodeRecord:
    """Validate one decoded record object against the input schema."""
    for name in REQUIRED_FIELDS:
        if name not in obj:
            raise RecordError(f"missing field: {name}")
    transcript = normalize_text(str(obj["transcript"]))
    if not transcript:
        raise RecordError("empty transcript")
    try:
        episode_date = date.fromisoformat(str(obj["episodeDate"])[:10])
    except ValueError:
        raise RecordError(f"bad episodeDate: {obj['episodeDate']!r}") from None
    try:
        duration = int(obj["durationSeconds"])
    except (TypeError, ValueError):
        raise RecordError(f"bad durationSeconds: {obj['durationSeconds']!r}") from None
    categories = obj["categories"]
    if not isinstance(categories, (list, tuple)):
        raise RecordError("categories must be a list")
    episode_id = str(obj.get("episodeId") or obj.get("episode_id") or _derive_episode_id(obj))
    return EpisodeRecord(
        episode_id=episode_id,
        pod_title=str(obj["podTitle"]),
        ep_title=str(obj["epTitle"]),
        episode_date=episode_date,
        duration_seconds=duration,
        categories=tuple(str(c) for c in categories),
        transcript=transcript,
    )


def load_episodes(
    source: Iterable[str] | str | Path,
    *,
    strict: bool = False,
    stats: IngestStats | None = None,
) -> Iterator[EpisodeRecord]:
    """Stream validated episodes from line-delimited JSON.

    Malformed lines are recorded in `stats` and skipped; in strict mode the
    first malformed line aborts the stream. Duplicate episode ids within one
    pass are rejected.
    """
    if isinstance(source, (str, Path)):
        source = Path(source).read_text(encoding="utf-8").splitlines()
    if stats is None:
        stats = IngestStats()
    seen: set[str] = set()
    for line_no, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError:
            if strict:
                raise RecordError(f"line {line_no}: invalid JSON")
            stats.rejected.append((line_no, "invalid JSON"))
            continue
        try:
            record = parse_episode(obj)
            if record.episode_id in seen:
                raise RecordError(f"duplicate episode_id: {record.episode_id}")
        except RecordError as exc:
            if strict:
                raise RecordError(f"line {line_no}: {exc}") from None
            stats.rejected.append((line_no, str(exc)))
            continue
        seen.add(record.episode_id)
        stats.accepted += 1
        yield record


def write_episodes(episodes: Iterable[EpisodeRecord], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for ep in episodes:
            fh.write(json.dumps(ep.to_json(), ensure_ascii=False) + "\n")
            n += 1
    return n


def make_chunk_id(episode_id: str, index: int) -> str:
    return f"{episode_id}:{index:04d}"


def chunk_transcript(
    transcript: str,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    *,
    episode_id: str = "",
) -> list[ChunkRecord]:
    """Greedy left-to-right packing of whitespace tokens into fixed-size chunks.

    Offsets index into the normalized transcript. Every chunk holds exactly
    `chunk_size` tokens except possibly the last.
    """
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    normalized = normalize_text(transcript)
    if not normalized:
        raise EmptyTranscriptError("transcript is empty after normalization")
    tokens = tokenize_with_offsets(normalized)
    chunks: list[ChunkRecord] = []
    for index, at in enumerate(range(0, len(tokens), chunk_size)):
        group: list[Token] = tokens[at : at + chunk_size]
        start, end = group[0].start, group[-1].end
        chunks.append(
            ChunkRecord(
                chunk_id=make_chunk_id(episode_id, index),
                episode_id=episode_id,
                index=index,
                text=normalized[start:end],
                token_count=len(group),
                char_start=start,
                char_end=end,
            )
        )
    return chunks


def chunk_episode(episode: EpisodeRecord, chunk_size: int = DEFAULT_CHUNK_SIZE) -> list[ChunkRecord]:
    return chunk_transcript(episode.transcript, chunk_size, episode_id=episode.episode_id)


def write_chunks(chunks: Iterable[ChunkRecord], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for chunk in chunks:
            fh.write(json.dumps(chunk.to_json(), ensure_ascii=False) + "\n")
            n += 1
    return n


def read_chunks(path: str | Path) -> list[ChunkRecord]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(ChunkRecord.from_json(json.loads(line)))
    return out
