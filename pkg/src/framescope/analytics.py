"""Entity-conditioned frame-distribution analysis over corpus-scale predictions.

Tracked entities are defined by reviewed regex variant lists (word-boundary
anchored, case-insensitive). Each entity's matched chunks yield a frame
distribution, optionally judged against expected real-world frame
associations.
"""
from __future__ import annotations

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import ChunkRecord
from .frames import FRAMES, Frame, parse_frame


@dataclass(frozen=True)
class EntityPattern:
    """A tracked entity: canonical name, regex variants, expected frames."""

    canonical: str
    regexes: tuple[str, ...]
    expected_dominant_frames: frozenset[Frame] = frozenset()

    def __post_init__(self):
        if not self.regexes:
            raise ValueError(f"entity {self.canonical!r} needs at least one pattern")
        for pattern in self.regexes:
            re.compile(pattern)

    def compiled(self) -> list[re.Pattern]:
        # Word-boundary anchoring keeps "us" from matching inside "useless".
        return [re.compile(rf"\b(?:{p})\b", re.IGNORECASE) for p in self.regexes]


def load_patterns(path: str | Path | None = None) -> list[EntityPattern]:
    """Load tracked-entity patterns from JSON (default: packaged asset)."""
    if path is None:
        text = resources.files("framescope.assets").joinpath("entity_patterns.json").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    payload = json.loads(text)
    patterns = []
    for item in payload["entities"]:
        patterns.append(
            EntityPattern(
                canonical=item["canonical"],
                regexes=tuple(item["patterns"]),
                expected_dominant_frames=frozenset(parse_frame(f) for f in item.get("expected_frames", [])),
            )
        )
    return patterns


def patterns_hash(patterns: Sequence[EntityPattern]) -> str:
    basis = json.dumps(
        [[p.canonical, list(p.regexes), sorted(f.value for f in p.expected_dominant_frames)] for p in patterns],
        sort_keys=True,
    )
    return hashlib.sha256(basis.encode("utf-8")).hexdigest()[:12]


def match_chunks(chunks: Iterable[ChunkRecord], pattern: EntityPattern) -> set[str]:
    """Chunk ids whose text matches any of the entity's variant regexes."""
    compiled = pattern.compiled()
    return {c.chunk_id for c in chunks if any(rx.search(c.text) for rx in compiled)}


@dataclass
class FrameDistribution:
    entity: str
    chunk_count: int
    proportions: dict[Frame, float]

    @property
    def dominant(self) -> tuple[Frame, ...]:
        """Argmax frames (more than one only on an exact tie)."""
        if self.chunk_count == 0:
            return ()
        top = max(self.proportions.values())
        return tuple(f for f in FRAMES if self.proportions[f] == top)

    def ranked(self) -> list[tuple[Frame, float]]:
        return sorted(self.proportions.items(), key=lambda kv: (-kv[1], FRAMES.index(kv[0])))

    def to_json(self) -> dict:
        return {
            "entity": self.entity,
            "chunk_count": self.chunk_count,
            "proportions": {f.value: self.proportions[f] for f in FRAMES},
        }


def frame_distribution(frame_labels: Iterable[Frame | str], entity: str = "") -> FrameDistribution:
    """Normalized frame proportions over one entity's matched chunks."""
    counts: Counter = Counter()
    total = 0
    for label in frame_labels:
        frame = label if isinstance(label, Frame) else parse_frame(label)
        counts[frame] += 1
        total += 1
    if total == 0:
        proportions = {f: 0.0 for f in FRAMES}
    else:
        proportions = {f: counts.get(f, 0) / total for f in FRAMES}
    return FrameDistribution(entity=entity, chunk_count=total, proportions=proportions)


@dataclass
class PlausibilityRow:
    entity: str
    dominant_frame: Frame | None
    expected: frozenset[Frame]
    status: str  # pass | flag | unassessed
    note: str = ""


def plausibility_report(
    distributions: Sequence[FrameDistribution],
    expectations: Mapping[str, frozenset[Frame]] | None = None,
) -> list[PlausibilityRow]:
    """Judge each entity's dominant frame against its expected frame set.

    Ties are flagged; entities without stated expectations are listed
    unassessed. When the runner-up frame also belongs to the expected set it
    is noted alongside the pass.
    """
    rows = []
    for dist in distributions:
        expected = (expectations or {}).get(dist.entity, frozenset())
        dominant = dist.dominant
        if dist.chunk_count == 0:
            rows.append(PlausibilityRow(dist.entity, None, expected, "flag", "no matched chunks"))
            continue
        if len(dominant) > 1:
            tied = ", ".join(f.value for f in dominant)
            rows.append(PlausibilityRow(dist.entity, None, expected, "flag", f"tied dominant frames: {tied}"))
            continue
        top = dominant[0]
        if not expected:
            rows.append(PlausibilityRow(dist.entity, top, expected, "unassessed"))
            continue
        if top in expected:
            note = ""
            ranked = dist.ranked()
            if len(ranked) > 1:
                runner, share = ranked[1]
                if runner in expected and share > 0:
                    note = f"secondary frame {runner.value} ({share:.0%})"
            rows.append(PlausibilityRow(dist.entity, top, expected, "pass", note))
        else:
            expected_names = ", ".join(sorted(f.value for f in expected))
            rows.append(
                PlausibilityRow(dist.entity, top, expected, "flag", f"dominant {top.value} not in {{{expected_names}}}")
            )
    return rows


def analyze_entities(
    chunks: Sequence[ChunkRecord],
    predictions: Mapping[str, Frame],
    patterns: Sequence[EntityPattern],
) -> tuple[list[FrameDistribution], list[PlausibilityRow]]:
    """Match, aggregate, and judge every tracked entity in one pass."""
    distributions = []
    expectations: dict[str, frozenset[Frame]] = {}
    for pattern in patterns:
        matched = match_chunks(chunks, pattern)
        labels = [predictions[cid] for cid in sorted(matched) if cid in predictions]
        distributions.append(frame_distribution(labels, entity=pattern.canonical))
        if pattern.expected_dominant_frames:
            expectations[pattern.canonical] = pattern.expected_dominant_frames
    return distributions, plausibility_report(distributions, expectations)


def write_distributions_tsv(distributions: Sequence[FrameDistribution], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("entity\tchunk_count\t" + "\t".join(f.value for f in FRAMES) + "\n")
        for dist in distributions:
            shares = "\t".join(f"{dist.proportions[f]:.4f}" for f in FRAMES)
            fh.write(f"{dist.entity}\t{dist.chunk_count}\t{shares}\n")


def write_plausibility_markdown(
    rows: Sequence[PlausibilityRow],
    path: str | Path,
    config_hash: str = "",
) -> None:
    lines = ["# Entity frame plausibility", ""]
    if config_hash:
        lines.append(f"Pattern config hash: `{config_hash}`")
        lines.append("")
    lines.append("| entity | dominant frame | expected | status | note |")
    lines.append("|---|---|---|---|---|")
    for row in rows:
        dominant = row.dominant_frame.value if row.dominant_frame else "-"
        expected = ", ".join(sorted(f.value for f in row.expected)) or "-"
        lines.append(f"| {row.entity} | {dominant} | {expected} | {row.status} | {row.note} |")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
