"""Multi-stage corpus filtering funnel.

Stages shrink the corpus monotonically: posting-cadence/volume screen,
minimum duration, top-category retention, per-title episode cap, and a
final category-stratified sample. Every stage records its counts and
parameters in a FilterReport.

Sampling stages draw from a per-group RNG keyed on (seed, group), so the
retained set is invariant to input ordering.
"""
from __future__ import annotations

import json
import random
import statistics
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from math import floor
from pathlib import Path
from typing import Sequence

from .corpus import EpisodeRecord

DEFAULT_MIN_GAP_DAYS = 0.5
DEFAULT_MIN_EPISODES = 10
DEFAULT_MIN_DURATION_SECONDS = 300
DEFAULT_TOP_CATEGORIES = 50
DEFAULT_CAP_PER_TITLE = 60


@dataclass
class FilterStage:
    name: str
    input_count: int
    output_count: int
    parameters: dict

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "input_count": self.input_count,
            "output_count": self.output_count,
            "parameters": self.parameters,
        }


@dataclass
class FilterReport:
    stages: list[FilterStage] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def record(self, name: str, input_count: int, output_count: int, **parameters) -> None:
        if output_count > input_count:
            raise ValueError(f"stage {name}: output {output_count} exceeds input {input_count}")
        self.stages.append(FilterStage(name, input_count, output_count, dict(parameters)))

    def to_json(self) -> dict:
        return {"stages": [s.to_json() for s in self.stages], "warnings": list(self.warnings)}

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _group_rng(seed: int, stage: str, key: str) -> random.Random:
    # Seeding on a string goes through a stable hash, so results do not
    # depend on iteration order or PYTHONHASHSEED.
    return random.Random(f"{seed}|{stage}|{key}")


def median_gap_days(episodes: Sequence[EpisodeRecord]) -> float | None:
    """Median gap in days between consecutive episode dates; None if < 2 episodes."""
    if len(episodes) < 2:
        return None
    dates = sorted(ep.episode_date for ep in episodes)
    gaps = [(b - a).days for a, b in zip(dates, dates[1:])]
    return float(statistics.median(gaps))


def filter_cadence_and_volume(
    corpus: Sequence[EpisodeRecord],
    min_gap_days: float = DEFAULT_MIN_GAP_DAYS,
    min_episodes: int = DEFAULT_MIN_EPISODES,
) -> list[EpisodeRecord]:
    """Keep titles posting slower than `min_gap_days` (median gap) with enough episodes.

    A single-episode title has no computable gap and is excluded.
    """
    by_title: dict[str, list[EpisodeRecord]] = defaultdict(list)
    for ep in corpus:
        by_title[ep.pod_title].append(ep)
    keep: set[str] = set()
    for title, eps in by_title.items():
        if len(eps) < min_episodes:
            continue
        gap = median_gap_days(eps)
        if gap is not None and gap > min_gap_days:
            keep.add(title)
    return [ep for ep in corpus if ep.pod_title in keep]


def filter_min_duration(corpus: Sequence[EpisodeRecord], min_seconds: int) -> list[EpisodeRecord]:
    return [ep for ep in corpus if ep.duration_seconds >= min_seconds]


def top_categories(corpus: Sequence[EpisodeRecord], k: int) -> list[str]:
    """Categories ranked by episode frequency, ties broken lexicographically."""
    counts = Counter(cat for ep in corpus for cat in ep.categories)
    ranked = sorted(counts, key=lambda c: (-counts[c], c))
    return ranked[:k]


def retain_top_categories(corpus: Sequence[EpisodeRecord], k: int = DEFAULT_TOP_CATEGORIES) -> list[EpisodeRecord]:
    keep = set(top_categories(corpus, k))
    return [ep for ep in corpus if any(cat in keep for cat in ep.categories)]


def cap_episodes_per_title(
    corpus: Sequence[EpisodeRecord],
    cap: int = DEFAULT_CAP_PER_TITLE,
    seed: int = 0,
) -> list[EpisodeRecord]:
    """Uniformly down-sample titles holding more than `cap` episodes to exactly `cap`."""
    by_title: dict[str, list[EpisodeRecord]] = defaultdict(list)
    for ep in corpus:
        by_title[ep.pod_title].append(ep)
    keep_ids: set[str] = set()
    for title, eps in by_title.items():
        if len(eps) <= cap:
            keep_ids.update(ep.episode_id for ep in eps)
        else:
            ordered = sorted(eps, key=lambda ep: ep.episode_id)
            rng = _group_rng(seed, "cap", title)
            keep_ids.update(ep.episode_id for ep in rng.sample(ordered, cap))
    return [ep for ep in corpus if ep.episode_id in keep_ids]


def largest_remainder_allocation(counts: dict[str, int], target: int) -> dict[str, int]:
    """Integer allocation proportional to `counts` summing exactly to `target`."""
    total = sum(counts.values())
    if total == 0:
        return {key: 0 for key in counts}
    exact = {key: target * n / total for key, n in counts.items()}
    alloc = {key: floor(v) for key, v in exact.items()}
    leftover = target - sum(alloc.values())
    by_remainder = sorted(counts, key=lambda key: (-(exact[key] - alloc[key]), key))
    for key in by_remainder[:leftover]:
        alloc[key] += 1
    return alloc


def stratified_sample(
    corpus: Sequence[EpisodeRecord],
    target_size: int,
    seed: int = 0,
    report: FilterReport | None = None,
) -> tuple[list[EpisodeRecord], FilterReport]:
    """Sample proportionally to primary-category counts (largest-remainder rounding).

    Selection within each stratum is uniform under the seed. Asking for more
    than the corpus holds returns the whole corpus with a warning.
    """
    if report is None:
        report = FilterReport()
    if target_size >= len(corpus):
        if target_size > len(corpus):
            report.warnings.append(
                f"target_size {target_size} exceeds corpus size {len(corpus)}; returning whole corpus"
            )
        report.record("stratified_sample", len(corpus), len(corpus), target_size=target_size, seed=seed)
        return list(corpus), report

    strata: dict[str, list[EpisodeRecord]] = defaultdict(list)
    for ep in corpus:
        strata[ep.primary_category].append(ep)
    alloc = largest_remainder_allocation({cat: len(eps) for cat, eps in strata.items()}, target_size)

    keep_ids: set[str] = set()
    for cat, eps in strata.items():
        want = alloc[cat]
        if want <= 0:
            continue
        ordered = sorted(eps, key=lambda ep: ep.episode_id)
        rng = _group_rng(seed, "stratum", cat)
        keep_ids.update(ep.episode_id for ep in rng.sample(ordered, want))
    sampled = [ep for ep in corpus if ep.episode_id in keep_ids]
    report.record("stratified_sample", len(corpus), len(sampled), target_size=target_size, seed=seed)
    return sampled, report


@dataclass
class FilterParams:
    min_gap_days: float = DEFAULT_MIN_GAP_DAYS
    min_episodes: int = DEFAULT_MIN_EPISODES
    min_duration_seconds: int = DEFAULT_MIN_DURATION_SECONDS
    top_categories: int = DEFAULT_TOP_CATEGORIES
    cap_per_title: int = DEFAULT_CAP_PER_TITLE
    target_size: int = 0
    seed: int = 0


def run_filter_pipeline(
    corpus: Sequence[EpisodeRecord],
    params: FilterParams,
) -> tuple[list[EpisodeRecord], FilterReport]:
    """Run the full funnel in order, recording per-stage counts."""
    report = FilterReport()
    stage = list(corpus)

    out = filter_cadence_and_volume(stage, params.min_gap_days, params.min_episodes)
    report.record(
        "cadence_and_volume",
        len(stage),
        len(out),
        min_gap_days=params.min_gap_days,
        min_episodes=params.min_episodes,
    )
    stage = out

    out = filter_min_duration(stage, params.min_duration_seconds)
    report.record("min_duration", len(stage), len(out), min_seconds=params.min_duration_seconds)
    stage = out

    out = retain_top_categories(stage, params.top_categories)
    report.record("top_categories", len(stage), len(out), k=params.top_categories)
    stage = out

    out = cap_episodes_per_title(stage, params.cap_per_title, params.seed)
    report.record("cap_per_title", len(stage), len(out), cap=params.cap_per_title, seed=params.seed)
    stage = out

    target = params.target_size if params.target_size > 0 else len(stage)
    sampled, report = stratified_sample(stage, target, params.seed, report)
    return sampled, report
