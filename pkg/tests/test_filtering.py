from __future__ import annotations

import json
import random
import statistics
from collections import Counter, defaultdict
from datetime import date, timedelta

import pytest

from framescope.corpus import EpisodeRecord
from framescope.filtering import (
    FilterParams,
    FilterReport,
    cap_episodes_per_title,
    filter_cadence_and_volume,
    filter_min_duration,
    largest_remainder_allocation,
    retain_top_categories,
    run_filter_pipeline,
    stratified_sample,
)


def make_episode(episode_id, title, day, duration=600, categories=("news",)):
    return EpisodeRecord(
        episode_id=episode_id,
        pod_title=title,
        ep_title=f"{title} {episode_id}",
        episode_date=day,
        duration_seconds=duration,
        categories=tuple(categories),
        transcript="hello world",
    )


def daily_title(title, n, start=date(2020, 5, 1), gap_days=1):
    return [make_episode(f"{title}-{i}", title, start + timedelta(days=i * gap_days)) for i in range(n)]


def test_cadence_threshold_logic():
    corpus = daily_title("t1", 12) + daily_title("t2", 9) + daily_title("t3", 15)
    kept = filter_cadence_and_volume(corpus, min_gap_days=0.5, min_episodes=10)
    assert {ep.pod_title for ep in kept} == {"t1", "t3"}


def test_same_day_title_excluded():
    corpus = [make_episode(f"e{i}", "t", date(2020, 5, 1)) for i in range(12)]
    assert filter_cadence_and_volume(corpus) == []


def test_single_episode_title_excluded():
    corpus = daily_title("solo", 1)
    assert filter_cadence_and_volume(corpus, min_episodes=1) == []


def test_cadence_matches_bruteforce_oracle():
    rng = random.Random(11)
    corpus = []
    for t in range(200):
        n = rng.randint(1, 20)
        gap = rng.choice((0, 1, 1, 2, 5))
        corpus.extend(daily_title(f"t{t:03d}", n, gap_days=gap))
    kept = filter_cadence_and_volume(corpus, min_gap_days=0.5, min_episodes=10)

    # independent predicate recomputation
    groups = defaultdict(list)
    for ep in corpus:
        groups[ep.pod_title].append(ep.episode_date)
    expected_titles = set()
    for title, dates in groups.items():
        if len(dates) < 10:
            continue
        dates = sorted(dates)
        gaps = [(b - a).days for a, b in zip(dates, dates[1:])]
        if gaps and statistics.median(gaps) > 0.5:
            expected_titles.add(title)
    assert {ep.pod_title for ep in kept} == expected_titles
    assert {ep.episode_id for ep in kept} == {ep.episode_id for ep in corpus if ep.pod_title in expected_titles}


def test_min_duration_cases():
    corpus = [make_episode(f"e{i}", "t", date(2020, 5, 1), duration=d) for i, d in enumerate([100, 400, 900])]
    kept = filter_min_duration(corpus, 300)
    assert [ep.duration_seconds for ep in kept] == [400, 900]
    assert filter_min_duration(corpus, 0) == corpus


def test_min_duration_oracle():
    rng = random.Random(3)
    corpus = [make_episode(f"e{i}", "t", date(2020, 5, 1), duration=rng.randint(0, 4000)) for i in range(300)]
    kept = filter_min_duration(corpus, 1200)
    assert kept == [ep for ep in corpus if ep.duration_seconds >= 1200]


def test_retain_top_categories_tiebreak():
    corpus = (
        [make_episode(f"a{i}", "t1", date(2020, 5, 1), categories=("alpha",)) for i in range(3)]
        + [make_episode(f"b{i}", "t2", date(2020, 5, 1), categories=("beta",)) for i in range(3)]
        + [make_episode(f"c{i}", "t3", date(2020, 5, 1), categories=("gamma",)) for i in range(2)]
    )
    # alpha and beta tie at 3; k=1 keeps the lexicographically first (alpha)
    kept = retain_top_categories(corpus, k=1)
    assert {ep.primary_category for ep in kept} == {"alpha"}


def test_cap_downsamples_uniformly():
    corpus = daily_title("big", 100) + daily_title("small", 5)
    capped = cap_episodes_per_title(corpus, cap=60, seed=42)
    sizes = Counter(ep.pod_title for ep in capped)
    assert sizes == {"big": 60, "small": 5}
    assert set(ep.episode_id for ep in capped) <= set(ep.episode_id for ep in corpus)
    again = cap_episodes_per_title(corpus, cap=60, seed=42)
    assert [ep.episode_id for ep in again] == [ep.episode_id for ep in capped]


def test_largest_remainder_allocation():
    assert largest_remainder_allocation({"a": 60, "b": 30, "c": 10}, 10) == {"a": 6, "b": 3, "c": 1}
    alloc = largest_remainder_allocation({"a": 1, "b": 1, "c": 1}, 2)
    assert sum(alloc.values()) == 2


def test_stratified_proportionality():
    corpus = (
        [make_episode(f"a{i}", "t1", date(2020, 5, 1), categories=("a",)) for i in range(60)]
        + [make_episode(f"b{i}", "t2", date(2020, 5, 1), categories=("b",)) for i in range(30)]
        + [make_episode(f"c{i}", "t3", date(2020, 5, 1), categories=("c",)) for i in range(10)]
    )
    sampled, _ = stratified_sample(corpus, 10, seed=1)
    counts = Counter(ep.primary_category for ep in sampled)
    assert counts == {"a": 6, "b": 3, "c": 1}


def test_stratified_identity_and_warning():
    corpus = daily_title("t", 20)
    sampled, report = stratified_sample(corpus, 20, seed=0)
    assert {ep.episode_id for ep in sampled} == {ep.episode_id for ep in corpus}
    assert not report.warnings
    sampled, report = stratified_sample(corpus, 30, seed=0)
    assert len(sampled) == 20
    assert report.warnings


def test_stratified_permutation_invariance():
    rng = random.Random(5)
    corpus = [
        make_episode(f"e{i:03d}", f"t{i % 7}", date(2020, 5, 1), categories=(rng.choice("abcd"),))
        for i in range(120)
    ]
    base, _ = stratified_sample(corpus, 40, seed=9)
    shuffled = corpus[:]
    rng.shuffle(shuffled)
    perm, _ = stratified_sample(shuffled, 40, seed=9)
    assert {ep.episode_id for ep in base} == {ep.episode_id for ep in perm}


def test_report_counts_and_monotonicity():
    report = FilterReport()
    report.record("s1", 100, 80, k=1)
    report.record("s2", 80, 80)
    assert [s.output_count for s in report.stages] == [80, 80]
    with pytest.raises(ValueError):
        report.record("bad", 10, 11)


def test_full_pipeline_monotone_and_deterministic(small_corpus, tmp_path):
    params = FilterParams(min_duration_seconds=600, top_categories=5, cap_per_title=8, target_size=30, seed=13)
    kept_a, report_a = run_filter_pipeline(small_corpus, params)
    kept_b, report_b = run_filter_pipeline(small_corpus, params)
    assert [ep.episode_id for ep in kept_a] == [ep.episode_id for ep in kept_b]
    for stage in report_a.stages:
        assert stage.output_count <= stage.input_count
    # stage chaining: next input equals previous output
    for left, right in zip(report_a.stages, report_a.stages[1:]):
        assert right.input_count == left.output_count
    path_a, path_b = tmp_path / "a.json", tmp_path / "b.json"
    report_a.write(path_a)
    report_b.write(path_b)
    assert path_a.read_bytes() == path_b.read_bytes()
    assert json.loads(path_a.read_text())["stages"]
