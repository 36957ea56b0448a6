from __future__ import annotations

import random

import pytest

from framescope.corpus import EpisodeRecord
from framescope.synth import synth_corpus


@pytest.fixture(scope="session")
def small_corpus() -> list[EpisodeRecord]:
    return synth_corpus(n_titles=12, episodes_per_title=(6, 14), seed=7)


def random_words(rng: random.Random, pool, n: int) -> str:
    return " ".join(rng.choice(pool) for _ in range(n))
