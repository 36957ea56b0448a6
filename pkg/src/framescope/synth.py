"""Seeded synthetic fixtures: schema-compatible episodes and gold annotations.

Real transcripts are licensed data and are not shipped; these generators
produce corpora with the same shape (titles, cadences, categories, entity
mentions, frame-flavored vocabulary) for demos, tests, and end-to-end runs.
Everything is deterministic under the seed.
"""
from __future__ import annotations

import random
from datetime import date, timedelta
from typing import Sequence

from .corpus import EpisodeRecord
from .features import load_lexicons
from .frames import FRAMES, Frame
from .goldio import GoldRecord, KeyPhrase

CATEGORY_POOL = (
    "religion",
    "news",
    "sports",
    "comedy",
    "business",
    "health & fitness",
    "education",
    "politics",
    "technology",
    "music",
)

# Gazetteer for the fallback dictionary tagger; types follow the usual NER coarse set.
DEFAULT_GAZETTEER: dict[str, str] = {
    "Jesus": "PERSON",
    "Bible": "OTHER",
    "Instagram": "ORG",
    "COVID": "OTHER",
    "America": "GPE",
    "YouTube": "ORG",
    "Twitter": "ORG",
    "Christian": "OTHER",
    "US": "GPE",
    "China": "GPE",
    "New York": "GPE",
    "John": "PERSON",
    "Biden": "PERSON",
    "NBA": "ORG",
    "Kaepernick": "PERSON",
    "Bitcoin": "OTHER",
    "Congress": "ORG",
    "police": "OTHER",
}

_FILLER = (
    "today we talk about the show and what happened this week with our guest "
    "and then we get into the big story everyone keeps asking about because "
    "honestly it matters more than people think so let us start right there "
    "before the break you mentioned something interesting about how things "
    "change over time and why listeners should care about it"
).split()

_CATEGORY_ENTITIES: dict[str, tuple[str, ...]] = {
    "religion": ("Jesus", "Bible", "Christian"),
    "news": ("COVID", "China", "Biden", "America"),
    "sports": ("NBA", "Kaepernick", "New York"),
    "comedy": ("Twitter", "Instagram", "YouTube"),
    "business": ("Bitcoin", "America", "US"),
    "health & fitness": ("COVID", "US"),
    "education": ("America", "John"),
    "politics": ("Congress", "Biden", "US"),
    "technology": ("Twitter", "YouTube", "Instagram"),
    "music": ("Instagram", "New York"),
}

_CATEGORY_FRAME: dict[str, Frame] = {
    "religion": Frame.MORAL,
    "news": Frame.SECURITY,
    "sports": Frame.SOCIAL,
    "comedy": Frame.SOCIAL,
    "business": Frame.FINANCIAL,
    "health & fitness": Frame.HEALTH,
    "education": Frame.SOCIAL,
    "politics": Frame.LEGAL,
    "technology": Frame.FINANCIAL,
    "music": Frame.SOCIAL,
}


def _transcript(rng: random.Random, category: str, n_words: int, frame_vocab) -> str:
    frame = _CATEGORY_FRAME[category]
    terms = frame_vocab[frame]
    entities = _CATEGORY_ENTITIES[category]
    words: list[str] = []
    while len(words) < n_words:
        roll = rng.random()
        if roll < 0.08:
            words.append(rng.choice(entities))
        elif roll < 0.20:
            words.append(rng.choice(terms))
        else:
            words.append(rng.choice(_FILLER))
    return " ".join(words[:n_words])


def synth_corpus(
    n_titles: int = 20,
    episodes_per_title: tuple[int, int] = (8, 18),
    seed: int = 0,
    start: date = date(2020, 5, 1),
    transcript_words: tuple[int, int] = (260, 620),
) -> list[EpisodeRecord]:
    """A seeded corpus spanning several titles, categories, and cadences."""
    lexicons = load_lexicons()
    episodes: list[EpisodeRecord] = []
    for t in range(n_titles):
        rng = random.Random(f"{seed}|title|{t}")
        title = f"show_{t:03d}"
        category = CATEGORY_POOL[t % len(CATEGORY_POOL)]
        extra = rng.sample([c for c in CATEGORY_POOL if c != category], k=rng.randint(0, 2))
        categories = (category, *extra)
        n_eps = rng.randint(*episodes_per_title)
        gap_days = rng.choice((0, 1, 1, 2, 3))
        when = start + timedelta(days=rng.randint(0, 5))
        for e in range(n_eps):
            episodes.append(
                EpisodeRecord(
                    episode_id=f"ep_{t:03d}_{e:03d}",
                    pod_title=title,
                    ep_title=f"{title} episode {e}",
                    episode_date=when,
                    duration_seconds=rng.randint(120, 5400),
                    categories=categories,
                    transcript=_transcript(rng, category, rng.randint(*transcript_words), lexicons.frame_vocab),
                )
            )
            when = when + timedelta(days=gap_days)
    return episodes


def synth_gold(
    n_per_frame: int = 20,
    seed: int = 0,
    words_per_text: tuple[int, int] = (40, 80),
    frames: Sequence[Frame] = FRAMES,
) -> list[GoldRecord]:
    """Gold annotations with frame-distinctive vocabulary and exact key-phrase spans."""
    lexicons = load_lexicons()
    records: list[GoldRecord] = []
    for frame in frames:
        terms = lexicons.frame_vocab[frame]
        for i in range(n_per_frame):
            rng = random.Random(f"{seed}|gold|{frame.value}|{i}")
            n_words = rng.randint(*words_per_text)
            words = [rng.choice(_FILLER) for _ in range(n_words)]
            # Plant two 2-word runs of frame vocabulary; those become the rationales.
            slots = rng.sample(range(0, n_words - 3), k=2) if n_words >= 8 else [0, n_words - 2]
            slots.sort()
            if slots[1] - slots[0] < 2:
                slots[1] = slots[0] + 2
            for at in slots:
                words[at] = rng.choice(terms)
                words[at + 1] = rng.choice(terms)
            # Sprinkle extra single frame terms for separability.
            for _ in range(4):
                words[rng.randrange(n_words)] = rng.choice(terms)
            text = " ".join(words)
            offsets = []
            pos = 0
            for w in words:
                offsets.append((pos, pos + len(w)))
                pos += len(w) + 1
            phrases = tuple(
                KeyPhrase(
                    text=text[offsets[at][0] : offsets[at + 1][1]],
                    start=offsets[at][0],
                    end=offsets[at + 1][1],
                )
                for at in slots
            )
            records.append(
                GoldRecord(
                    chunk_id=f"gold_{frame.value}_{i:03d}",
                    text=text,
                    frame=frame,
                    key_phrases=phrases,
                )
            )
    return records
