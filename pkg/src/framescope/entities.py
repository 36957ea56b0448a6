"""Entity mentions, the weighted bipartite podcast-entity graph, and PageRank.

Mentions are aggregated per (podcast, canonical entity, date); the graph
collapses dates into one weighted edge per (podcast, entity). Influence is
the stationary distribution of a damped random walk over the undirected
graph, realized as symmetric directed edges with weight-proportional
transitions and uniform teleport over all nodes.
"""
from __future__ import annotations

import logging
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .corpus import ChunkRecord, EpisodeRecord

logger = logging.getLogger(__name__)

ENTITY_TYPES = ("PERSON", "ORG", "GPE", "OTHER")


@dataclass(frozen=True)
class TaggedSpan:
    """One entity occurrence found by a tagger: surface form, type, char offset."""

    surface: str
    entity_type: str
    start: int


class Tagger(Protocol):
    def tag(self, text: str) -> list[TaggedSpan]: ...


class DictionaryTagger:
    """Deterministic gazetteer tagger: case-insensitive, word-boundary matches.

    Longer terms win over shorter ones at the same position.
    """

    def __init__(self, terms: Mapping[str, str]):
        for term, etype in terms.items():
            if etype not in ENTITY_TYPES:
                raise ValueError(f"unknown entity type {etype!r} for term {term!r}")
        self._types = {term.lower(): etype for term, etype in terms.items()}
        ordered = sorted(self._types, key=lambda t: (-len(t), t))
        if ordered:
            pattern = "|".join(re.escape(t) for t in ordered)
            self._re = re.compile(rf"\b(?:{pattern})\b", re.IGNORECASE)
        else:
            self._re = None

    def tag(self, text: str) -> list[TaggedSpan]:
        if self._re is None:
            return []
        return [
            TaggedSpan(m.group(), self._types[m.group().lower()], m.start())
            for m in self._re.finditer(text)
        ]


_POSSESSIVE_RE = re.compile(r"(?:'s|’s)$")
_EDGE_PUNCT_RE = re.compile(r"^[\W_]+|[\W_]+$")


def canonicalize(surface: str, alias_map: Mapping[str, str] | None = None) -> str:
    """Case-fold, strip trailing possessives and edge punctuation, apply aliases."""
    canon = _POSSESSIVE_RE.sub("", surface.strip().casefold())
    canon = _EDGE_PUNCT_RE.sub("", canon)
    canon = re.sub(r"\s+", " ", canon)
    if alias_map:
        canon = alias_map.get(canon, canon)
    return canon


@dataclass(frozen=True)
class MentionRow:
    podcast_id: str
    entity_surface: str
    entity_canonical: str
    entity_type: str
    count: int
    date: date


def extract_mentions(
    chunks: Sequence[ChunkRecord],
    tagger: Tagger,
    episodes: Mapping[str, EpisodeRecord] | None = None,
    *,
    alias_map: Mapping[str, str] | None = None,
    group_by_title: bool = False,
) -> list[MentionRow]:
    """Tag every chunk and aggregate mention counts per (podcast, entity, date).

    Without an episode index the chunk's episode_id stands in as the podcast
    key and all rows share a placeholder date. With one, `group_by_title`
    selects podcast-title-level aggregation (the graph's natural grain)
    versus episode-level (what per-episode correlations need).

    A tagger failure skips the chunk and logs it.
    """
    counts: dict[tuple[str, str, date], int] = Counter()
    surfaces: dict[str, str] = {}
    type_votes: dict[str, Counter] = defaultdict(Counter)
    placeholder = date(1970, 1, 1)

    for chunk in chunks:
        try:
            spans = tagger.tag(chunk.text)
        except Exception:
            logger.exception("tagger failed on chunk %s; skipped", chunk.chunk_id)
            continue
        episode = episodes.get(chunk.episode_id) if episodes else None
        podcast_id = episode.pod_title if (episode and group_by_title) else chunk.episode_id
        when = episode.episode_date if episode else placeholder
        for span in spans:
            canon = canonicalize(span.surface, alias_map)
            if not canon:
                continue
            counts[(podcast_id, canon, when)] += 1
            type_votes[canon][span.entity_type] += 1
            prev = surfaces.get(canon)
            if prev is None or span.surface < prev:
                surfaces[canon] = span.surface

    rows = []
    for (podcast_id, canon, when), count in counts.items():
        votes = type_votes[canon]
        etype = sorted(votes, key=lambda t: (-votes[t], t))[0]
        rows.append(MentionRow(podcast_id, surfaces[canon], canon, etype, count, when))
    rows.sort(key=lambda r: (r.podcast_id, r.entity_canonical, r.date))
    return rows


class EntityGraph:
    """Weighted bipartite podcast-entity graph; edges only cross sides."""

    def __init__(self) -> None:
        self._podcast_adj: dict[str, dict[str, float]] = defaultdict(dict)
        self._entity_adj: dict[str, dict[str, float]] = defaultdict(dict)

    def add_edge(self, podcast: str, entity: str, weight: float) -> None:
        if weight <= 0:
            raise ValueError(f"edge weight must be positive, got {weight}")
        self._podcast_adj[podcast][entity] = self._podcast_adj[podcast].get(entity, 0.0) + weight
        self._entity_adj[entity][podcast] = self._entity_adj[entity].get(podcast, 0.0) + weight

    @property
    def podcast_nodes(self) -> list[str]:
        return sorted(self._podcast_adj)

    @property
    def entity_nodes(self) -> list[str]:
        return sorted(self._entity_adj)

    @property
    def n_nodes(self) -> int:
        return len(self._podcast_adj) + len(self._entity_adj)

    @property
    def n_edges(self) -> int:
        return sum(len(nbrs) for nbrs in self._podcast_adj.values())

    def edge_weight(self, podcast: str, entity: str) -> float:
        return self._podcast_adj.get(podcast, {}).get(entity, 0.0)

    def podcast_neighbors(self, podcast: str) -> dict[str, float]:
        return dict(self._podcast_adj.get(podcast, {}))

    def entity_neighbors(self, entity: str) -> dict[str, float]:
        return dict(self._entity_adj.get(entity, {}))

    def scaled(self, factor: float) -> "EntityGraph":
        out = EntityGraph()
        for podcast, nbrs in self._podcast_adj.items():
            for entity, w in nbrs.items():
                out.add_edge(podcast, entity, w * factor)
        return out


def build_graph(mentions: Iterable[MentionRow]) -> EntityGraph:
    """One edge per (podcast, entity), weighted by total mention count."""
    graph = EntityGraph()
    totals: dict[tuple[str, str], int] = Counter()
    for row in mentions:
        totals[(row.podcast_id, row.entity_canonical)] += row.count
    for (podcast, entity), count in totals.items():
        graph.add_edge(podcast, entity, float(count))
    return graph


@dataclass
class PageRankScores:
    podcast_scores: dict[str, float]
    entity_scores: dict[str, float]
    damping: float
    iterations: int
    residual: float
    converged: bool

    @property
    def scores(self) -> dict[tuple[str, str], float]:
        out = {("podcast", name): s for name, s in self.podcast_scores.items()}
        out.update({("entity", name): s for name, s in self.entity_scores.items()})
        return out


def pagerank(
    graph: EntityGraph,
    damping: float = 0.85,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> PageRankScores:
    """Power iteration with uniform teleport; stops when the L1 step < tol.

    Non-convergence within `max_iter` returns the best iterate flagged
    converged=False.
    """
    if graph.n_nodes == 0:
        raise ValueError("pagerank on an empty graph")
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")

    podcasts = graph.podcast_nodes
    entities = graph.entity_nodes
    index = {("p", name): i for i, name in enumerate(podcasts)}
    index.update({("e", name): len(podcasts) + i for i, name in enumerate(entities)})
    n = graph.n_nodes

    # Symmetric directed edges with row-normalized transition probabilities.
    src, dst, prob = [], [], []
    for podcast in podcasts:
        nbrs = graph.podcast_neighbors(podcast)
        total = sum(nbrs.values())
        for entity, w in sorted(nbrs.items()):
            src.append(index[("p", podcast)])
            dst.append(index[("e", entity)])
            prob.append(w / total)
    for entity in entities:
        nbrs = graph.entity_neighbors(entity)
        total = sum(nbrs.values())
        for podcast, w in sorted(nbrs.items()):
            src.append(index[("e", entity)])
            dst.append(index[("p", podcast)])
            prob.append(w / total)
    src_a = np.asarray(src, dtype=np.int64)
    dst_a = np.asarray(dst, dtype=np.int64)
    prob_a = np.asarray(prob, dtype=np.float64)

    x = np.full(n, 1.0 / n)
    teleport = (1.0 - damping) / n
    residual = float("inf")
    iterations = 0
    for iterations in range(1, max_iter + 1):
        x_next = damping * np.bincount(dst_a, weights=prob_a * x[src_a], minlength=n) + teleport
        residual = float(np.abs(x_next - x).sum())
        x = x_next
        if residual < tol:
            break
    converged = residual < tol

    return PageRankScores(
        podcast_scores={name: float(x[index[("p", name)]]) for name in podcasts},
        entity_scores={name: float(x[index[("e", name)]]) for name in entities},
        damping=damping,
        iterations=iterations,
        residual=residual,
        converged=converged,
    )


def top_k_entities(scores: PageRankScores, k: int = 30000) -> list[tuple[str, float]]:
    """Entity nodes only, descending score, ties broken lexicographically."""
    ranked = sorted(scores.entity_scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return ranked[:k]


def _week_start(d: date) -> date:
    return d - timedelta(days=d.weekday())


def entity_timeseries(
    mentions: Sequence[MentionRow],
    entity: str,
    bucket: str = "day",
) -> list[tuple[date, int]]:
    """Zero-filled (date, count) series for one canonical entity.

    The series spans the whole corpus date range (all mentions, not just the
    requested entity), bucketed by day or by ISO week (keyed on its Monday).
    """
    if bucket not in ("day", "week"):
        raise ValueError("bucket must be 'day' or 'week'")
    if not mentions:
        return []
    lo = min(r.date for r in mentions)
    hi = max(r.date for r in mentions)
    counts: dict[date, int] = Counter()
    for row in mentions:
        if row.entity_canonical == entity:
            key = row.date if bucket == "day" else _week_start(row.date)
            counts[key] += row.count

    series: list[tuple[date, int]] = []
    if bucket == "day":
        cur = lo
        while cur <= hi:
            series.append((cur, counts.get(cur, 0)))
            cur += timedelta(days=1)
    else:
        cur = _week_start(lo)
        last = _week_start(hi)
        while cur <= last:
            series.append((cur, counts.get(cur, 0)))
            cur += timedelta(weeks=1)
    return series


def mention_totals(mentions: Iterable[MentionRow]) -> dict[str, int]:
    """Total raw mention count per canonical entity."""
    totals: dict[str, int] = Counter()
    for row in mentions:
        totals[row.entity_canonical] += row.count
    return dict(totals)


def entity_types(mentions: Iterable[MentionRow]) -> dict[str, str]:
    votes: dict[str, Counter] = defaultdict(Counter)
    for row in mentions:
        votes[row.entity_canonical][row.entity_type] += row.count
    return {e: sorted(v, key=lambda t: (-v[t], t))[0] for e, v in votes.items()}
