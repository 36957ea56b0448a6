"""Per-category topic modeling: embed -> reduce -> cluster -> class-based TF-IDF.

The three vector stages sit behind interfaces so the pipeline can run with
deterministic doubles (hashing embedder, identity reducer, threshold
clusterer) or any heavier production binding. Topic naming always goes
through class-based TF-IDF over cluster-concatenated documents.
"""
from __future__ import annotations

import hashlib
import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Protocol, Sequence

import numpy as np

from .corpus import ChunkRecord
from .entities import MentionRow

OUTLIER_TOPIC = -1
DEFAULT_MIN_TOPIC_SIZE = 15

_WORD_RE = re.compile(r"[a-z][a-z0-9']+")

# Minimal function-word list; just enough to keep topic labels contentful.
STOPWORDS = frozenset(
    """a an and are as at be but by for from has have he her his i in is it its me my of on or our
    she so that the their them they this to was we were what when which who will with you your""".split()
)


def topic_tokens(text: str, stopwords: frozenset[str] = STOPWORDS) -> list[str]:
    return [w for w in _WORD_RE.findall(text.lower()) if w not in stopwords]


class Embedder(Protocol):
    def embed(self, texts: Sequence[str]) -> np.ndarray: ...


class Reducer(Protocol):
    def reduce(self, vectors: np.ndarray) -> np.ndarray: ...


class Clusterer(Protocol):
    def cluster(self, vectors: np.ndarray) -> np.ndarray: ...


class HashingEmbedder:
    """Deterministic bag-of-words embedding via signed feature hashing."""

    def __init__(self, dim: int = 64):
        self.dim = dim

    def _slot(self, word: str) -> tuple[int, float]:
        digest = hashlib.sha1(word.encode("utf-8")).digest()
        slot = int.from_bytes(digest[:4], "big") % self.dim
        sign = 1.0 if digest[4] % 2 == 0 else -1.0
        return slot, sign

    def embed(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            for word in topic_tokens(text):
                slot, sign = self._slot(word)
                out[i, slot] += sign
            norm = np.linalg.norm(out[i])
            if norm > 0:
                out[i] /= norm
        return out


class IdentityReducer:
    def reduce(self, vectors: np.ndarray) -> np.ndarray:
        return vectors


class ThresholdClusterer:
    """Greedy leader clustering by cosine distance against running centroids."""

    def __init__(self, threshold: float = 0.5):
        self.threshold = threshold

    def cluster(self, vectors: np.ndarray) -> np.ndarray:
        labels = np.full(len(vectors), OUTLIER_TOPIC, dtype=int)
        centroids: list[np.ndarray] = []
        members: list[int] = []
        for i, vec in enumerate(vectors):
            norm = np.linalg.norm(vec)
            if norm == 0:
                continue
            best, best_dist = None, self.threshold
            for c, centroid in enumerate(centroids):
                cnorm = np.linalg.norm(centroid)
                if cnorm == 0:
                    continue
                dist = 1.0 - float(vec @ centroid) / (norm * cnorm)
                if dist <= best_dist:
                    best, best_dist = c, dist
            if best is None:
                centroids.append(vec.astype(float).copy())
                members.append(1)
                labels[i] = len(centroids) - 1
            else:
                members[best] += 1
                centroids[best] += (vec - centroids[best]) / members[best]
                labels[i] = best
        return labels


def ctfidf(cluster_term_counts: Mapping[int, Mapping[str, int]]) -> dict[int, list[tuple[str, float]]]:
    """Class-based TF-IDF: score(t, c) = tf(t, c) * log(1 + A / f(t)).

    tf is the term count inside cluster c, f(t) the term's total count over
    all clusters, and A the mean number of words per cluster. Output lists
    are sorted by descending score, ties alphabetical.
    """
    if not cluster_term_counts:
        return {}
    term_totals: Counter = Counter()
    total_words = 0
    for counts in cluster_term_counts.values():
        for term, n in counts.items():
            term_totals[term] += n
            total_words += n
    mean_words = total_words / len(cluster_term_counts)

    scored: dict[int, list[tuple[str, float]]] = {}
    for cluster, counts in cluster_term_counts.items():
        rows = [
            (term, n * math.log(1.0 + mean_words / term_totals[term]))
            for term, n in counts.items()
        ]
        rows.sort(key=lambda kv: (-kv[1], kv[0]))
        scored[cluster] = rows
    return scored


@dataclass
class TopicInfo:
    topic_id: int
    top_words: list[tuple[str, float]]
    size: int
    centroid: np.ndarray

    @property
    def label(self) -> str:
        return "_".join(w for w, _ in self.top_words[:3])

    def to_json(self) -> dict:
        return {
            "topic_id": self.topic_id,
            "label": self.label,
            "size": self.size,
            "top_words": [[w, round(s, 6)] for w, s in self.top_words],
        }


@dataclass
class TopicModelResult:
    category: str
    topics: list[TopicInfo]
    assignments: dict[str, int]
    degenerate: bool = False

    @property
    def outlier_count(self) -> int:
        return sum(1 for t in self.assignments.values() if t == OUTLIER_TOPIC)

    def topic_by_id(self, topic_id: int) -> TopicInfo:
        for topic in self.topics:
            if topic.topic_id == topic_id:
                return topic
        raise KeyError(topic_id)

    def to_json(self) -> dict:
        return {
            "category": self.category,
            "degenerate": self.degenerate,
            "topics": [t.to_json() for t in self.topics],
            "assignments": dict(sorted(self.assignments.items())),
        }


def fit_topics(
    chunks: Sequence[ChunkRecord],
    embedder: Embedder,
    reducer: Reducer,
    clusterer: Clusterer,
    min_topic_size: int = DEFAULT_MIN_TOPIC_SIZE,
    *,
    category: str = "",
    top_n_words: int = 10,
) -> TopicModelResult:
    """Cluster one category's chunks and name clusters by class-based TF-IDF.

    Fewer chunks than `min_topic_size` collapses to a single flagged topic
    rather than failing.
    """
    if not chunks:
        raise ValueError("fit_topics needs at least one chunk")
    texts = [c.text for c in chunks]
    if len(chunks) < min_topic_size:
        labels = np.zeros(len(chunks), dtype=int)
        vectors = embedder.embed(texts)
        degenerate = True
    else:
        vectors = embedder.embed(texts)
        reduced = reducer.reduce(vectors)
        labels = np.asarray(clusterer.cluster(reduced), dtype=int)
        degenerate = False

    cluster_counts: dict[int, Counter] = defaultdict(Counter)
    for label, text in zip(labels, texts):
        if label != OUTLIER_TOPIC:
            cluster_counts[int(label)].update(topic_tokens(text))
    scores = ctfidf(cluster_counts)

    topics = []
    for topic_id in sorted(cluster_counts):
        mask = labels == topic_id
        topics.append(
            TopicInfo(
                topic_id=topic_id,
                top_words=scores[topic_id][:top_n_words],
                size=int(mask.sum()),
                centroid=vectors[mask].mean(axis=0),
            )
        )
    assignments = {c.chunk_id: int(label) for c, label in zip(chunks, labels)}
    return TopicModelResult(category=category, topics=topics, assignments=assignments, degenerate=degenerate)


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Pearson correlation clamped to [-1, 1]; None when either side is constant."""
    if len(xs) != len(ys):
        raise ValueError("series length mismatch")
    if len(xs) < 2:
        return None
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    xd = x - x.mean()
    yd = y - y.mean()
    denom = math.sqrt(float(xd @ xd) * float(yd @ yd))
    if denom == 0.0:
        return None
    return max(-1.0, min(1.0, float(xd @ yd) / denom))


@dataclass
class CorrelationRow:
    theme: str
    entity: str
    correlation: float | None
    note: str = ""

    def to_tsv(self) -> str:
        value = "" if self.correlation is None else f"{self.correlation:.3f}"
        return f"{self.theme}\t{self.entity}\t{value}\t{self.note}"


@dataclass
class CorrelationReport:
    category: str
    rows: list[CorrelationRow] = field(default_factory=list)

    def write_tsv(self, path) -> None:
        lines = ["theme\tentity\tcorrelation\tnote"]
        lines += [row.to_tsv() for row in self.rows]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def topic_entity_correlation(
    result: TopicModelResult,
    mentions: Sequence[MentionRow],
    chunks: Sequence[ChunkRecord],
    entities: Sequence[str] | None = None,
) -> CorrelationReport:
    """Correlate per-episode entity mention counts with per-episode topic shares.

    `mentions` must be episode-keyed (podcast_id = episode_id). An episode's
    topic share is the fraction of its chunks assigned to the topic.
    """
    episode_chunks: dict[str, int] = Counter()
    episode_topic: dict[tuple[str, int], int] = Counter()
    for chunk in chunks:
        topic = result.assignments.get(chunk.chunk_id)
        if topic is None:
            continue
        episode_chunks[chunk.episode_id] += 1
        if topic != OUTLIER_TOPIC:
            episode_topic[(chunk.episode_id, topic)] += 1
    episodes = sorted(episode_chunks)

    entity_counts: dict[tuple[str, str], int] = Counter()
    for row in mentions:
        entity_counts[(row.podcast_id, row.entity_canonical)] += row.count
    if entities is None:
        entities = sorted({row.entity_canonical for row in mentions})

    report = CorrelationReport(category=result.category)
    for topic in result.topics:
        shares = [episode_topic.get((ep, topic.topic_id), 0) / episode_chunks[ep] for ep in episodes]
        for entity in entities:
            counts = [entity_counts.get((ep, entity), 0) for ep in episodes]
            r = pearson(counts, shares)
            note = "" if r is not None else "undefined: zero variance"
            report.rows.append(CorrelationRow(theme=topic.label, entity=entity, correlation=r, note=note))
    return report
