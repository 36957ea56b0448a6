"""Per-category topic modeling with the deterministic stage doubles."""
from framescope.corpus import chunk_episode
from framescope.entities import DictionaryTagger, extract_mentions
from framescope.synth import DEFAULT_GAZETTEER, synth_corpus
from framescope.topics import (
    HashingEmbedder,
    IdentityReducer,
    ThresholdClusterer,
    fit_topics,
    topic_entity_correlation,
)

episodes = synth_corpus(n_titles=10, episodes_per_title=(6, 10), seed=21)
index = {ep.episode_id: ep for ep in episodes}
category = "religion"
chunks = [c for ep in episodes if ep.primary_category == category for c in chunk_episode(ep)]
print(f"{len(chunks)} chunks in category {category!r}\n")

result = fit_topics(
    chunks,
    embedder=HashingEmbedder(dim=64),
    reducer=IdentityReducer(),
    clusterer=ThresholdClusterer(threshold=0.5),
    min_topic_size=5,
    category=category,
)
for topic in result.topics:
    words = ", ".join(f"{w} ({s:.2f})" for w, s in topic.top_words[:5])
    print(f"topic {topic.topic_id} [{topic.label}] size={topic.size}: {words}")
print(f"outliers: {result.outlier_count}")

mentions = extract_mentions(chunks, DictionaryTagger(DEFAULT_GAZETTEER), index)
report = topic_entity_correlation(result, mentions, chunks)
print("\ntopic-entity correlations (Pearson over per-episode co-occurrence):")
for row in report.rows[:8]:
    value = "undefined" if row.correlation is None else f"{row.correlation:+.3f}"
    print(f"  {row.theme:<32} {row.entity:<12} {value}")
