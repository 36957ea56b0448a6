"""Bipartite podcast-entity graph, PageRank ranking, and a mention series."""
from framescope.corpus import chunk_episode
from framescope.entities import (
    DictionaryTagger,
    build_graph,
    entity_timeseries,
    extract_mentions,
    mention_totals,
    pagerank,
    top_k_entities,
)
from framescope.synth import DEFAULT_GAZETTEER, synth_corpus

episodes = synth_corpus(n_titles=12, episodes_per_title=(6, 10), seed=9)
index = {ep.episode_id: ep for ep in episodes}
chunks = [c for ep in episodes for c in chunk_episode(ep)]
tagger = DictionaryTagger(DEFAULT_GAZETTEER)

title_mentions = extract_mentions(chunks, tagger, index, group_by_title=True)
graph = build_graph(title_mentions)
print(f"graph: {len(graph.podcast_nodes)} podcasts, {len(graph.entity_nodes)} entities, {graph.n_edges} edges")

scores = pagerank(graph, damping=0.85)
totals = mention_totals(title_mentions)
print(f"\npagerank converged in {scores.iterations} iterations (residual {scores.residual:.2e})\n")
print(f"{'entity':<14} {'pagerank':>10} {'raw count':>10}")
for name, score in top_k_entities(scores, k=8):
    print(f"{name:<14} {score:>10.5f} {totals[name]:>10}")

episode_mentions = extract_mentions(chunks, tagger, index)
series = entity_timeseries(episode_mentions, "covid", bucket="week")
print("\nweekly covid mentions:")
for week, count in series:
    print(f"  {week}  {'#' * min(count, 60)} {count}")
