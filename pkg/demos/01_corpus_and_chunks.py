"""Ingesting episode records and slicing transcripts into 250-token chunks."""
from framescope.corpus import chunk_episode
from framescope.synth import synth_corpus

episodes = synth_corpus(n_titles=4, episodes_per_title=(3, 5), seed=1)
print(f"synthetic corpus: {len(episodes)} episodes across 4 titles\n")

episode = episodes[0]
print(f"episode {episode.episode_id} ({episode.pod_title}, {episode.episode_date})")
print(f"  categories: {', '.join(episode.categories)}")
print(f"  transcript: {len(episode.transcript.split())} words")

chunks = chunk_episode(episode, chunk_size=250)
print(f"\nchunked into {len(chunks)} pieces:")
for c in chunks:
    print(f"  {c.chunk_id}: {c.token_count:>3} tokens, chars [{c.char_start}, {c.char_end})")

rejoined = " ".join(c.text for c in chunks)
print(f"\nround trip reconstructs the normalized transcript: {rejoined == episode.transcript}")
