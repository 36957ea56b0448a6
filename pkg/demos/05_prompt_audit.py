"""Zero-shot frame labeling with the offline stub, plus the hallucination audit."""
from framescope.corpus import chunk_episode
from framescope.prompting import (
    RuleStubClient,
    annotate_chunks,
    filter_min_per_frame,
    positional_bias,
    verify_key_phrases,
)
from framescope.synth import synth_corpus

episodes = synth_corpus(n_titles=10, episodes_per_title=(3, 5), seed=5)
chunks = [c for ep in episodes for c in chunk_episode(ep)][:40]

predictions = annotate_chunks(chunks, RuleStubClient(), max_inflight=4)
print(f"annotated {len(predictions)} chunks\n")
for pred in predictions[:5]:
    verdicts = ", ".join(f"{v.phrase!r}:{v.verdict.value}" for v in pred.verdicts)
    print(f"{pred.chunk_id}: {pred.frame.value:<10} [{pred.parse_status.value}] {verdicts}")

_, quota = filter_min_per_frame(predictions, min_count=5)
print("\nper-frame counts:", {f.value: n for f, n in quota.counts.items()})
print("frames needing more sampling:", [f.value for f in quota.deficient])

# a manufactured hallucination audit, mirroring common failure shapes
chunk_text = "we are working our way back and i don't look forward to the end of june"
phrases = ["look forward", "looking forward", "court ruling", "phrase1"]
print(f"\naudit against: {chunk_text!r}")
verdicts = verify_key_phrases(chunk_text, phrases)
for v in verdicts:
    span = f" span={v.match_span}" if v.match_span else ""
    print(f"  {v.phrase!r}: {v.verdict.value} (similarity {v.similarity:.2f}){span}")
print(f"positional bias (share matched in first 50 words): {positional_bias(chunk_text, verdicts)}")
