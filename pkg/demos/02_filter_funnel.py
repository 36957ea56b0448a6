"""The multi-stage filtering funnel, with its audit report."""
from framescope.filtering import FilterParams, run_filter_pipeline
from framescope.synth import synth_corpus

corpus = synth_corpus(n_titles=40, episodes_per_title=(4, 20), seed=3)
print(f"raw corpus: {len(corpus)} episodes\n")

params = FilterParams(
    min_gap_days=0.5,
    min_episodes=8,
    min_duration_seconds=600,
    top_categories=6,
    cap_per_title=10,
    target_size=120,
    seed=42,
)
kept, report = run_filter_pipeline(corpus, params)

print(f"{'stage':<22} {'in':>6} {'out':>6}  parameters")
for stage in report.stages:
    print(f"{stage.name:<22} {stage.input_count:>6} {stage.output_count:>6}  {stage.parameters}")
print(f"\nretained {len(kept)} episodes; same seed reproduces the same set byte for byte")
