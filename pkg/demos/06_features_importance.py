"""Textual feature vectors and human-vs-LLM feature priority contrasts."""
import numpy as np

from framescope.features import FEATURE_NAMES, extract_features, feature_matrix
from framescope.importance import abstract_vs_objective_summary, train_and_rank
from framescope.synth import synth_gold

vec = extract_features("You must not worry; the court case might possibly end very well for the community.")
d = vec.as_dict()
print("one vector, nonzero fields:")
for name in FEATURE_NAMES:
    if d[name]:
        print(f"  {name:<24} {d[name]:.3f}")

# labels from two imagined sources over the same texts
gold = synth_gold(n_per_frame=15, seed=8)
X = feature_matrix([extract_features(r.text) for r in gold])
human = [r.frame.value for r in gold]
rng = np.random.default_rng(0)
llm = [f if rng.random() > 0.3 else "social" for f in human]  # a source that over-calls 'social'

report_h = train_and_rank(X, human, model="random_forest", seed=1, label_source="human")
report_l = train_and_rank(X, llm, model="random_forest", seed=1, label_source="llm")
print(f"\nhuman-labels forest (in-sample acc {report_h.accuracy:.2f}), top features:")
for name, value in report_h.ranking[:6]:
    print(f"  {name:<24} {value:.4f}")

print("\nabstract vs objective mean ranks (lower = higher priority):")
for row in abstract_vs_objective_summary(report_h, report_l):
    print(f"  {row.feature_class:<10} human {row.mean_rank_human:5.1f}   llm {row.mean_rank_llm:5.1f}")
