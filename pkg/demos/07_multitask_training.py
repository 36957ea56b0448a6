"""Training the two-head encoder (frame classification + BIO span detection)."""
from framescope.multitask import WordTokenizer, build_examples, stratified_split, train
from framescope.synth import synth_gold

gold = synth_gold(n_per_frame=12, seed=13)
tokenizer = WordTokenizer.build(r.text for r in gold)
examples = build_examples(gold, tokenizer)
train_set, eval_set = stratified_split(examples, eval_fraction=0.2, seed=13)
print(f"{len(train_set)} train / {len(eval_set)} eval examples, vocab {tokenizer.vocab_size}\n")

model, result = train(
    train_set,
    epochs=30,
    lambda_span=1.0,
    seed=13,
    eval_examples=eval_set,
    tokenizer=tokenizer,
    eval_epochs=(5, 10, 20, 30),
)

print(f"{'epoch':>5} {'loss':>8} {'frame acc':>10} {'span f1':>8}   (held-out)")
for epoch in sorted(result.metrics_by_epoch):
    m = result.metrics_by_epoch[epoch]
    print(f"{epoch:>5} {m.loss_total:>8.4f} {m.frame_accuracy:>10.3f} {m.span_f1:>8.3f}")

from framescope.multitask import evaluate

fit = evaluate(model, train_set)
print(f"\ntraining-set fit after 30 epochs: frame acc {fit.frame_accuracy:.3f}, span f1 {fit.span_f1:.3f}")

final = result.metrics_by_epoch[max(result.metrics_by_epoch)]
print("\nper-frame precision/recall/F1 at the last evaluated epoch:")
for frame, fm in final.per_frame.items():
    print(f"  {frame:<10} P={fm.precision:.3f} R={fm.recall:.3f} F1={fm.f1:.3f} (n={fm.support})")
