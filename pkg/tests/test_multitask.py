from __future__ import annotations

import random

import pytest

from framescope.corpus import ChunkRecord
from framescope.frames import FRAMES, Frame
from framescope.multitask import (
    WordTokenizer,
    align_spans_to_bio,
    build_examples,
    decode_spans,
    evaluate,
    f1_from_precision_recall,
    is_valid_bio,
    load_checkpoint,
    load_gold,
    metrics_from_confusion,
    predict_batch,
    stratified_split,
    train,
    write_gold,
    SpanOutOfBoundsError,
)
from framescope.synth import synth_gold
from framescope.text import tokenize_with_offsets

TOKENIZER = WordTokenizer({})


# ---------------------------------------------------------------------------
# BIO alignment / decoding
# ---------------------------------------------------------------------------


def test_no_phrases_all_outside():
    assert align_spans_to_bio("three plain words", []) == ["O", "O", "O"]


def test_two_token_phrase():
    text = "the war birds flew"
    start = text.index("war")
    end = text.index("birds") + len("birds")
    assert align_spans_to_bio(text, [(start, end)]) == ["O", "B", "I", "O"]


def test_overlapping_gold_spans_merged():
    text = "alpha beta gamma delta"
    spans = [(0, 10), (6, 16)]  # overlap on beta
    assert align_spans_to_bio(text, spans) == ["B", "I", "I", "O"]


def test_span_out_of_bounds_identified():
    with pytest.raises(SpanOutOfBoundsError, match=r"\(900, 950\)"):
        align_spans_to_bio("short text", [(900, 950)])


def test_decode_simple_runs():
    text = "one two three four five"
    tokens = tokenize_with_offsets(text)
    spans = decode_spans(["O", "B", "I", "O", "B"], tokens)
    assert [text[s:e] for s, e in spans] == ["two three", "five"]


def test_orphan_i_repaired_as_b():
    text = "one two three"
    tokens = tokenize_with_offsets(text)
    spans = decode_spans(["O", "I", "I"], tokens)
    assert [text[s:e] for s, e in spans] == ["two three"]


def test_align_decode_round_trip_50_fixtures():
    rng = random.Random(17)
    for _ in range(50):
        n_words = rng.randint(5, 60)
        words = [f"w{i}" for i in range(n_words)]
        text = " ".join(words)
        tokens = tokenize_with_offsets(text)
        n_spans = rng.randint(0, 3)
        marks = sorted(rng.sample(range(n_words), k=min(2 * n_spans, n_words)))
        spans = []
        for a, b in zip(marks[::2], marks[1::2]):
            spans.append((tokens[a].start, tokens[b].end))
        tags = align_spans_to_bio(text, spans)
        assert is_valid_bio(tags)
        decoded = decode_spans(tags, tokens)
        # round trip exact at token resolution (inputs were token-aligned and disjoint)
        assert decoded == spans


def test_mid_token_span_snaps_to_token():
    text = "unbelievable stuff"
    tags = align_spans_to_bio(text, [(2, 8)])
    assert tags == ["B", "O"]
    decoded = decode_spans(tags, tokenize_with_offsets(text))
    assert decoded == [(0, len("unbelievable"))]


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def test_f1_identity_helper():
    assert f1_from_precision_recall(0.0, 0.0) == 0.0
    assert f1_from_precision_recall(1.0, 1.0) == 1.0
    assert f1_from_precision_recall(0.75, 0.214) == pytest.approx(2 * 0.75 * 0.214 / 0.964)


def test_metrics_hand_built_confusion():
    confusion = [
        [8, 1, 0, 1, 0, 0],
        [2, 6, 0, 0, 0, 0],
        [0, 0, 5, 1, 0, 1],
        [1, 0, 1, 7, 0, 0],
        [0, 1, 0, 0, 9, 0],
        [1, 0, 1, 0, 0, 4],
    ]
    m = metrics_from_confusion(confusion)
    social = m.per_frame["social"]
    assert social.precision == pytest.approx(8 / 12)
    assert social.recall == pytest.approx(8 / 10)
    assert social.f1 == pytest.approx(2 * (8 / 12) * (8 / 10) / ((8 / 12) + (8 / 10)))
    assert social.support == 10
    health = m.per_frame["health"]
    assert health.precision == pytest.approx(6 / 8)
    assert health.recall == pytest.approx(6 / 8)
    moral = m.per_frame["moral"]
    assert moral.precision == pytest.approx(4 / 5)
    assert moral.recall == pytest.approx(4 / 6)
    # row sums equal supports; F1 identity holds on every cell
    for i, frame in enumerate(FRAMES):
        fm = m.per_frame[frame.value]
        assert sum(confusion[i]) == fm.support
        if fm.precision + fm.recall > 0:
            assert abs(fm.f1 - 2 * fm.precision * fm.recall / (fm.precision + fm.recall)) < 1e-9


def test_metrics_perfect_predictions():
    confusion = [[3 if i == j else 0 for j in range(6)] for i in range(6)]
    m = metrics_from_confusion(confusion)
    for frame in FRAMES:
        fm = m.per_frame[frame.value]
        assert fm.precision == fm.recall == fm.f1 == 1.0
    assert m.frame_accuracy == 1.0


# ---------------------------------------------------------------------------
# Gold IO and splits
# ---------------------------------------------------------------------------


def test_gold_round_trip(tmp_path):
    records = synth_gold(n_per_frame=2, seed=3)
    path = tmp_path / "gold.jsonl"
    assert write_gold(records, path) == len(records)
    loaded = load_gold(path)
    assert loaded == records
    # key phrase spans index the text exactly
    for rec in records:
        for phrase in rec.key_phrases:
            assert rec.text[phrase.start : phrase.end] == phrase.text


def test_stratified_split_covers_every_frame():
    gold = synth_gold(n_per_frame=5, seed=1)
    tokenizer = WordTokenizer.build(r.text for r in gold)
    examples = build_examples(gold, tokenizer)
    train_set, eval_set = stratified_split(examples, eval_fraction=0.2, seed=4)
    assert len(train_set) + len(eval_set) == len(examples)
    assert {e.frame for e in train_set} == set(FRAMES)
    assert {e.frame for e in eval_set} == set(FRAMES)


def test_build_examples_aligns_tags():
    gold = synth_gold(n_per_frame=1, seed=2)
    tokenizer = WordTokenizer.build(r.text for r in gold)
    examples = build_examples(gold, tokenizer)
    for ex in examples:
        assert len(ex.bio_tags) == len(ex.token_ids) == len(ex.tokens)
        assert is_valid_bio(ex.bio_tags)
        assert any(t != "O" for t in ex.bio_tags)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


def tiny_training_setup(n_per_frame=3, seed=0):
    gold = synth_gold(n_per_frame=n_per_frame, seed=seed, words_per_text=(20, 30))
    tokenizer = WordTokenizer.build(r.text for r in gold)
    return build_examples(gold, tokenizer), tokenizer


def test_missing_frame_aborts():
    gold = [g for g in synth_gold(n_per_frame=2, seed=0) if g.frame is not Frame.MORAL]
    tokenizer = WordTokenizer.build(r.text for r in gold)
    examples = build_examples(gold, tokenizer)
    with pytest.raises(ValueError, match="moral"):
        train(examples, epochs=1, tokenizer=tokenizer)


def test_training_smoke_and_loss_decomposition():
    examples, tokenizer = tiny_training_setup()
    model, result = train(examples, epochs=3, seed=11, tokenizer=tokenizer, eval_epochs=(1, 2, 3))
    assert set(result.metrics_by_epoch) == {1, 2, 3}
    for frame_loss, span_loss, total in result.epoch_losses:
        assert total == pytest.approx(frame_loss + span_loss, abs=1e-6)
    metrics = result.metrics_by_epoch[3]
    assert metrics.loss_total == pytest.approx(metrics.loss_frame + metrics.loss_span, abs=1e-9)
    total_examples = sum(sum(row) for row in metrics.confusion)
    assert total_examples == len(examples)


def test_training_determinism_same_seed():
    examples, tokenizer = tiny_training_setup()
    _, a = train(examples, epochs=5, seed=7, tokenizer=tokenizer, eval_epochs=(5,))
    _, b = train(examples, epochs=5, seed=7, tokenizer=tokenizer, eval_epochs=(5,))
    assert a.metrics_by_epoch[5].to_json() == b.metrics_by_epoch[5].to_json()
    assert a.epoch_losses == b.epoch_losses


def test_lambda_weighting_changes_total():
    examples, tokenizer = tiny_training_setup()
    _, result = train(examples, epochs=1, seed=3, tokenizer=tokenizer, lambda_span=2.0, eval_epochs=(1,))
    frame_loss, span_loss, total = result.epoch_losses[0]
    assert total == pytest.approx(frame_loss + 2.0 * span_loss, abs=1e-6)


def test_checkpoint_round_trip(tmp_path):
    examples, tokenizer = tiny_training_setup()
    model, result = train(
        examples, epochs=2, seed=1, tokenizer=tokenizer, eval_epochs=(2,), checkpoint_dir=tmp_path
    )
    assert (tmp_path / "run_manifest.json").exists()
    path = result.checkpoints[2]
    loaded, loaded_tok = load_checkpoint(path)
    assert loaded_tok.vocab == tokenizer.vocab
    before = evaluate(model, examples)
    after = evaluate(loaded, examples)
    assert before.confusion == after.confusion


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


def as_chunks(examples):
    return [
        ChunkRecord(
            chunk_id=ex.chunk_id,
            episode_id="e",
            index=i,
            text=ex.text,
            token_count=len(ex.tokens),
            char_start=0,
            char_end=len(ex.text),
        )
        for i, ex in enumerate(examples)
    ]


def test_predict_empty():
    examples, tokenizer = tiny_training_setup()
    model, _ = train(examples, epochs=1, seed=1, tokenizer=tokenizer, eval_epochs=(1,))
    assert list(predict_batch(model, tokenizer, [])) == []


def test_predictions_bio_valid_and_deterministic(tmp_path):
    examples, tokenizer = tiny_training_setup()
    model, _ = train(examples, epochs=8, seed=2, tokenizer=tokenizer, eval_epochs=(8,))
    chunks = as_chunks(examples)
    full = list(predict_batch(model, tokenizer, chunks, batch_size=4))
    again = list(predict_batch(model, tokenizer, chunks, batch_size=4))
    assert [p.to_json() for p in full] == [p.to_json() for p in again]
    for pred in full:
        for start, end in pred.spans:
            assert 0 <= start < end <= len(dict((c.chunk_id, c.text) for c in chunks)[pred.chunk_id])


def test_predict_resume_matches_uninterrupted(tmp_path):
    examples, tokenizer = tiny_training_setup()
    model, _ = train(examples, epochs=2, seed=9, tokenizer=tokenizer, eval_epochs=(2,))
    chunks = as_chunks(examples)

    clean_path = tmp_path / "clean.jsonl"
    list(predict_batch(model, tokenizer, chunks, batch_size=4, out_path=clean_path))

    resumed_path = tmp_path / "resumed.jsonl"
    # simulate an interrupt: only the first 5 chunks processed
    list(predict_batch(model, tokenizer, chunks[:5], batch_size=4, out_path=resumed_path))
    resumed = list(predict_batch(model, tokenizer, chunks, batch_size=4, out_path=resumed_path))
    assert resumed_path.read_bytes() == clean_path.read_bytes()
    assert [p.chunk_id for p in resumed] == [c.chunk_id for c in chunks]
