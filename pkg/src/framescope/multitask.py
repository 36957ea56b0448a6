"""Joint frame classification and key-phrase span detection.

A compact transformer encoder carries two heads: a 6-way frame classifier
on the leading [CLS] position and a per-token B/I/O tagger for rationale
spans. Both heads train with cross-entropy; the total loss is
frame + lambda * span at every step. The gold input format is shared with
the annotation service's export (see docs/formats.md).

The default encoder is intentionally small so desk-scale runs finish in
minutes on a CPU; the architecture is configurable for larger budgets.
"""
from __future__ import annotations

import hashlib
import json
import logging
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import torch
from torch import nn

from .corpus import ChunkRecord
from .frames import FRAMES, Frame, parse_frame
from .goldio import (  # noqa: F401  (re-exported: the trainer's input format)
    GoldRecord,
    KeyPhrase,
    gold_record_from_json,
    gold_record_to_json,
    gold_record_to_line,
    load_gold,
    write_gold,
)
from .text import Token, tokenize_with_offsets

logger = logging.getLogger(__name__)

BIO_TAGS = ("O", "B", "I")
PAD_ID, UNK_ID, CLS_ID = 0, 1, 2
DEFAULT_EVAL_EPOCHS = (5, 10, 15, 20, 30)
MAX_SEQ_LEN = 512


class SpanOutOfBoundsError(ValueError):
    def __init__(self, span: tuple[int, int], length: int):
        super().__init__(f"span ({span[0]}, {span[1]}) outside text of length {length}")
        self.span = span


def f1_from_precision_recall(precision: float, recall: float) -> float:
    """Harmonic mean; 0 when both sides are 0."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


# ---------------------------------------------------------------------------
# Tokenization and BIO alignment
# ---------------------------------------------------------------------------


class WordTokenizer:
    """Whitespace tokenizer with a fixed vocabulary and char offsets."""

    def __init__(self, vocab: dict[str, int]):
        self.vocab = vocab

    @classmethod
    def build(cls, texts: Iterable[str], max_vocab: int = 20000) -> "WordTokenizer":
        counts = Counter()
        for text in texts:
            counts.update(w.casefold() for w in text.split())
        vocab = {"[PAD]": PAD_ID, "[UNK]": UNK_ID, "[CLS]": CLS_ID}
        for word, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[: max_vocab - 3]:
            vocab[word] = len(vocab)
        return cls(vocab)

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def tokenize(self, text: str) -> list[Token]:
        return tokenize_with_offsets(text)

    def encode(self, text: str) -> tuple[list[int], list[Token]]:
        tokens = self.tokenize(text)
        ids = [self.vocab.get(t.text.casefold(), UNK_ID) for t in tokens]
        return ids, tokens


def merge_spans(spans: Sequence[tuple[int, int]]) -> list[tuple[int, int]]:
    """Merge overlapping or touching character intervals."""
    merged: list[list[int]] = []
    for start, end in sorted(spans):
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return [(s, e) for s, e in merged]


def align_spans_to_bio(
    chunk_text: str,
    key_phrase_spans: Sequence[tuple[int, int]],
    tokenizer: WordTokenizer | None = None,
) -> list[str]:
    """Project character spans onto whitespace tokens as B/I/O tags.

    The token overlapping a span's start gets B; later tokens overlapping the
    same span get I. Overlapping gold spans are merged first.
    """
    tokens = (tokenizer or WordTokenizer({})).tokenize(chunk_text)
    n = len(chunk_text)
    for span in key_phrase_spans:
        if span[0] < 0 or span[1] > n or span[0] >= span[1]:
            raise SpanOutOfBoundsError((span[0], span[1]), n)
    tags = ["O"] * len(tokens)
    for start, end in merge_spans(key_phrase_spans):
        first = True
        for i, tok in enumerate(tokens):
            if tok.end <= start or tok.start >= end:
                continue
            tags[i] = "B" if first else "I"
            first = False
    return tags


def decode_spans(bio_tags: Sequence[str], tokens: Sequence[Token]) -> list[tuple[int, int]]:
    """Turn maximal B(I)* runs back into character spans.

    An orphan I (no preceding B/I) is repaired as B rather than dropped.
    """
    if len(bio_tags) != len(tokens):
        raise ValueError("bio_tags/tokens length mismatch")
    spans: list[tuple[int, int]] = []
    open_start: int | None = None
    last_end = 0
    for tag, tok in zip(bio_tags, tokens):
        if tag == "B" or (tag == "I" and open_start is None):
            if open_start is not None:
                spans.append((open_start, last_end))
            open_start = tok.start
            last_end = tok.end
        elif tag == "I":
            last_end = tok.end
        else:
            if open_start is not None:
                spans.append((open_start, last_end))
                open_start = None
    if open_start is not None:
        spans.append((open_start, last_end))
    return spans


def is_valid_bio(tags: Sequence[str]) -> bool:
    prev = "O"
    for tag in tags:
        if tag not in BIO_TAGS:
            return False
        if tag == "I" and prev == "O":
            return False
        prev = tag
    return True


@dataclass
class TrainingExample:
    chunk_id: str
    text: str
    tokens: list[Token]
    token_ids: list[int]
    frame: Frame
    bio_tags: list[str]


def build_examples(
    gold: Sequence[GoldRecord],
    tokenizer: WordTokenizer,
    max_len: int = MAX_SEQ_LEN,
) -> list[TrainingExample]:
    examples = []
    truncated = 0
    for record in gold:
        ids, tokens = tokenizer.encode(record.text)
        tags = align_spans_to_bio(record.text, [(p.start, p.end) for p in record.key_phrases], tokenizer)
        if len(ids) > max_len - 1:  # leave room for [CLS]
            ids, tokens, tags = ids[: max_len - 1], tokens[: max_len - 1], tags[: max_len - 1]
            truncated += 1
        examples.append(TrainingExample(record.chunk_id, record.text, tokens, ids, record.frame, tags))
    if truncated:
        logger.warning("truncated %d/%d examples to %d tokens", truncated, len(gold), max_len - 1)
    return examples


def stratified_split(
    examples: Sequence[TrainingExample],
    eval_fraction: float = 0.2,
    seed: int = 0,
) -> tuple[list[TrainingExample], list[TrainingExample]]:
    """Per-frame split so every frame appears in both halves when possible."""
    rng = random.Random(f"{seed}|split")
    train: list[TrainingExample] = []
    held: list[TrainingExample] = []
    by_frame: dict[Frame, list[TrainingExample]] = {f: [] for f in FRAMES}
    for ex in examples:
        by_frame[ex.frame].append(ex)
    for frame in FRAMES:
        group = sorted(by_frame[frame], key=lambda ex: ex.chunk_id)
        rng.shuffle(group)
        n_eval = int(round(len(group) * eval_fraction))
        if len(group) > 1:
            n_eval = min(max(n_eval, 1), len(group) - 1)
        else:
            n_eval = 0
        held.extend(group[:n_eval])
        train.extend(group[n_eval:])
    train.sort(key=lambda ex: ex.chunk_id)
    held.sort(key=lambda ex: ex.chunk_id)
    return train, held


# ---------------------------------------------------------------------------
# Model
# ---------------------------------------------------------------------------


@dataclass
class EncoderConfig:
    vocab_size: int
    d_model: int = 64
    n_heads: int = 4
    n_layers: int = 2
    ffn_dim: int = 128
    dropout: float = 0.1
    max_len: int = MAX_SEQ_LEN
    n_frames: int = len(FRAMES)
    n_tags: int = len(BIO_TAGS)

    def to_json(self) -> dict:
        return dict(self.__dict__)


class MultiTaskEncoder(nn.Module):
    """Transformer encoder with a frame head ([CLS]) and a BIO tag head."""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        self.embed = nn.Embedding(config.vocab_size, config.d_model, padding_idx=PAD_ID)
        self.pos_embed = nn.Embedding(config.max_len, config.d_model)
        layer = nn.TransformerEncoderLayer(
            d_model=config.d_model,
            nhead=config.n_heads,
            dim_feedforward=config.ffn_dim,
            dropout=config.dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=config.n_layers, enable_nested_tensor=False)
        self.frame_head = nn.Linear(config.d_model, config.n_frames)
        self.span_head = nn.Linear(config.d_model, config.n_tags)

    def forward(self, ids: torch.Tensor, mask: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        positions = torch.arange(ids.size(1), device=ids.device).unsqueeze(0)
        hidden = self.embed(ids) + self.pos_embed(positions)
        hidden = self.encoder(hidden, src_key_padding_mask=~mask)
        frame_logits = self.frame_head(hidden[:, 0, :])
        tag_logits = self.span_head(hidden[:, 1:, :])  # skip [CLS]
        return frame_logits, tag_logits


def _pad_batch(examples: Sequence[TrainingExample], device: torch.device):
    width = max(len(ex.token_ids) for ex in examples) + 1  # +1 for [CLS]
    ids = torch.full((len(examples), width), PAD_ID, dtype=torch.long)
    mask = torch.zeros((len(examples), width), dtype=torch.bool)
    tags = torch.full((len(examples), width - 1), -100, dtype=torch.long)
    frames = torch.zeros(len(examples), dtype=torch.long)
    for row, ex in enumerate(examples):
        seq = [CLS_ID] + ex.token_ids
        ids[row, : len(seq)] = torch.tensor(seq, dtype=torch.long)
        mask[row, : len(seq)] = True
        tags[row, : len(ex.bio_tags)] = torch.tensor(
            [BIO_TAGS.index(t) for t in ex.bio_tags], dtype=torch.long
        )
        frames[row] = FRAMES.index(ex.frame)
    return ids.to(device), mask.to(device), tags.to(device), frames.to(device)


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass
class FrameMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass
class EpochMetrics:
    epoch: int
    per_frame: dict[str, FrameMetrics]
    confusion: list[list[int]]  # rows = gold, cols = predicted, FRAMES order
    span_f1: float
    loss_frame: float = 0.0
    loss_span: float = 0.0
    loss_total: float = 0.0

    @property
    def frame_accuracy(self) -> float:
        total = sum(sum(row) for row in self.confusion)
        if total == 0:
            return 0.0
        return sum(self.confusion[i][i] for i in range(len(self.confusion))) / total

    def to_json(self) -> dict:
        return {
            "epoch": self.epoch,
            "per_frame": {
                name: {
                    "precision": round(m.precision, 6),
                    "recall": round(m.recall, 6),
                    "f1": round(m.f1, 6),
                    "support": m.support,
                }
                for name, m in self.per_frame.items()
            },
            "confusion": self.confusion,
            "span_f1": round(self.span_f1, 6),
            "frame_accuracy": round(self.frame_accuracy, 6),
            "loss_frame": round(self.loss_frame, 6),
            "loss_span": round(self.loss_span, 6),
            "loss_total": round(self.loss_total, 6),
        }


def metrics_from_confusion(confusion: Sequence[Sequence[int]], epoch: int = 0, span_f1: float = 0.0) -> EpochMetrics:
    """Per-frame precision (column-wise), recall (row-wise), and F1 from counts."""
    n = len(confusion)
    per_frame: dict[str, FrameMetrics] = {}
    for i, frame in enumerate(FRAMES[:n]):
        col_total = sum(confusion[r][i] for r in range(n))
        row_total = sum(confusion[i])
        correct = confusion[i][i]
        precision = correct / col_total if col_total else 0.0
        recall = correct / row_total if row_total else 0.0
        per_frame[frame.value] = FrameMetrics(
            precision=precision,
            recall=recall,
            f1=f1_from_precision_recall(precision, recall),
            support=row_total,
        )
    return EpochMetrics(
        epoch=epoch,
        per_frame=per_frame,
        confusion=[list(map(int, row)) for row in confusion],
        span_f1=span_f1,
    )


@torch.no_grad()
def evaluate(
    model: MultiTaskEncoder,
    examples: Sequence[TrainingExample],
    batch_size: int = 32,
    epoch: int = 0,
    lambda_span: float = 1.0,
) -> EpochMetrics:
    """Confusion-matrix metrics plus exact-span-match F1 after BIO decoding."""
    device = next(model.parameters()).device
    model.eval()
    confusion = [[0] * len(FRAMES) for _ in FRAMES]
    span_tp = span_pred = span_gold = 0
    frame_loss_sum = span_loss_sum = 0.0
    n_batches = 0
    ce = nn.CrossEntropyLoss()
    ce_tags = nn.CrossEntropyLoss(ignore_index=-100)

    for at in range(0, len(examples), batch_size):
        batch = examples[at : at + batch_size]
        ids, mask, tags, frames = _pad_batch(batch, device)
        frame_logits, tag_logits = model(ids, mask)
        frame_loss_sum += float(ce(frame_logits, frames))
        span_loss_sum += float(ce_tags(tag_logits.reshape(-1, len(BIO_TAGS)), tags.reshape(-1)))
        n_batches += 1
        pred_frames = frame_logits.argmax(dim=-1).tolist()
        pred_tags = tag_logits.argmax(dim=-1).tolist()
        for row, ex in enumerate(batch):
            confusion[FRAMES.index(ex.frame)][pred_frames[row]] += 1
            n_tok = len(ex.tokens)
            decoded = decode_spans([BIO_TAGS[t] for t in pred_tags[row][:n_tok]], ex.tokens)
            gold = decode_spans(ex.bio_tags, ex.tokens)
            gold_set = set(gold)
            span_tp += sum(1 for s in decoded if s in gold_set)
            span_pred += len(decoded)
            span_gold += len(gold)

    p = span_tp / span_pred if span_pred else 0.0
    r = span_tp / span_gold if span_gold else 0.0
    metrics = metrics_from_confusion(confusion, epoch=epoch, span_f1=f1_from_precision_recall(p, r))
    if n_batches:
        metrics.loss_frame = frame_loss_sum / n_batches
        metrics.loss_span = span_loss_sum / n_batches
        metrics.loss_total = metrics.loss_frame + lambda_span * metrics.loss_span
    return metrics


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainResult:
    metrics_by_epoch: dict[int, EpochMetrics]
    epoch_losses: list[tuple[float, float, float]]  # (frame, span, total) means per epoch
    checkpoints: dict[int, Path] = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)


def _seed_everything(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)


def save_checkpoint(model: MultiTaskEncoder, tokenizer: WordTokenizer, path: str | Path) -> None:
    torch.save(
        {
            "config": model.config.to_json(),
            "state_dict": model.state_dict(),
            "vocab": tokenizer.vocab,
        },
        path,
    )


def load_checkpoint(path: str | Path) -> tuple[MultiTaskEncoder, WordTokenizer]:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    config = EncoderConfig(**payload["config"])
    model = MultiTaskEncoder(config)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, WordTokenizer(payload["vocab"])


def train(
    examples: Sequence[TrainingExample],
    epochs: int = 30,
    lambda_span: float = 1.0,
    seed: int = 0,
    *,
    eval_examples: Sequence[TrainingExample] | None = None,
    tokenizer: WordTokenizer | None = None,
    config: EncoderConfig | None = None,
    lr: float = 2e-3,
    batch_size: int = 16,
    eval_epochs: Sequence[int] = DEFAULT_EVAL_EPOCHS,
    checkpoint_dir: str | Path | None = None,
) -> tuple[MultiTaskEncoder, TrainResult]:
    """Train the two-head encoder; loss = frame CE + lambda_span * span CE.

    Deterministic under a fixed seed (single-threaded CPU math). Metrics and
    checkpoints are produced at every epoch in `eval_epochs` plus the final
    epoch; every frame must appear in the training labels.
    """
    present = {ex.frame for ex in examples}
    missing = [f.value for f in FRAMES if f not in present]
    if missing:
        raise ValueError(f"frames missing from training labels: {', '.join(missing)}")

    _seed_everything(seed)
    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)  # bitwise reproducibility across runs
    try:
        if config is None:
            if tokenizer is None:
                raise ValueError("either tokenizer or config must be provided")
            config = EncoderConfig(vocab_size=tokenizer.vocab_size)
        device = torch.device("cpu")
        model = MultiTaskEncoder(config).to(device)
        optimizer = torch.optim.Adam(model.parameters(), lr=lr)
        ce = nn.CrossEntropyLoss()
        ce_tags = nn.CrossEntropyLoss(ignore_index=-100)
        order_rng = random.Random(f"{seed}|order")
        eval_set = eval_examples if eval_examples is not None else examples
        eval_at = sorted(set(int(e) for e in eval_epochs if 1 <= int(e) <= epochs) | {epochs})

        result = TrainResult(metrics_by_epoch={}, epoch_losses=[])
        checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir else None
        if checkpoint_dir:
            checkpoint_dir.mkdir(parents=True, exist_ok=True)

        indices = list(range(len(examples)))
        for epoch in range(1, epochs + 1):
            model.train()
            order_rng.shuffle(indices)
            frame_sum = span_sum = total_sum = 0.0
            n_batches = 0
            for at in range(0, len(indices), batch_size):
                batch = [examples[i] for i in indices[at : at + batch_size]]
                ids, mask, tags, frames = _pad_batch(batch, device)
                frame_logits, tag_logits = model(ids, mask)
                loss_frame = ce(frame_logits, frames)
                loss_span = ce_tags(tag_logits.reshape(-1, len(BIO_TAGS)), tags.reshape(-1))
                loss = loss_frame + lambda_span * loss_span
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                frame_sum += loss_frame.item()
                span_sum += loss_span.item()
                total_sum += loss.item()
                n_batches += 1
            result.epoch_losses.append((frame_sum / n_batches, span_sum / n_batches, total_sum / n_batches))

            if epoch in eval_at:
                metrics = evaluate(model, eval_set, batch_size=batch_size, epoch=epoch, lambda_span=lambda_span)
                result.metrics_by_epoch[epoch] = metrics
                if checkpoint_dir:
                    path = checkpoint_dir / f"checkpoint_epoch{epoch:03d}.pt"
                    save_checkpoint(model, tokenizer or WordTokenizer({}), path)
                    result.checkpoints[epoch] = path
                logger.info(
                    "epoch %d: loss=%.4f frame_acc=%.3f span_f1=%.3f",
                    epoch,
                    result.epoch_losses[-1][2],
                    metrics.frame_accuracy,
                    metrics.span_f1,
                )

        run_config = {
            "epochs": epochs,
            "lambda_span": lambda_span,
            "seed": seed,
            "lr": lr,
            "batch_size": batch_size,
            "encoder": config.to_json(),
            "eval_epochs": eval_at,
        }
        result.manifest = {
            "config": run_config,
            "config_hash": hashlib.sha256(json.dumps(run_config, sort_keys=True).encode()).hexdigest()[:12],
            "train_ids": sorted(ex.chunk_id for ex in examples),
            "eval_ids": sorted(ex.chunk_id for ex in eval_set),
        }
        if checkpoint_dir:
            (checkpoint_dir / "run_manifest.json").write_text(
                json.dumps(result.manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            (checkpoint_dir / "epoch_metrics.json").write_text(
                json.dumps({str(e): m.to_json() for e, m in result.metrics_by_epoch.items()}, indent=2)
                + "\n",
                encoding="utf-8",
            )
        return model, result
    finally:
        torch.set_num_threads(n_threads)


# ---------------------------------------------------------------------------
# Corpus-scale inference
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FramePrediction:
    chunk_id: str
    frame: Frame
    spans: tuple[tuple[int, int], ...]
    confidence: float

    def to_json(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "frame": self.frame.value,
            "spans": [list(s) for s in self.spans],
            "confidence": round(self.confidence, 6),
        }


def _prediction_from_json(obj: dict) -> FramePrediction:
    return FramePrediction(
        chunk_id=obj["chunk_id"],
        frame=parse_frame(obj["frame"]),
        spans=tuple((int(s[0]), int(s[1])) for s in obj.get("spans", [])),
        confidence=float(obj.get("confidence", 0.0)),
    )


def read_frame_predictions(path: str | Path) -> list[FramePrediction]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(_prediction_from_json(json.loads(line)))
    return out


@torch.no_grad()
def predict_batch(
    model: MultiTaskEncoder,
    tokenizer: WordTokenizer,
    chunks: Sequence[ChunkRecord],
    batch_size: int = 32,
    out_path: str | Path | None = None,
    log_every: int = 2000,
) -> Iterator[FramePrediction]:
    """Label chunks in order; with `out_path`, progress is checkpointed.

    A re-run after an interrupt skips chunk ids already present in the
    output file and appends the rest, so the completed file matches an
    uninterrupted run byte for byte.
    """
    model.eval()
    device = next(model.parameters()).device
    done: set[str] = set()
    sink = None
    if out_path is not None:
        out_path = Path(out_path)
        if out_path.exists():
            for pred in read_frame_predictions(out_path):
                done.add(pred.chunk_id)
                yield pred
        sink = open(out_path, "a", encoding="utf-8")

    pending = [c for c in chunks if c.chunk_id not in done]
    start = time.monotonic()
    emitted = 0
    try:
        for at in range(0, len(pending), batch_size):
            batch = pending[at : at + batch_size]
            encoded = []
            for chunk in batch:
                ids, tokens = tokenizer.encode(chunk.text)
                if len(ids) > MAX_SEQ_LEN - 1:
                    ids, tokens = ids[: MAX_SEQ_LEN - 1], tokens[: MAX_SEQ_LEN - 1]
                encoded.append((ids, tokens))
            width = max(len(ids) for ids, _ in encoded) + 1
            ids_t = torch.full((len(batch), width), PAD_ID, dtype=torch.long)
            mask_t = torch.zeros((len(batch), width), dtype=torch.bool)
            for row, (ids, _) in enumerate(encoded):
                seq = [CLS_ID] + ids
                ids_t[row, : len(seq)] = torch.tensor(seq, dtype=torch.long)
                mask_t[row, : len(seq)] = True
            frame_logits, tag_logits = model(ids_t.to(device), mask_t.to(device))
            probs = torch.softmax(frame_logits, dim=-1)
            pred_frames = frame_logits.argmax(dim=-1).tolist()
            pred_tags = tag_logits.argmax(dim=-1).tolist()
            for row, chunk in enumerate(batch):
                tokens = encoded[row][1]
                tags = [BIO_TAGS[t] for t in pred_tags[row][: len(tokens)]]
                prediction = FramePrediction(
                    chunk_id=chunk.chunk_id,
                    frame=FRAMES[pred_frames[row]],
                    spans=tuple(decode_spans(tags, tokens)),
                    confidence=float(probs[row, pred_frames[row]]),
                )
                if sink is not None:
                    sink.write(json.dumps(prediction.to_json(), ensure_ascii=False) + "\n")
                    sink.flush()
                emitted += 1
                if log_every and emitted % log_every == 0:
                    rate = emitted / max(time.monotonic() - start, 1e-9)
                    eta = (len(pending) - emitted) / max(rate, 1e-9)
                    logger.info("predicted %d/%d chunks (%.1f/s, eta %.0fs)", emitted, len(pending), rate, eta)
                yield prediction
    finally:
        if sink is not None:
            sink.close()
