"""Zero-shot frame labeling through a chat-completion endpoint, plus the
verification layer that audits returned key phrases against the source chunk.

Every prediction that reaches storage carries a parse status and a verdict
for each key phrase; nothing is stored unaudited.
"""
from __future__ import annotations

import hashlib
import json
import logging
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import httpx

from .corpus import ChunkRecord
from .frames import FRAMES, Frame, parse_frame
from .text import edit_similarity, tokenize_with_offsets, word_boundary

logger = logging.getLogger(__name__)

POSITIONAL_BIAS_WORDS = 50
PARAPHRASE_THRESHOLD = 0.8
WINDOW_SLACK_WORDS = 2


def default_template() -> str:
    return resources.files("framescope.assets").joinpath("prompt_template.txt").read_text(encoding="utf-8")


def template_hash(template: str) -> str:
    return hashlib.sha256(template.encode("utf-8")).hexdigest()[:12]


def render_prompt(chunk: ChunkRecord | str, template: str | None = None) -> str:
    """Fill the chunk text into the labeling template."""
    if template is None:
        template = default_template()
    if "{chunk}" not in template:
        raise ValueError("template must contain a {chunk} placeholder")
    text = chunk if isinstance(chunk, str) else chunk.text
    return template.replace("{chunk}", text)


class ParseStatus(str, Enum):
    OK = "ok"
    REPAIRED = "repaired"
    FAILED = "failed"


class Verdict(str, Enum):
    EXACT = "EXACT"
    PARAPHRASE = "PARAPHRASE"
    ABSENT = "ABSENT"
    PLACEHOLDER = "PLACEHOLDER"


@dataclass(frozen=True)
class PhraseVerdict:
    phrase: str
    verdict: Verdict
    match_span: tuple[int, int] | None
    similarity: float

    def to_json(self) -> dict:
        return {
            "phrase": self.phrase,
            "verdict": self.verdict.value,
            "match_span": list(self.match_span) if self.match_span else None,
            "similarity": round(self.similarity, 4),
        }


@dataclass
class LLMFramePrediction:
    chunk_id: str
    frame: Frame | None
    key_phrases: list[str]
    raw_response: str
    parse_status: ParseStatus
    verdicts: list[PhraseVerdict] = field(default_factory=list)
    template_hash: str = ""

    def to_json(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "frame": self.frame.value if self.frame else None,
            "key_phrases": list(self.key_phrases),
            "parse_status": self.parse_status.value,
            "verdicts": [v.to_json() for v in self.verdicts],
            "template_hash": self.template_hash,
            "raw_response": self.raw_response,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LLMFramePrediction":
        return cls(
            chunk_id=obj["chunk_id"],
            frame=parse_frame(obj["frame"]) if obj.get("frame") else None,
            key_phrases=list(obj.get("key_phrases", [])),
            raw_response=obj.get("raw_response", ""),
            parse_status=ParseStatus(obj.get("parse_status", "failed")),
            verdicts=[
                PhraseVerdict(
                    phrase=v["phrase"],
                    verdict=Verdict(v["verdict"]),
                    match_span=tuple(v["match_span"]) if v.get("match_span") else None,
                    similarity=float(v.get("similarity", 0.0)),
                )
                for v in obj.get("verdicts", [])
            ],
            template_hash=obj.get("template_hash", ""),
        )


_FRAME_LINE_RE = re.compile(r"^\s*FRAME\s*:\s*([A-Za-z]+)\s*$", re.MULTILINE)
_PHRASES_LINE_RE = re.compile(r"^\s*KEY_PHRASES\s*:\s*(\[.*\])\s*$", re.MULTILINE | re.DOTALL)
_BRACKET_RE = re.compile(r"\[(.*?)\]", re.DOTALL)
_QUOTED_RE = re.compile(r"[\"'`‘’“”](.+?)[\"'`‘’“”]")
_LOOSE_PHRASES_RE = re.compile(r"key\s*[_ ]?phrases?\s*(?:are|:)\s*(.+)", re.IGNORECASE)


def _phrases_from_list_text(text: str) -> list[str]:
    quoted = [m.group(1).strip() for m in _QUOTED_RE.finditer(text)]
    if quoted:
        return [p for p in quoted if p]
    return [p.strip() for p in text.split(",") if p.strip()]


def _find_frame_token(raw: str) -> Frame | None:
    lowered = raw.lower()
    hits = []
    for frame in FRAMES:
        m = re.search(rf"\b{frame.value}\b", lowered)
        if m:
            hits.append((m.start(), frame))
    if not hits:
        return None
    return min(hits)[1]


def parse_response(raw: str, chunk_id: str = "") -> LLMFramePrediction:
    """Extract (frame, key phrases) from a model response, tolerantly.

    `ok` means the strict output contract was followed; `repaired` means the
    frame and at least one phrase were recovered from free-form text; both
    guarantee a frame and a non-empty phrase list. Anything else is `failed`.
    """
    frame_m = _FRAME_LINE_RE.search(raw)
    phrases_m = _PHRASES_LINE_RE.search(raw)
    if frame_m and phrases_m:
        try:
            frame = parse_frame(frame_m.group(1))
        except ValueError:
            frame = None
        phrases = _phrases_from_list_text(phrases_m.group(1))
        if frame is not None and phrases:
            return LLMFramePrediction(chunk_id, frame, phrases, raw, ParseStatus.OK)

    frame = _find_frame_token(raw)
    phrases: list[str] = []
    bracket = _BRACKET_RE.search(raw)
    if bracket:
        phrases = _phrases_from_list_text(bracket.group(1))
    if not phrases:
        loose = _LOOSE_PHRASES_RE.search(raw)
        if loose:
            line = loose.group(1).splitlines()[0].rstrip(".")
            phrases = _phrases_from_list_text(line)
    if frame is not None and phrases:
        return LLMFramePrediction(chunk_id, frame, phrases, raw, ParseStatus.REPAIRED)
    return LLMFramePrediction(chunk_id, None, [], raw, ParseStatus.FAILED)


_PLACEHOLDER_RE = re.compile(r"^phrase\s*\d+$")


def _normalize_phrase(phrase: str) -> str:
    return re.sub(r"\s+", " ", phrase.strip().strip("\"'`").casefold())


def verify_key_phrases(chunk_text: str, phrases: Sequence[str]) -> list[PhraseVerdict]:
    """Audit each phrase against the chunk.

    EXACT: verbatim case-insensitive substring. PARAPHRASE: best sliding
    window (phrase length ±2 words) reaches normalized edit similarity >=
    0.8 after case-folding. PLACEHOLDER: a literal `phraseN` echo of the
    prompt's format example. ABSENT: none of the above.
    """
    chunk_folded = chunk_text.casefold()
    words = tokenize_with_offsets(chunk_text)
    verdicts: list[PhraseVerdict] = []
    for phrase in phrases:
        norm = _normalize_phrase(phrase)
        if _PLACEHOLDER_RE.match(norm):
            verdicts.append(PhraseVerdict(phrase, Verdict.PLACEHOLDER, None, 0.0))
            continue
        if not norm:
            verdicts.append(PhraseVerdict(phrase, Verdict.ABSENT, None, 0.0))
            continue
        at = chunk_folded.find(norm)
        if at >= 0:
            verdicts.append(PhraseVerdict(phrase, Verdict.EXACT, (at, at + len(norm)), 1.0))
            continue
        n = len(norm.split())
        best_sim, best_span = 0.0, None
        for width in range(max(1, n - WINDOW_SLACK_WORDS), n + WINDOW_SLACK_WORDS + 1):
            for i in range(0, len(words) - width + 1):
                window = words[i : i + width]
                candidate = chunk_text[window[0].start : window[-1].end].casefold()
                sim = edit_similarity(norm, candidate)
                if sim > best_sim:
                    best_sim = sim
                    best_span = (window[0].start, window[-1].end)
        if best_sim >= PARAPHRASE_THRESHOLD:
            verdicts.append(PhraseVerdict(phrase, Verdict.PARAPHRASE, best_span, best_sim))
        else:
            verdicts.append(PhraseVerdict(phrase, Verdict.ABSENT, None, best_sim))
    return verdicts


def positional_bias(chunk_text: str, verdicts: Sequence[PhraseVerdict]) -> float | None:
    """Fraction of matched phrases starting within the chunk's first 50 words.

    None when no phrase matched at all.
    """
    matched = [v for v in verdicts if v.match_span is not None]
    if not matched:
        return None
    boundary = word_boundary(chunk_text, POSITIONAL_BIAS_WORDS)
    early = sum(1 for v in matched if v.match_span[0] < boundary)
    return early / len(matched)


@dataclass
class FrameQuotaReport:
    counts: dict[Frame, int]
    min_count: int
    deficient: tuple[Frame, ...]

    def to_json(self) -> dict:
        return {
            "counts": {f.value: self.counts.get(f, 0) for f in FRAMES},
            "min_count": self.min_count,
            "deficient": [f.value for f in self.deficient],
        }


def filter_min_per_frame(
    predictions: Sequence[LLMFramePrediction],
    min_count: int = 1000,
) -> tuple[list[LLMFramePrediction], FrameQuotaReport]:
    """Tally parsed predictions per frame and flag frames short of `min_count`.

    Predictions pass through unchanged; deficient frames are flagged for
    additional sampling upstream.
    """
    counts = {f: 0 for f in FRAMES}
    for pred in predictions:
        if pred.frame is not None and pred.parse_status != ParseStatus.FAILED:
            counts[pred.frame] += 1
    deficient = tuple(f for f in FRAMES if counts[f] < min_count)
    return list(predictions), FrameQuotaReport(counts=counts, min_count=min_count, deficient=deficient)


class LLMClient(Protocol):
    def complete(self, prompt: str, **params) -> str: ...


class HttpChatClient:
    """Chat-completions transport with retry and exponential backoff."""

    RETRYABLE = {429, 500, 502, 503, 504}

    def __init__(
        self,
        endpoint: str,
        model: str = "",
        api_key: str | None = None,
        timeout: float = 60.0,
        max_retries: int = 3,
        backoff: float = 0.5,
        temperature: float = 0.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.temperature = temperature

    def complete(self, prompt: str, **params) -> str:
        payload = {
            "model": params.pop("model", self.model),
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.pop("temperature", self.temperature),
        }
        payload.update(params)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = httpx.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
                if resp.status_code in self.RETRYABLE:
                    last_error = RuntimeError(f"HTTP {resp.status_code} from {self.endpoint}")
                elif resp.status_code >= 400:
                    raise RuntimeError(f"HTTP {resp.status_code} from {self.endpoint}: {resp.text[:200]}")
                else:
                    return resp.json()["choices"][0]["message"]["content"]
            except (httpx.TransportError, KeyError, ValueError) as exc:
                last_error = exc
            if attempt < self.max_retries:
                time.sleep(self.backoff * 2**attempt)
        raise RuntimeError(f"completion failed after {self.max_retries + 1} attempts") from last_error


class RuleStubClient:
    """Deterministic offline stand-in: keyword votes pick the frame, and the
    matched keywords (as they occur in the chunk) become the key phrases."""

    def __init__(self, frame_vocab: dict[Frame, Sequence[str]] | None = None):
        if frame_vocab is None:
            from .features import load_lexicons

            frame_vocab = load_lexicons().frame_vocab
        self.frame_vocab = {f: tuple(v) for f, v in frame_vocab.items()}

    def complete(self, prompt: str, **params) -> str:
        # The chunk is the template's final block before the output contract.
        m = re.search(r"Segment:\n(.*?)\n\nRespond", prompt, re.DOTALL)
        text = m.group(1) if m else prompt
        folded = text.casefold()
        votes: dict[Frame, list[str]] = {}
        for frame, terms in self.frame_vocab.items():
            hits = [t for t in terms if re.search(rf"\b{re.escape(t)}\b", folded)]
            if hits:
                votes[frame] = hits
        if votes:
            frame = max(votes, key=lambda f: (len(votes[f]), -FRAMES.index(f)))
            phrases = votes[frame][:3]
        else:
            frame = Frame.SOCIAL
            phrases = [" ".join(text.split()[:2]) or "general talk"]
        listed = ", ".join(json.dumps(p) for p in phrases)
        return f"FRAME: {frame.value}\nKEY_PHRASES: [{listed}]"


def annotate_chunk(
    chunk: ChunkRecord,
    client: LLMClient,
    template: str | None = None,
    **params,
) -> LLMFramePrediction:
    """Prompt, parse, and audit one chunk; the returned record is storage-ready."""
    if template is None:
        template = default_template()
    raw = client.complete(render_prompt(chunk, template), **params)
    pred = parse_response(raw, chunk_id=chunk.chunk_id)
    pred.verdicts = verify_key_phrases(chunk.text, pred.key_phrases)
    pred.template_hash = template_hash(template)
    return pred


def annotate_chunks(
    chunks: Sequence[ChunkRecord],
    client: LLMClient,
    template: str | None = None,
    max_inflight: int = 8,
    **params,
) -> list[LLMFramePrediction]:
    """Annotate chunks with a bounded concurrent request pool (input order kept)."""
    if template is None:
        template = default_template()
    if max_inflight <= 1 or len(chunks) <= 1:
        return [annotate_chunk(c, client, template, **params) for c in chunks]
    with ThreadPoolExecutor(max_workers=max_inflight) as pool:
        futures = [pool.submit(annotate_chunk, c, client, template, **params) for c in chunks]
        return [f.result() for f in futures]


def write_predictions(predictions: Iterable[LLMFramePrediction], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        for pred in predictions:
            fh.write(json.dumps(pred.to_json(), ensure_ascii=False) + "\n")
            n += 1
    return n


def read_predictions(path: str | Path) -> list[LLMFramePrediction]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(LLMFramePrediction.from_json(json.loads(line)))
    return out
