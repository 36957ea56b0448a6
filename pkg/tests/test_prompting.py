from __future__ import annotations

import json

import pytest

from framescope.corpus import ChunkRecord
from framescope.frames import FRAMES, Frame
from framescope.prompting import (
    HttpChatClient,
    LLMFramePrediction,
    ParseStatus,
    RuleStubClient,
    Verdict,
    annotate_chunk,
    annotate_chunks,
    default_template,
    filter_min_per_frame,
    parse_response,
    positional_bias,
    read_predictions,
    render_prompt,
    template_hash,
    verify_key_phrases,
    write_predictions,
)


def chunk(text, chunk_id="c1"):
    return ChunkRecord(
        chunk_id=chunk_id,
        episode_id="e1",
        index=0,
        text=text,
        token_count=len(text.split()),
        char_start=0,
        char_end=len(text),
    )


# ---------------------------------------------------------------------------
# Prompt rendering
# ---------------------------------------------------------------------------


def test_template_contains_all_frames_and_contract():
    template = default_template()
    for frame in FRAMES:
        assert f"- {frame.value}:" in template
    assert "FRAME:" in template and "KEY_PHRASES:" in template
    prompt = render_prompt(chunk("the segment body here"), template)
    assert "the segment body here" in prompt


def test_render_requires_placeholder():
    with pytest.raises(ValueError):
        render_prompt(chunk("x"), "no placeholder at all")


# ---------------------------------------------------------------------------
# Response parsing
# ---------------------------------------------------------------------------


def test_parse_contract_conforming():
    pred = parse_response('FRAME: moral\nKEY_PHRASES: ["forgiveness", "sin"]')
    assert pred.frame is Frame.MORAL
    assert pred.key_phrases == ["forgiveness", "sin"]
    assert pred.parse_status is ParseStatus.OK


def test_parse_tolerant_path():
    pred = parse_response("The frame is Legal. Key phrases: law, court")
    assert pred.frame is Frame.LEGAL
    assert pred.key_phrases == ["law", "court"]
    assert pred.parse_status is ParseStatus.REPAIRED


def test_parse_single_quotes_bracket_list():
    pred = parse_response("FRAME: legal\nKEY_PHRASES: ['phrase1', 'phrase2']")
    assert pred.parse_status is ParseStatus.OK
    assert pred.key_phrases == ["phrase1", "phrase2"]


def test_parse_no_frame_token_fails():
    pred = parse_response("I cannot classify this text at all.")
    assert pred.parse_status is ParseStatus.FAILED
    assert pred.frame is None and pred.key_phrases == []


def test_parse_frame_without_phrases_fails():
    pred = parse_response("FRAME: health")
    assert pred.parse_status is ParseStatus.FAILED


def test_parse_uppercase_label_ok():
    pred = parse_response('FRAME: FINANCIAL\nKEY_PHRASES: ["market crash"]')
    assert pred.frame is Frame.FINANCIAL
    assert pred.parse_status is ParseStatus.OK


def test_parse_noisy_preamble_is_repaired():
    pred = parse_response("Sure! the FRAME here is financial.\nKEY_PHRASES: [\"market crash\"]\nHope that helps.")
    assert pred.frame is Frame.FINANCIAL
    assert pred.key_phrases == ["market crash"]
    assert pred.parse_status is ParseStatus.REPAIRED


# ---------------------------------------------------------------------------
# Key-phrase verification (hallucination audit)
# ---------------------------------------------------------------------------

WARBIRD_CHUNK = (
    "you climb into one of these old war birds and you go fly above the clouds "
    "and the aircraft feels like a time machine"
)


def test_verbatim_phrase_exact():
    verdicts = verify_key_phrases(WARBIRD_CHUNK, ["war birds", "aircraft"])
    assert [v.verdict for v in verdicts] == [Verdict.EXACT, Verdict.EXACT]
    v = verdicts[0]
    assert v.similarity == 1.0
    assert WARBIRD_CHUNK[v.match_span[0] : v.match_span[1]] == "war birds"


def test_exact_is_case_insensitive():
    verdicts = verify_key_phrases("The Supreme Court ruled today", ["supreme court"])
    assert verdicts[0].verdict is Verdict.EXACT


def test_paraphrase_inflection():
    text = "I appreciate that. I don't look forward to trying the end of June."
    verdicts = verify_key_phrases(text, ["looking forward"])
    assert verdicts[0].verdict is Verdict.PARAPHRASE
    assert verdicts[0].similarity >= 0.8
    start, end = verdicts[0].match_span
    assert "look forward" in text[start:end]


def test_absent_phrase():
    verdicts = verify_key_phrases("we talked about gardening all afternoon", ["court"])
    assert verdicts[0].verdict is Verdict.ABSENT
    assert verdicts[0].match_span is None


def test_placeholder_echoes():
    verdicts = verify_key_phrases("any chunk text", ["phrase1", "phrase2", "Phrase 3"])
    assert all(v.verdict is Verdict.PLACEHOLDER for v in verdicts)


def test_exact_never_downgrades_to_paraphrase():
    text = "the regulation was passed by the court"
    verdicts = verify_key_phrases(text, ["regulation"])
    assert verdicts[0].verdict is Verdict.EXACT


def test_verification_order_preserved_and_deterministic():
    phrases = ["court", "regulation was", "phrase1", "missing thing"]
    text = "the regulation was passed"
    first = verify_key_phrases(text, phrases)
    second = verify_key_phrases(text, phrases)
    assert [v.phrase for v in first] == phrases
    assert first == second


# ---------------------------------------------------------------------------
# Positional bias
# ---------------------------------------------------------------------------


def long_chunk():
    words = [f"w{i}" for i in range(120)]
    return " ".join(words)


def test_positional_bias_all_early():
    text = long_chunk()
    verdicts = verify_key_phrases(text, ["w0 w1", "w10"])
    assert positional_bias(text, verdicts) == 1.0


def test_positional_bias_all_late():
    text = long_chunk()
    verdicts = verify_key_phrases(text, ["w80 w81", "w100"])
    assert positional_bias(text, verdicts) == 0.0


def test_positional_bias_mixed_and_null():
    text = long_chunk()
    verdicts = verify_key_phrases(text, ["w0", "w100"])
    assert positional_bias(text, verdicts) == 0.5
    none_matched = verify_key_phrases(text, ["absent phrase"])
    assert positional_bias(text, none_matched) is None


# ---------------------------------------------------------------------------
# Frame quota report
# ---------------------------------------------------------------------------


def test_filter_min_per_frame_counts_and_flags():
    preds = []
    for i in range(5):
        preds.append(LLMFramePrediction(f"c{i}", Frame.MORAL, ["x"], "", ParseStatus.OK))
    preds.append(LLMFramePrediction("c9", Frame.LEGAL, ["y"], "", ParseStatus.REPAIRED))
    preds.append(LLMFramePrediction("c10", None, [], "", ParseStatus.FAILED))
    out, report = filter_min_per_frame(preds, min_count=3)
    assert out == preds
    assert report.counts[Frame.MORAL] == 5
    assert report.counts[Frame.LEGAL] == 1
    assert Frame.MORAL not in report.deficient
    assert Frame.LEGAL in report.deficient and Frame.SOCIAL in report.deficient


# ---------------------------------------------------------------------------
# Clients
# ---------------------------------------------------------------------------


def test_stub_client_is_deterministic_and_contract_shaped():
    client = RuleStubClient()
    prompt = render_prompt(chunk("the court passed a regulation about the law"))
    raw = client.complete(prompt)
    assert raw == client.complete(prompt)
    pred = parse_response(raw)
    assert pred.parse_status is ParseStatus.OK
    assert pred.frame is Frame.LEGAL
    assert all(p in "the court passed a regulation about the law" for p in pred.key_phrases)


def test_annotate_chunk_attaches_audit_and_hash():
    c = chunk("the court passed a regulation about the law")
    pred = annotate_chunk(c, RuleStubClient())
    assert pred.template_hash == template_hash(default_template())
    assert len(pred.verdicts) == len(pred.key_phrases)
    assert all(v.verdict is Verdict.EXACT for v in pred.verdicts)


def test_annotate_chunks_parallel_keeps_order():
    chunks = [chunk(f"the court ruled case number {i}", chunk_id=f"c{i}") for i in range(10)]
    preds = annotate_chunks(chunks, RuleStubClient(), max_inflight=4)
    assert [p.chunk_id for p in preds] == [c.chunk_id for c in chunks]


def test_http_client_retries_then_succeeds(monkeypatch):
    calls = {"n": 0}

    class FakeResponse:
        def __init__(self, status_code, payload=None):
            self.status_code = status_code
            self._payload = payload or {}
            self.text = json.dumps(self._payload)

        def json(self):
            return self._payload

    def fake_post(url, json=None, headers=None, timeout=None):
        calls["n"] += 1
        if calls["n"] < 3:
            return FakeResponse(503)
        return FakeResponse(200, {"choices": [{"message": {"content": "FRAME: moral\nKEY_PHRASES: [\"sin\"]"}}]})

    monkeypatch.setattr("framescope.prompting.httpx.post", fake_post)
    client = HttpChatClient("http://example.test/v1/chat", backoff=0.0)
    raw = client.complete("prompt text")
    assert calls["n"] == 3
    assert "FRAME: moral" in raw


def test_http_client_gives_up(monkeypatch):
    class FakeResponse:
        status_code = 503
        text = "busy"

        def json(self):
            return {}

    monkeypatch.setattr("framescope.prompting.httpx.post", lambda *a, **k: FakeResponse())
    client = HttpChatClient("http://example.test/v1/chat", backoff=0.0, max_retries=2)
    with pytest.raises(RuntimeError, match="after 3 attempts"):
        client.complete("prompt")


def test_prediction_storage_round_trip(tmp_path):
    c = chunk("the court passed a regulation")
    pred = annotate_chunk(c, RuleStubClient())
    path = tmp_path / "preds.jsonl"
    assert write_predictions([pred], path) == 1
    loaded = read_predictions(path)
    assert loaded[0].chunk_id == pred.chunk_id
    assert loaded[0].frame == pred.frame
    assert loaded[0].verdicts == pred.verdicts
    assert loaded[0].template_hash == pred.template_hash
