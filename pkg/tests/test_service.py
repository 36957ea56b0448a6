from __future__ import annotations

import json

import pytest
from fastapi.testclient import TestClient

from framescope.corpus import ChunkRecord
from framescope.frames import FRAME_NAMES, Frame
from framescope.multitask import WordTokenizer, build_examples, train
from framescope.goldio import load_gold
from framescope.prompting import LLMFramePrediction, ParseStatus, annotate_chunk, RuleStubClient
from framescope.service import AnnotationStore, create_app


def chunk(chunk_id, text):
    return ChunkRecord(
        chunk_id=chunk_id,
        episode_id="e1",
        index=0,
        text=text,
        token_count=len(text.split()),
        char_start=0,
        char_end=len(text),
    )


def prediction(chunk_id, frame, phrases=("x",)):
    return LLMFramePrediction(chunk_id, frame, list(phrases), "raw", ParseStatus.OK)


FRAME_TEXT = {
    "social": "friends and community in the neighborhood",
    "health": "the virus spread and the hospital filled",
    "legal": "the court heard the regulation case",
    "financial": "the market price of the stock fell",
    "security": "police reported the attack downtown",
    "moral": "faith and forgiveness of sin",
}


@pytest.fixture()
def app_client():
    store = AnnotationStore(":memory:")
    items = []
    for name, text in FRAME_TEXT.items():
        for i in range(3):
            cid = f"{name}_{i}"
            items.append((chunk(cid, text), prediction(cid, Frame(name))))
    store.add_tasks(items)
    app = create_app(store, quota=2)
    return TestClient(app), store


def annotation_body(chunk_id, frame="social", spans=(), tags=("none",)):
    return {
        "chunk_id": chunk_id,
        "corrected_frame": frame,
        "corrected_phrases": [{"text": t, "start": s, "end": e} for t, s, e in spans],
        "error_tags": list(tags),
        "annotator_id": "ann1",
    }


def test_tasks_interleaved_by_deficit(app_client):
    client, _ = app_client
    resp = client.get("/tasks", params={"status": "pending", "limit": 6})
    assert resp.status_code == 200
    tasks = resp.json()["tasks"]
    frames = [t["prediction"]["frame"] for t in tasks]
    # equal deficits: one task from every frame before any repeats
    assert sorted(frames) == sorted(FRAME_NAMES)


def test_tasks_frame_filter(app_client):
    client, _ = app_client
    resp = client.get("/tasks", params={"frame": "moral", "limit": 10})
    frames = {t["prediction"]["frame"] for t in resp.json()["tasks"]}
    assert frames == {"moral"}
    assert client.get("/tasks", params={"frame": "bogus"}).status_code == 422


def test_deficit_ordering_prefers_lagging_frames(app_client):
    client, _ = app_client
    # complete two social annotations: social deficit drops to 0
    for i in range(2):
        body = annotation_body(f"social_{i}", frame="social")
        assert client.post("/annotations", json=body).status_code == 200
    resp = client.get("/tasks", params={"limit": 5})
    frames = [t["prediction"]["frame"] for t in resp.json()["tasks"]]
    assert "social" not in frames


def test_submit_updates_progress_and_counts_correction(app_client):
    client, _ = app_client
    text = FRAME_TEXT["moral"]
    spans = [("faith", text.index("faith"), text.index("faith") + 5)]
    body = annotation_body("moral_0", frame="social", spans=spans, tags=("misguided-salience",))
    resp = client.post("/annotations", json=body)
    assert resp.status_code == 200
    progress = resp.json()["progress"]
    # corrected frame (social) is what moves, not the predicted one
    assert progress["social"]["done"] == 1
    assert progress["moral"]["done"] == 0
    assert progress["social"]["quota"] == 2
    assert client.get("/progress").json() == progress


def test_duplicate_submit_idempotent_count_two_audit_entries(app_client):
    client, store = app_client
    body = annotation_body("legal_0", frame="legal")
    assert client.post("/annotations", json=body).status_code == 200
    body2 = annotation_body("legal_0", frame="financial")
    assert client.post("/annotations", json=body2).status_code == 200
    progress = client.get("/progress").json()
    assert progress["financial"]["done"] == 1
    assert progress["legal"]["done"] == 0  # overwritten
    assert sum(v["done"] for v in progress.values()) == 1
    assert len(store.audit_entries("legal_0")) == 2


def test_out_of_bounds_span_rejected(app_client):
    client, _ = app_client
    body = annotation_body("moral_0", spans=[("x", 900, 950)])
    resp = client.post("/annotations", json=body)
    assert resp.status_code == 422
    assert "(900, 950)" in resp.json()["detail"]


def test_unknown_chunk_404(app_client):
    client, _ = app_client
    assert client.post("/annotations", json=annotation_body("nope_0")).status_code == 404


def test_empty_error_tags_rejected(app_client):
    client, _ = app_client
    body = annotation_body("moral_0", tags=())
    assert client.post("/annotations", json=body).status_code == 422
    body = annotation_body("moral_0", tags=("made-up-tag",))
    assert client.post("/annotations", json=body).status_code == 422


def test_export_empty(app_client):
    client, _ = app_client
    resp = client.get("/export")
    assert resp.status_code == 200
    assert resp.text == ""


def test_export_golden_and_byte_stable(app_client):
    client, _ = app_client
    text = FRAME_TEXT["health"]
    spans = [("virus", text.index("virus"), text.index("virus") + 5)]
    for cid in ("health_0", "health_1", "moral_0"):
        chunk_text = FRAME_TEXT[cid.rsplit("_", 1)[0]]
        body = annotation_body(cid, frame="health", spans=[("t", 0, min(5, len(chunk_text)))])
        assert client.post("/annotations", json=body).status_code == 200
    first = client.get("/export").text
    second = client.get("/export").text
    assert first == second
    lines = first.strip().splitlines()
    assert len(lines) == 3
    ids = [json.loads(line)["chunk_id"] for line in lines]
    assert ids == sorted(ids)
    for line in lines:
        obj = json.loads(line)
        assert set(obj) == {"chunk_id", "frame", "key_phrases", "text"}


def test_export_feeds_trainer(app_client, tmp_path):
    client, _ = app_client
    # annotate one task per frame so training accepts the export
    for name in FRAME_NAMES:
        text = FRAME_TEXT[name]
        first_word_end = text.index(" ")
        body = annotation_body(f"{name}_0", frame=name, spans=[(text[:first_word_end], 0, first_word_end)])
        assert client.post("/annotations", json=body).status_code == 200
    export_path = tmp_path / "gold.jsonl"
    export_path.write_text(client.get("/export").text, encoding="utf-8")
    gold = load_gold(export_path)
    assert len(gold) == 6
    tokenizer = WordTokenizer.build(r.text for r in gold)
    examples = build_examples(gold, tokenizer)
    model, result = train(examples, epochs=1, seed=0, tokenizer=tokenizer, eval_epochs=(1,))
    assert 1 in result.metrics_by_epoch


def test_token_auth():
    store = AnnotationStore(":memory:")
    store.add_tasks([(chunk("c1", "text here"), prediction("c1", Frame.SOCIAL))])
    app = create_app(store, token="sekrit")
    client = TestClient(app)
    assert client.get("/progress").status_code == 401
    ok = client.get("/progress", headers={"Authorization": "Bearer sekrit"})
    assert ok.status_code == 200


def test_unframed_tasks_served_last():
    store = AnnotationStore(":memory:")
    store.add_tasks(
        [
            (chunk("zz_failed", "text"), LLMFramePrediction("zz_failed", None, [], "", ParseStatus.FAILED)),
            (chunk("aa_ok", "text"), prediction("aa_ok", Frame.MORAL)),
        ]
    )
    client = TestClient(create_app(store))
    tasks = client.get("/tasks", params={"limit": 5}).json()["tasks"]
    assert [t["chunk_id"] for t in tasks] == ["aa_ok", "zz_failed"]


def test_store_survives_real_prediction_records(tmp_path):
    c = chunk("c_real", "the court passed a regulation about the law")
    pred = annotate_chunk(c, RuleStubClient())
    store = AnnotationStore(tmp_path / "ann.db")
    store.add_tasks([(c, pred)])
    client = TestClient(create_app(store))
    task = client.get("/tasks").json()["tasks"][0]
    assert task["prediction"]["verdicts"]
    assert task["chunk_id"] == "c_real"
