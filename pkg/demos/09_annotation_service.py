"""The annotation review service end to end, driven through its HTTP API."""
from fastapi.testclient import TestClient

from framescope.corpus import ChunkRecord
from framescope.frames import Frame
from framescope.prompting import LLMFramePrediction, ParseStatus
from framescope.service import AnnotationStore, create_app

store = AnnotationStore(":memory:")
texts = {
    "moral_0": "a sermon on sin and forgiveness for the congregation",
    "legal_0": "the court heard the regulation case on appeal",
    "health_0": "the hospital reported new virus symptoms this week",
}
store.add_tasks(
    [
        (
            ChunkRecord(cid, "e", 0, text, len(text.split()), 0, len(text)),
            LLMFramePrediction(cid, Frame.SOCIAL, ["phrase1"], "", ParseStatus.OK),
        )
        for cid, text in texts.items()
    ]
)
client = TestClient(create_app(store, quota=100))

tasks = client.get("/tasks", params={"limit": 10}).json()["tasks"]
print(f"pending tasks: {[t['chunk_id'] for t in tasks]}")

text = texts["moral_0"]
resp = client.post(
    "/annotations",
    json={
        "chunk_id": "moral_0",
        "corrected_frame": "moral",  # fixing the stubbed 'social' prediction
        "corrected_phrases": [
            {"text": "sin", "start": text.index("sin"), "end": text.index("sin") + 3},
            {"text": "forgiveness", "start": text.index("forgiveness"), "end": text.index("forgiveness") + 11},
        ],
        "error_tags": ["placeholder-echo", "misguided-salience"],
        "annotator_id": "demo",
        "free_note": "frame corrected; rationale spans selected from the text",
    },
)
print(f"submit -> {resp.status_code}; progress: {resp.json()['progress']['moral']}")

print("\nexport (the trainer's gold input format):")
print(client.get("/export").text.strip())
