"""REST service backing the human review of LLM frame predictions.

Single-file sqlite storage with an append-only audit table. Pending tasks
are served interleaved by per-frame deficit so annotators converge on the
per-frame quota evenly. The export endpoint emits the gold JSONL format the
trainer consumes (docs/formats.md).
"""
from __future__ import annotations

import json
import sqlite3
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel, Field

from .corpus import ChunkRecord
from .frames import FRAME_NAMES, Frame
from .goldio import GoldRecord, KeyPhrase, gold_record_to_line
from .prompting import LLMFramePrediction

DEFAULT_QUOTA = 100

ERROR_TAGS = (
    "context-limitation",
    "hallucination-absent",
    "hallucination-paraphrase",
    "placeholder-echo",
    "misguided-salience",
    "none",
)

_SCHEMA = """
CREATE TABLE IF NOT EXISTS tasks (
    chunk_id TEXT PRIMARY KEY,
    chunk_text TEXT NOT NULL,
    prediction TEXT NOT NULL,
    status TEXT NOT NULL DEFAULT 'pending'
);
CREATE TABLE IF NOT EXISTS annotations (
    chunk_id TEXT PRIMARY KEY,
    payload TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS audit (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    chunk_id TEXT NOT NULL,
    at TEXT NOT NULL,
    payload TEXT NOT NULL
);
"""


@dataclass
class StoredAnnotation:
    chunk_id: str
    corrected_frame: Frame
    corrected_phrases: list[tuple[str, int, int]]
    error_tags: list[str]
    annotator_id: str
    timestamp: str
    free_note: str = ""

    def to_json(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "corrected_frame": self.corrected_frame.value,
            "corrected_phrases": [{"text": t, "start": s, "end": e} for t, s, e in self.corrected_phrases],
            "error_tags": list(self.error_tags),
            "annotator_id": self.annotator_id,
            "timestamp": self.timestamp,
            "free_note": self.free_note,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "StoredAnnotation":
        return cls(
            chunk_id=obj["chunk_id"],
            corrected_frame=Frame(obj["corrected_frame"]),
            corrected_phrases=[(p["text"], int(p["start"]), int(p["end"])) for p in obj["corrected_phrases"]],
            error_tags=list(obj["error_tags"]),
            annotator_id=obj["annotator_id"],
            timestamp=obj["timestamp"],
            free_note=obj.get("free_note", ""),
        )


class AnnotationStore:
    """sqlite-backed task/annotation/audit storage; writes serialized."""

    def __init__(self, path: str | Path = ":memory:"):
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        self._conn.executescript(_SCHEMA)
        self._lock = threading.Lock()

    def close(self) -> None:
        self._conn.close()

    def add_tasks(self, items: Sequence[tuple[ChunkRecord, LLMFramePrediction]]) -> int:
        """Register (chunk, prediction) pairs as pending tasks; one per chunk."""
        with self._lock:
            n = 0
            for chunk, pred in items:
                cur = self._conn.execute(
                    "INSERT OR IGNORE INTO tasks (chunk_id, chunk_text, prediction, status) VALUES (?, ?, ?, 'pending')",
                    (chunk.chunk_id, chunk.text, json.dumps(pred.to_json(), ensure_ascii=False)),
                )
                n += cur.rowcount
            self._conn.commit()
            return n

    def get_task(self, chunk_id: str) -> dict | None:
        row = self._conn.execute(
            "SELECT chunk_id, chunk_text, prediction, status FROM tasks WHERE chunk_id = ?", (chunk_id,)
        ).fetchone()
        if row is None:
            return None
        return {"chunk_id": row[0], "chunk_text": row[1], "prediction": json.loads(row[2]), "status": row[3]}

    def _pending_by_frame(self, frame: str | None) -> dict[str, list[dict]]:
        rows = self._conn.execute(
            "SELECT chunk_id, chunk_text, prediction, status FROM tasks WHERE status = 'pending' ORDER BY chunk_id"
        ).fetchall()
        grouped: dict[str, list[dict]] = {}
        for chunk_id, text, pred_json, status in rows:
            pred = json.loads(pred_json)
            pred_frame = pred.get("frame") or "unframed"
            if frame is not None and pred_frame != frame:
                continue
            grouped.setdefault(pred_frame, []).append(
                {"chunk_id": chunk_id, "chunk_text": text, "prediction": pred, "status": status}
            )
        return grouped

    def done_counts(self) -> dict[str, int]:
        """Completed annotations per corrected frame."""
        counts = {name: 0 for name in FRAME_NAMES}
        rows = self._conn.execute(
            "SELECT payload FROM annotations WHERE chunk_id IN (SELECT chunk_id FROM tasks WHERE status = 'done')"
        ).fetchall()
        for (payload,) in rows:
            frame = json.loads(payload)["corrected_frame"]
            counts[frame] = counts.get(frame, 0) + 1
        return counts

    def list_tasks(
        self,
        status: str = "pending",
        frame: str | None = None,
        limit: int = 20,
        quota: int = DEFAULT_QUOTA,
    ) -> list[dict]:
        """Pending tasks ordered to balance per-frame progress toward the quota.

        Frames with the largest remaining deficit (quota - done) are served
        first, interleaved; ties follow taxonomy order. Unframed tasks (failed
        parses) come last.
        """
        if status != "pending":
            rows = self._conn.execute(
                "SELECT chunk_id, chunk_text, prediction, status FROM tasks WHERE status = ? ORDER BY chunk_id",
                (status,),
            ).fetchall()
            out = [
                {"chunk_id": r[0], "chunk_text": r[1], "prediction": json.loads(r[2]), "status": r[3]}
                for r in rows
            ]
            return out[:limit] if limit else out

        grouped = self._pending_by_frame(frame)
        deficits = {name: quota - done for name, done in self.done_counts().items()}
        queues = {name: list(tasks) for name, tasks in grouped.items() if name != "unframed"}
        ordered: list[dict] = []
        while queues and (not limit or len(ordered) < limit):
            name = max(queues, key=lambda f: (deficits.get(f, 0), -FRAME_NAMES.index(f)))
            ordered.append(queues[name].pop(0))
            deficits[name] = deficits.get(name, 0) - 1
            if not queues[name]:
                del queues[name]
        for task in grouped.get("unframed", []):
            if limit and len(ordered) >= limit:
                break
            ordered.append(task)
        return ordered[:limit] if limit else ordered

    def submit(self, annotation: StoredAnnotation) -> StoredAnnotation:
        """Upsert the annotation, mark the task done, append to the audit log."""
        with self._lock:
            self._conn.execute(
                "INSERT INTO annotations (chunk_id, payload) VALUES (?, ?) "
                "ON CONFLICT(chunk_id) DO UPDATE SET payload = excluded.payload",
                (annotation.chunk_id, json.dumps(annotation.to_json(), ensure_ascii=False)),
            )
            self._conn.execute("UPDATE tasks SET status = 'done' WHERE chunk_id = ?", (annotation.chunk_id,))
            self._conn.execute(
                "INSERT INTO audit (chunk_id, at, payload) VALUES (?, ?, ?)",
                (annotation.chunk_id, annotation.timestamp, json.dumps(annotation.to_json(), ensure_ascii=False)),
            )
            self._conn.commit()
            return annotation

    def audit_entries(self, chunk_id: str | None = None) -> list[dict]:
        query = "SELECT id, chunk_id, at, payload FROM audit"
        args: tuple = ()
        if chunk_id is not None:
            query += " WHERE chunk_id = ?"
            args = (chunk_id,)
        rows = self._conn.execute(query + " ORDER BY id", args).fetchall()
        return [{"id": r[0], "chunk_id": r[1], "at": r[2], "payload": json.loads(r[3])} for r in rows]

    def export_records(self) -> list[GoldRecord]:
        """Done tasks as gold records, stably ordered by chunk_id."""
        rows = self._conn.execute(
            "SELECT t.chunk_id, t.chunk_text, a.payload FROM tasks t "
            "JOIN annotations a ON a.chunk_id = t.chunk_id WHERE t.status = 'done' ORDER BY t.chunk_id"
        ).fetchall()
        records = []
        for chunk_id, text, payload in rows:
            ann = StoredAnnotation.from_json(json.loads(payload))
            records.append(
                GoldRecord(
                    chunk_id=chunk_id,
                    text=text,
                    frame=ann.corrected_frame,
                    key_phrases=tuple(KeyPhrase(t, s, e) for t, s, e in ann.corrected_phrases),
                )
            )
        return records


class PhraseSpanIn(BaseModel):
    text: str
    start: int
    end: int


class AnnotationIn(BaseModel):
    chunk_id: str
    corrected_frame: str
    corrected_phrases: list[PhraseSpanIn] = Field(default_factory=list)
    error_tags: list[str] = Field(min_length=1)
    annotator_id: str
    free_note: str = ""


def create_app(
    store: AnnotationStore,
    quota: int = DEFAULT_QUOTA,
    static_dir: str | Path | None = None,
    token: str | None = None,
) -> FastAPI:
    app = FastAPI(title="framescope annotation service")

    def check_token(request: Request) -> None:
        if token is None:
            return
        header = request.headers.get("Authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or invalid token")

    def progress_payload() -> dict:
        done = store.done_counts()
        return {name: {"done": done.get(name, 0), "quota": quota} for name in FRAME_NAMES}

    @app.get("/tasks", dependencies=[Depends(check_token)])
    def get_tasks(
        status: str = Query("pending"),
        frame: str | None = Query(None),
        limit: int = Query(20, ge=1, le=500),
    ) -> dict:
        if frame is not None and frame not in FRAME_NAMES:
            raise HTTPException(status_code=422, detail=f"unknown frame: {frame}")
        tasks = store.list_tasks(status=status, frame=frame, limit=limit, quota=quota)
        return {"tasks": tasks, "count": len(tasks)}

    @app.post("/annotations", dependencies=[Depends(check_token)])
    def post_annotation(body: AnnotationIn) -> dict:
        task = store.get_task(body.chunk_id)
        if task is None:
            raise HTTPException(status_code=404, detail=f"unknown chunk: {body.chunk_id}")
        if body.corrected_frame not in FRAME_NAMES:
            raise HTTPException(status_code=422, detail=f"unknown frame: {body.corrected_frame}")
        bad_tags = [t for t in body.error_tags if t not in ERROR_TAGS]
        if bad_tags:
            raise HTTPException(status_code=422, detail=f"unknown error tags: {bad_tags}")
        length = len(task["chunk_text"])
        for phrase in body.corrected_phrases:
            if phrase.start < 0 or phrase.end > length or phrase.start >= phrase.end:
                raise HTTPException(
                    status_code=422,
                    detail=f"span ({phrase.start}, {phrase.end}) out of bounds for chunk of length {length}",
                )
        stored = store.submit(
            StoredAnnotation(
                chunk_id=body.chunk_id,
                corrected_frame=Frame(body.corrected_frame),
                corrected_phrases=[(p.text, p.start, p.end) for p in body.corrected_phrases],
                error_tags=list(body.error_tags),
                annotator_id=body.annotator_id,
                timestamp=datetime.now(timezone.utc).isoformat(),
                free_note=body.free_note,
            )
        )
        return {"stored": stored.to_json(), "progress": progress_payload()}

    @app.get("/progress", dependencies=[Depends(check_token)])
    def get_progress() -> dict:
        return progress_payload()

    @app.get("/export", dependencies=[Depends(check_token)])
    def get_export() -> PlainTextResponse:
        lines = [gold_record_to_line(r) for r in store.export_records()]
        body = "\n".join(lines)
        if body:
            body += "\n"
        return PlainTextResponse(body, media_type="application/x-ndjson")

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def load_tasks_from_files(store: AnnotationStore, chunks_path, predictions_path) -> int:
    """Seed the store from a chunk store and a prediction file."""
    from .corpus import read_chunks
    from .prompting import read_predictions

    chunks = {c.chunk_id: c for c in read_chunks(chunks_path)}
    predictions = read_predictions(predictions_path)
    items = [(chunks[p.chunk_id], p) for p in predictions if p.chunk_id in chunks]
    return store.add_tasks(items)
