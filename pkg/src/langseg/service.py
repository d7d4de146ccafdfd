"""HTTP backend for the annotation workflow: serves tasks (phrase, frames,
referent box, question checklist), stores submitted records in an append-only
journal, and exports the latest records as JSONL.

Storage layout under the store directory:
    tasks.json      task definitions (built from a dataset manifest)
    journal.jsonl   one line per submit: {"version", "stored_at", "record"}
    annotators.json optional list of allowed annotator ids
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

from fastapi import FastAPI, Query, Request
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse

from . import data as dio
from .masks import bounding_box
from .taxonomy import CATEGORIES, AnnotationRecord

# Checklist shown for every task: one yes/no question per category, in the
# fixed category order, followed by the three meta judgements.
CATEGORY_QUESTIONS = {
    "appearance": "Does the phrase describe how the referent looks?",
    "category": "Does the phrase name the referent's kind (a noun)?",
    "location": "Does the phrase say where the referent is, relative to the image or another object?",
    "motion": "Does the phrase say the referent moves or changes its location?",
    "obj_motion": "Does the phrase say the referent moves another object or changes its location?",
    "static": "Does the phrase describe something the referent does without moving?",
    "obj_static": "Does the phrase say the referent acts on another object without moving it?",
}

META_QUESTIONS = [
    {"key": "difficulty", "text": "Is the referent the only object of its class in the video?",
     "choices": ["trivial", "non_trivial"]},
    {"key": "correctness", "text": "Does the phrase identify exactly this object?",
     "choices": ["valid_re", "no_re", "wrong_object"]},
    {"key": "redundancy", "text": "Does the phrase contain more information than needed?",
     "choices": ["redundant", "minimal"]},
]


def question_list() -> list[dict]:
    return [
        {"key": c, "text": CATEGORY_QUESTIONS[c], "choices": ["yes", "no"]}
        for c in CATEGORIES
    ] + META_QUESTIONS


def task_id_for(instance_id: str, phrase_id: str) -> str:
    video_id, _, object_id = instance_id.partition("/")
    return f"{video_id}:{object_id}:{phrase_id}"


@dataclass
class AnnotationTask:
    task_id: str
    instance_id: str
    phrase_id: str
    phrase: str
    video_id: str
    frames: list[str]
    boxes: dict[str, list[int] | None]

    def to_json(self, include_questions: bool = True) -> dict:
        doc = {
            "task_id": self.task_id,
            "instance_id": self.instance_id,
            "phrase_id": self.phrase_id,
            "phrase": self.phrase,
            "video_id": self.video_id,
            "frames": self.frames,
            "boxes": self.boxes,
        }
        if include_questions:
            doc["questions"] = question_list()
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "AnnotationTask":
        return cls(
            task_id=doc["task_id"],
            instance_id=doc["instance_id"],
            phrase_id=doc["phrase_id"],
            phrase=doc["phrase"],
            video_id=doc["video_id"],
            frames=list(doc["frames"]),
            boxes={k: (list(v) if v is not None else None) for k, v in doc["boxes"].items()},
        )


def build_tasks(manifest: dio.DatasetManifest) -> list[AnnotationTask]:
    """One task per (instance, phrase); the referent box per frame is the
    tight bounding box of the ground-truth mask ([x0, y0, x1, y1],
    end-exclusive), or null on frames where the referent is absent."""
    tasks = []
    for instance in dio.load_dataset(manifest):
        gts = dio.load_gt_masks(manifest, instance, allow_ragged=True)
        boxes = {
            frame: (list(box) if (box := bounding_box(mask)) else None)
            for frame, mask in zip(instance.frames, gts)
        }
        for phrase_id in sorted(instance.phrases):
            tasks.append(
                AnnotationTask(
                    task_id=task_id_for(instance.instance_id, phrase_id),
                    instance_id=instance.instance_id,
                    phrase_id=phrase_id,
                    phrase=instance.phrases[phrase_id].text,
                    video_id=instance.video_id,
                    frames=list(instance.frames),
                    boxes=boxes,
                )
            )
    tasks.sort(key=lambda t: (t.instance_id, t.phrase_id))
    return tasks


def save_tasks(tasks: list[AnnotationTask], store_dir) -> Path:
    path = Path(store_dir) / "tasks.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps([t.to_json(include_questions=False) for t in tasks], indent=1),
        encoding="utf-8",
    )
    return path


def load_tasks(store_dir) -> list[AnnotationTask]:
    path = Path(store_dir) / "tasks.json"
    if not path.exists():
        raise FileNotFoundError(
            f"{path} not found; build it from a manifest first (serve-annot --manifest)"
        )
    return [AnnotationTask.from_json(doc) for doc in json.loads(path.read_text(encoding="utf-8"))]


class AnnotationStore:
    """Append-only journal with an in-memory latest index.

    Writes are serialized through a lock (last write wins per key); reads see
    the latest snapshot. Previous versions stay in the journal.
    """

    def __init__(self, store_dir):
        self.store_dir = Path(store_dir)
        self.store_dir.mkdir(parents=True, exist_ok=True)
        self.journal_path = self.store_dir / "journal.jsonl"
        self._lock = threading.Lock()
        self._latest: dict[tuple[str, str, str], tuple[int, AnnotationRecord]] = {}
        self._versions: dict[tuple[str, str, str], int] = {}
        if self.journal_path.exists():
            with open(self.journal_path, encoding="utf-8") as stream:
                for line in stream:
                    if not line.strip():
                        continue
                    entry = json.loads(line)
                    record = AnnotationRecord.from_json(entry["record"])
                    key = (record.annotator_id, record.instance_id, record.phrase_id)
                    self._versions[key] = entry["version"]
                    self._latest[key] = (entry["version"], record)
        annotators_path = self.store_dir / "annotators.json"
        self.allowed_annotators = (
            set(json.loads(annotators_path.read_text(encoding="utf-8")))
            if annotators_path.exists()
            else None
        )

    def annotator_known(self, annotator_id: str) -> bool:
        if not annotator_id:
            return False
        if self.allowed_annotators is None:
            return True
        return annotator_id in self.allowed_annotators

    def submit(self, record: AnnotationRecord) -> int:
        """Upsert keyed by (annotator, instance, phrase); returns the stored
        version id (1-based per key)."""
        record.validate()
        key = (record.annotator_id, record.instance_id, record.phrase_id)
        with self._lock:
            version = self._versions.get(key, 0) + 1
            entry = {
                "version": version,
                "stored_at": datetime.now(timezone.utc).isoformat(),
                "record": record.to_json(),
            }
            with open(self.journal_path, "a", encoding="utf-8") as stream:
                stream.write(json.dumps(entry) + "\n")
            self._versions[key] = version
            self._latest[key] = (version, record)
        return version

    def latest_records(self) -> list[AnnotationRecord]:
        """Latest record per key, sorted by (instance, phrase, annotator)."""
        items = sorted(
            self._latest.items(), key=lambda kv: (kv[0][1], kv[0][2], kv[0][0])
        )
        return [record for _, (_, record) in items]

    def has_record(self, annotator_id: str, instance_id: str, phrase_id: str) -> bool:
        return (annotator_id, instance_id, phrase_id) in self._latest

    def export_jsonl(self) -> str:
        return "".join(
            json.dumps(record.to_json()) + "\n" for record in self.latest_records()
        )

    def disagreements(self) -> list[dict]:
        """Category-level conflicts among latest records of items labeled by
        at least two annotators."""
        by_item: dict[tuple[str, str], list[AnnotationRecord]] = {}
        for (_, instance_id, phrase_id), (_, record) in self._latest.items():
            by_item.setdefault((instance_id, phrase_id), []).append(record)
        conflicts = []
        for (instance_id, phrase_id), records in sorted(by_item.items()):
            if len(records) < 2:
                continue
            for category in CATEGORIES:
                votes = {rec.categories[category] for rec in records}
                if len(votes) > 1:
                    conflicts.append(
                        {
                            "instance_id": instance_id,
                            "phrase_id": phrase_id,
                            "category": category,
                        }
                    )
        return conflicts


def create_app(store: AnnotationStore, tasks, frames_root) -> FastAPI:
    app = FastAPI(title="annotation backend")
    frames_root = Path(frames_root)
    task_index = {task.task_id: task for task in tasks}

    @app.get("/tasks")
    def list_tasks(annotator: str | None = Query(default=None),
                   unlabeled: bool = Query(default=False)):
        if annotator is None or not store.annotator_known(annotator):
            return JSONResponse(
                {"detail": f"unknown annotator {annotator!r}"}, status_code=404
            )
        summaries = []
        for task in tasks:
            labeled = store.has_record(annotator, task.instance_id, task.phrase_id)
            if unlabeled and labeled:
                continue
            summaries.append(
                {
                    "task_id": task.task_id,
                    "instance_id": task.instance_id,
                    "phrase_id": task.phrase_id,
                    "phrase": task.phrase,
                    "n_frames": len(task.frames),
                    "labeled": labeled,
                }
            )
        return summaries

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str):
        task = task_index.get(task_id)
        if task is None:
            return JSONResponse({"detail": f"unknown task {task_id!r}"}, status_code=404)
        return task.to_json()

    @app.get("/frames/{video_id}/{frame}")
    def get_frame(video_id: str, frame: str):
        path = frames_root / video_id / f"{frame}.png"
        if not path.exists():
            return JSONResponse({"detail": f"unknown frame {video_id}/{frame}"}, status_code=404)
        return FileResponse(path, media_type="image/png")

    @app.post("/annotations")
    async def submit_annotation(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            return JSONResponse({"detail": "body must be JSON"}, status_code=400)
        try:
            record = AnnotationRecord.from_json(body)
        except (KeyError, TypeError, ValueError) as exc:
            return JSONResponse({"detail": f"invalid record: {exc}"}, status_code=400)
        if not store.annotator_known(record.annotator_id):
            return JSONResponse(
                {"detail": f"unknown annotator {record.annotator_id!r}"}, status_code=404
            )
        version = store.submit(record)
        return JSONResponse({"version": version}, status_code=201)

    @app.get("/export")
    def export():
        return PlainTextResponse(store.export_jsonl(), media_type="application/jsonl")

    @app.get("/disagreements")
    def disagreements():
        return store.disagreements()

    return app
