"""HTTP labeling service.

Sessions are held in memory; each one owns a feature matrix, an
annotation state, and a lock. Seeding batches are served as queries and
labeled through atomic posts; once seeding completes, the propagation
stages and the final pass run on a background thread while clients poll
status. Optional snapshots make sessions survive a restart.
"""

from __future__ import annotations

import csv
import pickle
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import annotator
from .annotator import AnnotateConfig, AnnotationState, Provenance
from .audio import load_audio
from .gbdt import GbdtParams
from .pipeline import DEFAULT_SELECTION, FEATURE_NAMES, PipelineConfig, assemble

SNAPSHOT_VERSION = 1
MIN_SESSION_CLIPS = 40


@dataclass
class Session:
    id: str
    ids: list[str]
    paths: list[str]
    durations: list[float]
    class_names: tuple[str, ...]
    features: np.ndarray
    state: AnnotationState
    reference: np.ndarray | None
    lock: threading.Lock
    error: str | None = None
    worker: threading.Thread | None = None


class SessionRequest(BaseModel):
    class_names: list[str] = Field(min_length=2)
    dataset_dir: str | None = None
    selection: list[str] | None = None
    seed: int = 0
    budget: float = 0.15
    gate: float | None = 0.7
    stages: int = 4
    contamination: float = 0.1
    lof_k: int = 1
    n_rounds: int = 100
    max_depth: int = 6


class LabelItem(BaseModel):
    sample_id: str
    label: str


class LabelRequest(BaseModel):
    answers: list[LabelItem] = Field(min_length=1)


def _scan_dataset(root: Path) -> tuple[list[str], list[str]]:
    paths = sorted(p for p in root.rglob("*.wav") if p.is_file())
    ids = [p.relative_to(root).with_suffix("").as_posix() for p in paths]
    return ids, [str(p) for p in paths]


def _load_reference(root: Path, ids: list[str], class_names: tuple[str, ...]) -> np.ndarray | None:
    ref_path = root / "labels.csv"
    if not ref_path.exists():
        return None
    by_id: dict[str, str] = {}
    with open(ref_path, newline="") as fh:
        for row in csv.DictReader(fh):
            by_id[row["sample_id"]] = row["class"]
    name_to_idx = {name: i for i, name in enumerate(class_names)}
    ref = np.full(len(ids), -1, dtype=np.int64)
    for pos, clip_id in enumerate(ids):
        cls = by_id.get(clip_id)
        if cls in name_to_idx:
            ref[pos] = name_to_idx[cls]
    return ref if (ref >= 0).any() else None


def _session_to_snapshot(session: Session) -> dict:
    return {
        "version": SNAPSHOT_VERSION,
        "id": session.id,
        "ids": session.ids,
        "paths": session.paths,
        "durations": session.durations,
        "class_names": session.class_names,
        "features": session.features,
        "state": session.state,
        "reference": session.reference,
        "error": session.error,
    }


class ServiceRegistry:
    """All mutable service state, shared by the endpoint handlers."""

    def __init__(self, data_dir: str | None, snapshot_dir: str | None):
        self.data_dir = Path(data_dir) if data_dir else None
        self.snapshot_dir = Path(snapshot_dir) if snapshot_dir else None
        self.sessions: dict[str, Session] = {}
        self.clips: dict[str, str] = {}

    def snapshot(self, session: Session) -> None:
        # Never called while holding the session lock.
        if self.snapshot_dir is None:
            return
        with session.lock:
            blob = pickle.dumps(_session_to_snapshot(session))
        self.snapshot_dir.mkdir(parents=True, exist_ok=True)
        target = self.snapshot_dir / f"{session.id}.pkl"
        tmp = target.with_suffix(".tmp")
        tmp.write_bytes(blob)
        tmp.replace(target)

    def restore_all(self) -> None:
        if self.snapshot_dir is None or not self.snapshot_dir.exists():
            return
        for path in sorted(self.snapshot_dir.glob("*.pkl")):
            try:
                with open(path, "rb") as fh:
                    snap = pickle.load(fh)
                if snap.get("version") != SNAPSHOT_VERSION:
                    continue
            except Exception:
                continue
            session = Session(
                id=snap["id"],
                ids=snap["ids"],
                paths=snap["paths"],
                durations=snap["durations"],
                class_names=snap["class_names"],
                features=snap["features"],
                state=snap["state"],
                reference=snap["reference"],
                lock=threading.Lock(),
                error=snap["error"],
            )
            self.sessions[session.id] = session
            for clip_id, clip_path in zip(session.ids, session.paths):
                self.clips[clip_id] = clip_path
            if session.state.phase == "staging" and session.error is None:
                _start_worker(self, session)


def _start_worker(registry: ServiceRegistry, session: Session) -> None:
    def run() -> None:
        try:
            while True:
                with session.lock:
                    state = session.state
                    if state.phase != "staging":
                        break
                    if state.stage < state.config.stages:
                        annotator.run_stage(state, session.features)
                    else:
                        annotator.finalize(state, session.features)
                registry.snapshot(session)
        except Exception as exc:  # surfaced through /status
            session.error = f"{type(exc).__name__}: {exc}"

    session.worker = threading.Thread(target=run, daemon=True)
    session.worker.start()


def _build_session(registry: ServiceRegistry, req: SessionRequest) -> Session:
    root = Path(req.dataset_dir) if req.dataset_dir else registry.data_dir
    if root is None:
        raise HTTPException(status_code=400, detail="no dataset_dir given and the service has no default")
    if not root.is_dir():
        raise HTTPException(status_code=400, detail=f"dataset directory not found: {root}")
    ids, paths = _scan_dataset(root)
    if len(ids) < MIN_SESSION_CLIPS:
        raise HTTPException(
            status_code=400,
            detail=f"need at least {MIN_SESSION_CLIPS} clips, found {len(ids)}",
        )
    selection = tuple(req.selection) if req.selection else DEFAULT_SELECTION
    unknown = [s for s in selection if s not in FEATURE_NAMES]
    if unknown:
        raise HTTPException(status_code=400, detail=f"unknown features: {', '.join(unknown)}")
    pipeline_cfg = PipelineConfig()
    vectors = []
    durations = []
    for clip_id, path in zip(ids, paths):
        try:
            clip = load_audio(path, clip_id=clip_id)
            vectors.append(assemble(clip, selection, pipeline_cfg).values)
            durations.append(clip.duration)
        except Exception as exc:
            raise HTTPException(status_code=400, detail=f"failed on clip {clip_id}: {exc}") from exc
    features = np.vstack(vectors)
    class_names = tuple(req.class_names)
    try:
        config = AnnotateConfig(
            budget=req.budget,
            gate=req.gate,
            stages=req.stages,
            lof_k=req.lof_k,
            contamination=req.contamination,
            seed=req.seed,
            gbdt=GbdtParams(max_depth=req.max_depth, n_rounds=req.n_rounds),
        )
        state = annotator.begin_annotation(features, class_names, config)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    return Session(
        id=uuid.uuid4().hex,
        ids=ids,
        paths=paths,
        durations=durations,
        class_names=class_names,
        features=features,
        state=state,
        reference=_load_reference(root, ids, class_names),
        lock=threading.Lock(),
    )


def _accuracy(session: Session) -> float | None:
    if session.reference is None:
        return None
    state = session.state
    assigned = (state.labels >= 0) & (session.reference >= 0)
    if not assigned.any():
        return None
    return float((state.labels[assigned] == session.reference[assigned]).mean())


def _status_body(session: Session) -> dict:
    state = session.state
    b = state.budgets
    return {
        "session_id": session.id,
        "phase": state.phase,
        "stage": state.stage,
        "stage_count": state.config.stages,
        "sample_count": state.n_samples,
        "pending": len(state.pending),
        "class_names": list(state.class_names),
        "provenance": annotator.provenance_counts(state),
        "budgets": {
            "inlier": b.inlier,
            "random": b.random,
            "query": b.query,
            "inlier_used": b.inlier_used,
            "random_used": b.random_used,
            "query_used": b.query_used,
            "extra_used": b.extra_used,
            "human_used": b.human_used,
            "human_cap": state.human_cap,
        },
        "accuracy": _accuracy(session),
        "error": session.error,
    }


def create_app(
    data_dir: str | None = None,
    ui_dir: str | None = None,
    snapshot_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="sonotag labeling service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    registry = ServiceRegistry(data_dir, snapshot_dir)
    registry.restore_all()
    app.state.registry = registry

    def get_session(session_id: str) -> Session:
        session = registry.sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session: {session_id}")
        return session

    @app.get("/")
    def root() -> dict:
        return {
            "service": "sonotag",
            "sessions": len(registry.sessions),
            "data_dir": str(registry.data_dir) if registry.data_dir else None,
        }

    @app.post("/sessions", status_code=201)
    def create_session(req: SessionRequest) -> dict:
        session = _build_session(registry, req)
        registry.sessions[session.id] = session
        for clip_id, clip_path in zip(session.ids, session.paths):
            registry.clips[clip_id] = clip_path
        registry.snapshot(session)
        return {
            "session_id": session.id,
            "sample_count": session.state.n_samples,
            "pending": len(session.state.pending),
            "class_names": list(session.class_names),
        }

    @app.get("/sessions/{session_id}/queries")
    def get_queries(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            state = session.state
            queries = [
                {
                    "sample_id": session.ids[i],
                    "audio_url": f"/audio/{session.ids[i]}",
                    "duration": session.durations[i],
                }
                for i in state.pending
            ]
            return {"phase": state.phase, "queries": queries}

    @app.post("/sessions/{session_id}/labels")
    def post_labels(session_id: str, req: LabelRequest) -> dict:
        session = get_session(session_id)
        with session.lock:
            state = session.state
            if state.phase != "seeding":
                raise HTTPException(
                    status_code=409, detail=f"no labels are being collected in phase {state.phase!r}"
                )
            index_of = {session.ids[i]: i for i in state.pending}
            name_to_idx = {name: i for i, name in enumerate(session.class_names)}
            seen: set[str] = set()
            offending = {"not_pending": [], "unknown_class": [], "duplicate": []}
            for item in req.answers:
                if item.sample_id in seen:
                    offending["duplicate"].append(item.sample_id)
                seen.add(item.sample_id)
                if item.sample_id not in index_of:
                    offending["not_pending"].append(item.sample_id)
                if item.label not in name_to_idx:
                    offending["unknown_class"].append(item.sample_id)
            if any(offending.values()):
                raise HTTPException(
                    status_code=400,
                    detail={"message": "label batch rejected", "offending": offending},
                )
            answers = {index_of[item.sample_id]: name_to_idx[item.label] for item in req.answers}
            annotator.submit_answers(state, session.features, answers)
            advanced = state.phase == "staging"
        if advanced:
            _start_worker(registry, session)
        registry.snapshot(session)
        with session.lock:
            return _status_body(session)

    @app.get("/sessions/{session_id}/status")
    def get_status(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            return _status_body(session)

    @app.get("/sessions/{session_id}/export")
    def export_labels(session_id: str) -> PlainTextResponse:
        session = get_session(session_id)
        with session.lock:
            report = annotator.write_report(session.state, session.ids)
        return PlainTextResponse(report, media_type="text/tab-separated-values")

    @app.get("/audio/{clip_id:path}")
    def get_audio(clip_id: str) -> FileResponse:
        path = registry.clips.get(clip_id)
        if path is None or not Path(path).exists():
            raise HTTPException(status_code=404, detail=f"unknown clip: {clip_id}")
        return FileResponse(path, media_type="audio/wav")

    if ui_dir:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def serve(app: FastAPI, host: str = "127.0.0.1", port: int = 8765) -> None:
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="warning")
