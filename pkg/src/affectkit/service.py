"""HTTP API bridging the pipeline and the annotation UI.

Endpoints:
  GET  /api/recordings                      list recording metadata
  GET  /api/recordings/{id}/frames          frame playback data (json|csv)
  GET  /api/recordings/{id}/estimates       intensity series (json|csv)
  GET  /api/annotations                     stored annotations (filterable)
  POST /api/annotations                     submit / overwrite one annotation

Annotation writes are last-write-wins per (recording, window, annotator)
key and serialized through a process-wide lock; reads are side-effect
free.
"""

from __future__ import annotations

import io
import threading
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import intensity
from .datamodel import (
    DEFAULT_WINDOW_FRAMES,
    AnnotationRecord,
    Modality,
    ValidationError,
    annotation_to_dict,
    default_config,
)
from .store import NotFoundError, RecordingStore, StoreError

DEFAULT_PORT = 8735


class AnnotationIn(BaseModel):
    recording_id: str
    start_frame: int
    end_frame: int
    intensity: float
    annotator_id: str
    created_at: str


def _annotation_from_body(body: AnnotationIn, window_frames: int) -> AnnotationRecord:
    try:
        rec = AnnotationRecord(
            recording_id=body.recording_id,
            start_frame=body.start_frame,
            end_frame=body.end_frame,
            intensity=body.intensity,
            annotator_id=body.annotator_id,
            created_at=body.created_at,
        )
    except ValidationError as exc:
        field = "intensity" if "intensity" in str(exc) else (
            "created_at" if "created_at" in str(exc) else "start_frame/end_frame"
        )
        raise HTTPException(
            status_code=400, detail=[{"field": field, "message": str(exc)}]
        )
    try:
        rec.check_window(window_frames)
    except ValidationError as exc:
        raise HTTPException(
            status_code=400,
            detail=[{"field": "start_frame/end_frame", "message": str(exc)}],
        )
    return rec


def create_app(
    data_dir: str | Path,
    window_frames: int = DEFAULT_WINDOW_FRAMES,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    store = RecordingStore(data_dir)
    write_lock = threading.Lock()
    app = FastAPI(title="affectkit service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/api/recordings")
    def list_recordings():
        try:
            metas = store.list_recordings()
        except StoreError as exc:
            raise HTTPException(status_code=500, detail=str(exc))
        return [
            {
                "recording_id": m.recording_id,
                "subject_id": m.subject_id,
                "fps": m.fps,
                "modalities": [x.value for x in m.modalities],
                "frame_counts": m.frame_counts,
                "source": m.source,
            }
            for m in metas
        ]

    @app.get("/api/recordings/{recording_id}/frames")
    def get_frames(
        recording_id: str,
        modality: str,
        from_frame: int = Query(0, alias="from"),
        to_frame: int = Query(None, alias="to"),
        format: str = "json",
    ):
        try:
            mod = Modality(modality)
        except ValueError:
            raise HTTPException(status_code=400, detail=f"unknown modality {modality!r}")
        if not mod.is_visual:
            raise HTTPException(status_code=400, detail="speech has no frames")
        try:
            stream = store.load_stream(recording_id, mod)
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        if to_frame is None:
            to_frame = stream.frames[-1].frame_index if stream.frames else 0
        if from_frame < 0 or to_frame < from_frame:
            raise HTTPException(status_code=400, detail="invalid frame range")
        frames = [
            f for f in stream.frames if from_frame <= f.frame_index <= to_frame
        ]
        if format == "csv":
            out = io.StringIO()
            from .datamodel import FrameStream, write_frames

            write_frames(
                FrameStream(stream.recording_id, stream.modality, tuple(frames)), out
            )
            return Response(out.getvalue(), media_type="text/csv")
        return [
            {
                "frame_index": f.frame_index,
                "timestamp_s": f.timestamp_s,
                "points": [[x, y] for x, y in f.points],
            }
            for f in frames
        ]

    @app.get("/api/annotations")
    def get_annotations(recording_id: str | None = None):
        records = store.load_annotations(window_frames=None)
        if recording_id is not None:
            records = [r for r in records if r.recording_id == recording_id]
        return [annotation_to_dict(r) for r in records]

    @app.post("/api/annotations")
    def post_annotation(body: AnnotationIn):
        rec = _annotation_from_body(body, window_frames)
        try:
            with write_lock:
                stored = store.submit_annotation(rec)
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        return annotation_to_dict(stored)

    @app.get("/api/recordings/{recording_id}/estimates")
    def get_estimates(recording_id: str, format: str = "json"):
        try:
            meta = store.get_meta(recording_id)
        except NotFoundError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        available = store.available_streams(recording_id)
        visual = [m for m in available if m.is_visual]
        if not store.has_models_for(available):
            raise HTTPException(
                status_code=409, detail="models not fitted for available modalities"
            )
        configs = {
            m: default_config(m, window_frames=window_frames, fps=meta.fps)
            for m in visual
        }
        streams = {m: store.load_stream(recording_id, m, configs[m]) for m in visual}
        speech_rows = store.load_speech(recording_id)
        classifiers = {m: store.load_classifier(m) for m in visual}
        visual_models = {m: store.load_intensity_model(m) for m in visual}
        speech_model = (
            store.load_intensity_model(Modality.SPEECH) if speech_rows else None
        )
        result = intensity.run_pipeline(
            streams,
            speech_rows,
            configs,
            classifiers,
            visual_models,
            speech_model,
        )
        estimates = result.all_estimates()
        estimates.sort(key=lambda e: (e.timestamp_s, e.modality))
        if format == "csv":
            out = io.StringIO()
            intensity.write_estimate_csv(estimates, out)
            return Response(out.getvalue(), media_type="text/csv")
        return [
            {
                "recording_id": recording_id,
                "timestamp_s": e.timestamp_s,
                "modality": e.modality,
                "raw": e.raw,
                "value": e.value,
            }
            for e in estimates
        ]

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
