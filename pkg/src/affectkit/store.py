"""File-backed persistence for recordings, annotations, and models.

Layout under a data directory:

    <data_dir>/
      recordings/<recording_id>/meta.json
      recordings/<recording_id>/{face,body,hand}.csv   frame CSVs
      recordings/<recording_id>/speech.csv
      annotations.jsonl
      models/classifier_<modality>.json
      models/intensity_<modality>.json                 (speech included)

Writes replace files atomically (write to a temp sibling, then rename).
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Callable

from . import classify, intensity
from .datamodel import (
    VISUAL_MODALITIES,
    AnnotationRecord,
    FrameStream,
    Modality,
    ModalityConfig,
    RecordingMeta,
    SpeechFeatureRow,
    default_config,
    parse_annotations,
    parse_frames,
    parse_speech_features,
    write_annotations,
    write_frames,
    write_speech_features,
)


class StoreError(Exception):
    pass


class NotFoundError(StoreError):
    pass


def _atomic_write(path: Path, write: Callable) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            write(f)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class RecordingStore:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        self.recordings_dir = self.root / "recordings"
        self.models_dir = self.root / "models"
        self.annotations_path = self.root / "annotations.jsonl"

    # -- recordings --------------------------------------------------------

    def list_recordings(self) -> list[RecordingMeta]:
        if not self.root.exists():
            raise StoreError(f"data directory {self.root} does not exist")
        metas = []
        if self.recordings_dir.exists():
            for d in sorted(self.recordings_dir.iterdir()):
                meta_path = d / "meta.json"
                if meta_path.is_file():
                    metas.append(self._load_meta(meta_path))
        return metas

    def _load_meta(self, path: Path) -> RecordingMeta:
        obj = json.loads(path.read_text(encoding="utf-8"))
        return RecordingMeta(
            recording_id=obj["recording_id"],
            subject_id=obj.get("subject_id", ""),
            fps=float(obj.get("fps", 30.0)),
            modalities=tuple(Modality(m) for m in obj.get("modalities", [])),
            frame_counts=dict(obj.get("frame_counts", {})),
            source=obj.get("source", "captured"),
        )

    def get_meta(self, recording_id: str) -> RecordingMeta:
        path = self.recordings_dir / recording_id / "meta.json"
        if not path.is_file():
            raise NotFoundError(f"unknown recording {recording_id!r}")
        return self._load_meta(path)

    def save_recording(
        self,
        meta: RecordingMeta,
        streams: dict[Modality, FrameStream],
        speech_rows: list[SpeechFeatureRow] | None = None,
    ) -> None:
        d = self.recordings_dir / meta.recording_id
        _atomic_write(
            d / "meta.json",
            lambda f: json.dump(
                {
                    "recording_id": meta.recording_id,
                    "subject_id": meta.subject_id,
                    "fps": meta.fps,
                    "modalities": [m.value for m in meta.modalities],
                    "frame_counts": meta.frame_counts,
                    "source": meta.source,
                },
                f,
            ),
        )
        for modality, stream in streams.items():
            _atomic_write(
                d / f"{modality.value}.csv", lambda f, s=stream: write_frames(s, f)
            )
        if speech_rows:
            _atomic_write(
                d / "speech.csv", lambda f: write_speech_features(speech_rows, f)
            )

    def load_stream(
        self, recording_id: str, modality: Modality, config: ModalityConfig | None = None
    ) -> FrameStream:
        path = self.recordings_dir / recording_id / f"{modality.value}.csv"
        if not path.is_file():
            raise NotFoundError(
                f"no {modality.value} data for recording {recording_id!r}"
            )
        if config is None:
            config = default_config(modality)
        with path.open(encoding="utf-8", newline="") as f:
            return parse_frames(f, config)

    def load_speech(self, recording_id: str) -> list[SpeechFeatureRow]:
        path = self.recordings_dir / recording_id / "speech.csv"
        if not path.is_file():
            return []
        with path.open(encoding="utf-8", newline="") as f:
            return parse_speech_features(f)

    def available_streams(self, recording_id: str) -> list[Modality]:
        d = self.recordings_dir / recording_id
        out = [m for m in VISUAL_MODALITIES if (d / f"{m.value}.csv").is_file()]
        if (d / "speech.csv").is_file():
            out.append(Modality.SPEECH)
        return out

    # -- annotations -------------------------------------------------------

    def load_annotations(self, window_frames: int | None = None) -> list[AnnotationRecord]:
        if not self.annotations_path.is_file():
            return []
        with self.annotations_path.open(encoding="utf-8") as f:
            return parse_annotations(f, window_frames)

    def submit_annotation(
        self, record: AnnotationRecord, window_frames: int | None = None
    ) -> AnnotationRecord:
        """Persist one annotation; an existing record with the same
        (recording, window, annotator) key is replaced."""
        if window_frames is not None:
            record.check_window(window_frames)
        self.get_meta(record.recording_id)  # 404 on unknown recording
        existing = self.load_annotations(window_frames=None)
        merged = [r for r in existing if r.key != record.key]
        merged.append(record)
        _atomic_write(self.annotations_path, lambda f: write_annotations(merged, f))
        return record

    # -- models ------------------------------------------------------------

    def save_classifier(self, clf: classify.LinearClassifier) -> None:
        _atomic_write(
            self.models_dir / f"classifier_{clf.modality.value}.json",
            lambda f: classify.save_classifier(clf, f),
        )

    def load_classifier(self, modality: Modality) -> classify.LinearClassifier:
        path = self.models_dir / f"classifier_{modality.value}.json"
        if not path.is_file():
            raise NotFoundError(f"no classifier model for {modality.value}")
        with path.open(encoding="utf-8") as f:
            return classify.load_classifier(f)

    def save_intensity_model(
        self,
        model: intensity.VisualIntensityModel | intensity.SpeechIntensityModel,
        report: intensity.FitReport | None = None,
    ) -> None:
        name = (
            f"intensity_{model.modality.value}.json"
            if isinstance(model, intensity.VisualIntensityModel)
            else "intensity_speech.json"
        )
        _atomic_write(
            self.models_dir / name,
            lambda f: intensity.save_intensity_model(model, f, report),
        )

    def load_intensity_model(
        self, modality: Modality
    ) -> intensity.VisualIntensityModel | intensity.SpeechIntensityModel:
        name = (
            "intensity_speech.json"
            if modality is Modality.SPEECH
            else f"intensity_{modality.value}.json"
        )
        path = self.models_dir / name
        if not path.is_file():
            raise NotFoundError(f"no intensity model for {modality.value}")
        with path.open(encoding="utf-8") as f:
            return intensity.load_intensity_model(f)

    def has_models_for(self, modalities: list[Modality]) -> bool:
        try:
            for m in modalities:
                if m is Modality.SPEECH:
                    self.load_intensity_model(m)
                else:
                    self.load_classifier(m)
                    self.load_intensity_model(m)
        except NotFoundError:
            return False
        return True
