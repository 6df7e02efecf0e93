"""Deterministic synthetic recordings for desk-scale verification.

Each window of N frames gets a target intensity from a supplied curve.
Point motion amplitude and per-frame speed scale linearly with that
target, so kinematic features carry a recoverable linear signal; the
prosodic slice of each speech row is constructed so a fixed hidden
coefficient vector maps it exactly to the target. Ground-truth
annotations are attached per window.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datamodel import (
    DEFAULT_FPS,
    DEFAULT_WINDOW_FRAMES,
    PROSODIC_FEATURE_COUNT,
    SPEECH_FEATURE_COUNT,
    VISUAL_MODALITIES,
    AnnotationRecord,
    Frame,
    FrameStream,
    Modality,
    ModalityConfig,
    RecordingMeta,
    SpeechFeatureRow,
    ValidationError,
    default_config,
)

# units moved per frame per unit intensity; hand swings widest
_STEP_SCALE = {
    Modality.FACE: 1.0,
    Modality.BODY: 1.5,
    Modality.HAND: 2.5,
}

_CREATED_AT = "2026-01-01T00:00:00Z"
_ANNOTATOR = "synthetic"


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic recording."""

    curve: tuple[float, ...]  # target intensity per window, each in [0, 1]
    noise: float = 0.0        # stddev of coordinate / feature jitter
    seed: int = 0
    recording_id: str = "synthetic-0"
    subject_id: str = "synthetic-subject"
    window_frames: int = DEFAULT_WINDOW_FRAMES
    fps: float = DEFAULT_FPS

    def __post_init__(self):
        if not self.curve:
            raise ValidationError("curve must contain at least one window value")
        for v in self.curve:
            if not (0.0 <= v <= 1.0):
                raise ValidationError(f"curve value {v} outside [0, 1]")
        if self.noise < 0:
            raise ValidationError("noise must be non-negative")


@dataclass
class SyntheticRecording:
    meta: RecordingMeta
    configs: dict[Modality, ModalityConfig]
    streams: dict[Modality, FrameStream]
    speech_rows: list[SpeechFeatureRow]
    annotations: list[AnnotationRecord]
    # hidden prosodic coefficients (the generating ground truth for speech fits)
    speech_theta: np.ndarray = field(repr=False, default=None)


def default_curve(windows: int, seed: int) -> tuple[float, ...]:
    """Seeded per-window intensities spread over [0.05, 0.95]."""
    rng = np.random.default_rng(seed)
    return tuple(float(v) for v in rng.uniform(0.05, 0.95, size=windows))


def speech_coefficients(seed: int) -> np.ndarray:
    """Hidden prosodic coefficient vector; feature 0 carries unit weight."""
    rng = np.random.default_rng(seed ^ 0x5EEC)
    theta = rng.uniform(-0.05, 0.05, size=PROSODIC_FEATURE_COUNT)
    theta[0] = 1.0
    return theta


def _visual_stream(
    spec: SyntheticSpec, config: ModalityConfig, rng: np.random.Generator
) -> FrameStream:
    n_frames = len(spec.curve) * spec.window_frames
    base = rng.uniform(100.0, 400.0, size=(config.point_count, 2))
    dirs = rng.normal(size=(config.point_count, 2))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    step = _STEP_SCALE[config.modality]

    frames = []
    pos = base.copy()
    for idx in range(n_frames):
        w = idx // spec.window_frames
        in_window = idx % spec.window_frames
        if in_window == 0:
            pos = base.copy()  # re-anchor so windows do not drift apart
        else:
            sign = 1.0 if w % 2 == 0 else -1.0
            pos = pos + sign * spec.curve[w] * step * dirs
        coords = pos
        if spec.noise > 0:
            coords = pos + rng.normal(0.0, spec.noise, size=pos.shape)
        frames.append(
            Frame(
                recording_id=spec.recording_id,
                modality=config.modality,
                frame_index=idx,
                timestamp_s=idx / spec.fps,
                points=tuple((float(x), float(y)) for x, y in coords),
            )
        )
    return FrameStream(spec.recording_id, config.modality, tuple(frames))


def _speech_rows(
    spec: SyntheticSpec, theta: np.ndarray, rng: np.random.Generator
) -> list[SpeechFeatureRow]:
    rows = []
    for w, target in enumerate(spec.curve):
        prosodic = rng.uniform(0.0, 1.0, size=PROSODIC_FEATURE_COUNT)
        # solve feature 0 so theta . prosodic == target exactly
        prosodic[0] = (target - float(theta[1:] @ prosodic[1:])) / float(theta[0])
        if spec.noise > 0:
            prosodic = prosodic + rng.normal(0.0, spec.noise, size=prosodic.shape)
        rest = rng.normal(0.0, 1.0, size=SPEECH_FEATURE_COUNT - PROSODIC_FEATURE_COUNT)
        end_frame = (w + 1) * spec.window_frames - 1
        rows.append(
            SpeechFeatureRow(
                recording_id=spec.recording_id,
                window_index=w,
                timestamp_s=end_frame / spec.fps,
                features=tuple(float(v) for v in np.concatenate([prosodic, rest])),
            )
        )
    return rows


def generate_synthetic_recording(spec: SyntheticSpec) -> SyntheticRecording:
    """Deterministic for a given spec; see module docstring for the signal model."""
    rng = np.random.default_rng(spec.seed)
    configs = {
        m: default_config(m, window_frames=spec.window_frames, fps=spec.fps)
        for m in VISUAL_MODALITIES
    }
    streams = {m: _visual_stream(spec, configs[m], rng) for m in VISUAL_MODALITIES}
    theta = speech_coefficients(spec.seed)
    speech_rows = _speech_rows(spec, theta, rng)

    annotations = [
        AnnotationRecord(
            recording_id=spec.recording_id,
            start_frame=w * spec.window_frames,
            end_frame=(w + 1) * spec.window_frames - 1,
            intensity=float(target),
            annotator_id=_ANNOTATOR,
            created_at=_CREATED_AT,
        )
        for w, target in enumerate(spec.curve)
    ]

    n_frames = len(spec.curve) * spec.window_frames
    meta = RecordingMeta(
        recording_id=spec.recording_id,
        subject_id=spec.subject_id,
        fps=spec.fps,
        modalities=tuple(VISUAL_MODALITIES) + (Modality.SPEECH,),
        frame_counts={m.value: n_frames for m in VISUAL_MODALITIES},
        source="synthetic",
    )
    return SyntheticRecording(
        meta=meta,
        configs=configs,
        streams=streams,
        speech_rows=speech_rows,
        annotations=annotations,
        speech_theta=theta,
    )
