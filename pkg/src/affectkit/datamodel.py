"""Domain types, file formats, parsing/serialization, and validation.

Covers timestamped feature-point frames for the visual modalities (face,
body, hand), precomputed 988-wide acoustic feature rows for speech,
human intensity annotations, and recording metadata.

File formats:
  - Frame file: UTF-8 CSV, header
    ``recording_id,modality,frame_index,timestamp_s,x0,y0,...``, one frame
    per line, LF line endings.
  - Speech file: UTF-8 CSV, header
    ``recording_id,window_index,timestamp_s,f000,...,f987``.
  - Annotation file: JSON Lines with keys recording_id, start_frame,
    end_frame, intensity, annotator_id, created_at (RFC 3339).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from typing import IO, Iterable, Sequence

SPEECH_FEATURE_COUNT = 988
PROSODIC_FEATURE_COUNT = 38  # indices 0..37 feed the speech intensity model

DEFAULT_WINDOW_FRAMES = 10
DEFAULT_FPS = 30.0


class Modality(str, Enum):
    FACE = "face"
    BODY = "body"
    HAND = "hand"
    SPEECH = "speech"

    @property
    def is_visual(self) -> bool:
        return self is not Modality.SPEECH


VISUAL_MODALITIES = (Modality.FACE, Modality.BODY, Modality.HAND)

DEFAULT_POINT_COUNTS = {
    Modality.FACE: 60,
    Modality.BODY: 12,
    Modality.HAND: 8,
}


class ValidationError(ValueError):
    """An invariant on a domain type was violated."""


class ParseError(ValidationError):
    """Malformed input; carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def _chain_pairs(point_count: int) -> tuple[tuple[int, int], ...]:
    """Consecutive-index pairs (0,1), (1,2), ..."""
    return tuple((i, i + 1) for i in range(point_count - 1))


def _all_pairs(point_count: int) -> tuple[tuple[int, int], ...]:
    return tuple(
        (i, j) for i in range(point_count) for j in range(i + 1, point_count)
    )


@dataclass(frozen=True)
class ModalityConfig:
    """Per-modality geometry and windowing configuration.

    ``point_count`` is the number of tracked 2-D points; ``angle_pairs``
    lists the (i, j) index pairs whose connecting-line angles enter the
    feature vector. ``window_frames`` is the number of consecutive frames
    aggregated per feature window and per annotation.
    """

    modality: Modality
    point_count: int
    angle_pairs: tuple[tuple[int, int], ...] = ()
    window_frames: int = DEFAULT_WINDOW_FRAMES
    fps: float = DEFAULT_FPS
    # Optional per-recording coordinate normalization: divide all coords by
    # the mean distance between this point pair (default off).
    normalize_reference_pair: tuple[int, int] | None = None

    def __post_init__(self):
        if self.modality is Modality.SPEECH:
            raise ValidationError("speech modality has no point configuration")
        if self.point_count <= 0:
            raise ValidationError("point_count must be positive")
        if self.window_frames < 2:
            raise ValidationError("window_frames must be >= 2")
        if self.fps <= 0:
            raise ValidationError("fps must be positive")
        seen = set()
        for i, j in self.angle_pairs:
            if not (0 <= i < j < self.point_count):
                raise ValidationError(f"angle pair ({i}, {j}) out of range")
            if (i, j) in seen:
                raise ValidationError(f"duplicate angle pair ({i}, {j})")
            seen.add((i, j))


def default_config(
    modality: Modality,
    window_frames: int = DEFAULT_WINDOW_FRAMES,
    fps: float = DEFAULT_FPS,
    full_face_pairs: bool = False,
) -> ModalityConfig:
    """Default geometry per modality.

    Face uses the consecutive-index chain of angle pairs to keep the
    vector compact (all pairs behind ``full_face_pairs``); hand and body
    use all unordered pairs.
    """
    n = DEFAULT_POINT_COUNTS[modality]
    if modality is Modality.FACE and not full_face_pairs:
        pairs = _chain_pairs(n)
    else:
        pairs = _all_pairs(n)
    return ModalityConfig(
        modality=modality,
        point_count=n,
        angle_pairs=pairs,
        window_frames=window_frames,
        fps=fps,
    )


@dataclass(frozen=True)
class Frame:
    """One timestamped sample of 2-D feature points for a visual modality."""

    recording_id: str
    modality: Modality
    frame_index: int
    timestamp_s: float
    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.modality.is_visual:
            raise ValidationError("frames exist only for visual modalities")
        if self.frame_index < 0:
            raise ValidationError("frame_index must be non-negative")
        for x, y in self.points:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValidationError(
                    f"non-finite coordinate in frame {self.frame_index}"
                )


@dataclass(frozen=True)
class FrameStream:
    """Validated, index-ordered frames of one (recording, modality) pair."""

    recording_id: str
    modality: Modality
    frames: tuple[Frame, ...]

    def __post_init__(self):
        prev: Frame | None = None
        for f in self.frames:
            if f.recording_id != self.recording_id or f.modality != self.modality:
                raise ValidationError("frame does not belong to this stream")
            if prev is not None:
                if f.frame_index <= prev.frame_index:
                    raise ValidationError(
                        f"frame_index not strictly increasing at {f.frame_index}"
                    )
                if f.timestamp_s <= prev.timestamp_s:
                    raise ValidationError(
                        f"timestamp_s not strictly increasing at frame {f.frame_index}"
                    )
            prev = f

    def __len__(self) -> int:
        return len(self.frames)


@dataclass(frozen=True)
class SpeechFeatureRow:
    """One precomputed acoustic feature row (988 values) for one window."""

    recording_id: str
    window_index: int
    timestamp_s: float
    features: tuple[float, ...]

    def __post_init__(self):
        if self.window_index < 0:
            raise ValidationError("window_index must be non-negative")
        if len(self.features) != SPEECH_FEATURE_COUNT:
            raise ValidationError(
                f"expected {SPEECH_FEATURE_COUNT} features, got {len(self.features)}"
            )
        for v in self.features:
            if not math.isfinite(v):
                raise ValidationError(
                    f"non-finite feature in window {self.window_index}"
                )

    @property
    def prosodic(self) -> tuple[float, ...]:
        return self.features[:PROSODIC_FEATURE_COUNT]


def _check_rfc3339(value: str) -> None:
    try:
        datetime.fromisoformat(value.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ValidationError(f"created_at is not RFC 3339: {value!r}") from exc


@dataclass(frozen=True)
class AnnotationRecord:
    """Human-assigned intensity label in [0, 1] for one N-frame window.

    ``created_at`` is kept as its RFC 3339 source string so records
    round-trip byte-exactly.
    """

    recording_id: str
    start_frame: int
    end_frame: int
    intensity: float
    annotator_id: str
    created_at: str

    def __post_init__(self):
        if self.start_frame < 0 or self.end_frame < self.start_frame:
            raise ValidationError("invalid frame range")
        if not (0.0 <= self.intensity <= 1.0):
            raise ValidationError(
                f"intensity {self.intensity} outside [0, 1]"
            )
        _check_rfc3339(self.created_at)

    def window_length(self) -> int:
        return self.end_frame - self.start_frame + 1

    def check_window(self, window_frames: int) -> None:
        if self.window_length() != window_frames:
            raise ValidationError(
                f"annotation spans {self.window_length()} frames, expected {window_frames}"
            )

    @property
    def key(self) -> tuple[str, int, int, str]:
        """(recording_id, start_frame, end_frame, annotator_id); last write wins."""
        return (self.recording_id, self.start_frame, self.end_frame, self.annotator_id)


@dataclass(frozen=True)
class RecordingMeta:
    recording_id: str
    subject_id: str
    fps: float
    modalities: tuple[Modality, ...]
    frame_counts: dict[str, int] = field(default_factory=dict)
    source: str = "synthetic"

    def __post_init__(self):
        if self.fps <= 0:
            raise ValidationError("fps must be positive")
        for m, c in self.frame_counts.items():
            if c < 0:
                raise ValidationError(f"negative frame count for {m}")


# ---------------------------------------------------------------------------
# Frame CSV

def _format_float(v: float) -> str:
    # repr is the shortest string that round-trips the double exactly
    return repr(float(v))


def frame_header(point_count: int) -> list[str]:
    cols = ["recording_id", "modality", "frame_index", "timestamp_s"]
    for i in range(point_count):
        cols += [f"x{i}", f"y{i}"]
    return cols


def parse_frames(reader: IO[str] | Iterable[str], config: ModalityConfig) -> FrameStream:
    """Parse a frame CSV into a validated stream.

    Raises ParseError (with line number) on malformed lines, wrong point
    counts, non-monotonic indices/timestamps, or non-finite coordinates.
    """
    rows = csv.reader(reader)
    try:
        header = next(rows)
    except StopIteration:
        raise ParseError("empty input, expected header", line=1)
    expected = frame_header(config.point_count)
    if header != expected:
        raise ParseError(
            f"bad header for {config.modality.value} "
            f"({len(header)} columns, expected {len(expected)})",
            line=1,
        )
    frames: list[Frame] = []
    recording_id: str | None = None
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != len(expected):
            raise ParseError(
                f"{len(row)} columns, expected {len(expected)} "
                f"({config.point_count} points for {config.modality.value})",
                line=lineno,
            )
        try:
            modality = Modality(row[1])
            frame_index = int(row[2])
            timestamp_s = float(row[3])
            coords = [float(v) for v in row[4:]]
        except ValueError as exc:
            raise ParseError(f"malformed value: {exc}", line=lineno)
        if modality != config.modality:
            raise ParseError(
                f"modality {modality.value!r} does not match config "
                f"{config.modality.value!r}",
                line=lineno,
            )
        points = tuple(zip(coords[0::2], coords[1::2]))
        try:
            frame = Frame(row[0], modality, frame_index, timestamp_s, points)
        except ValidationError as exc:
            raise ParseError(str(exc), line=lineno)
        if recording_id is None:
            recording_id = frame.recording_id
        elif frame.recording_id != recording_id:
            raise ParseError(
                f"recording_id {frame.recording_id!r} differs from {recording_id!r}",
                line=lineno,
            )
        if frames:
            prev = frames[-1]
            if frame.frame_index <= prev.frame_index:
                raise ParseError(
                    f"frame_index {frame.frame_index} not greater than "
                    f"{prev.frame_index}",
                    line=lineno,
                )
            if frame.timestamp_s <= prev.timestamp_s:
                raise ParseError(
                    f"timestamp_s {frame.timestamp_s} not greater than "
                    f"{prev.timestamp_s}",
                    line=lineno,
                )
        frames.append(frame)
    return FrameStream(
        recording_id=recording_id if recording_id is not None else "",
        modality=config.modality,
        frames=tuple(frames),
    )


def write_frames(stream: FrameStream, writer: IO[str]) -> None:
    """Write a stream as frame CSV; parse_frames inverts this exactly."""
    point_count = len(stream.frames[0].points) if stream.frames else 0
    if stream.frames:
        header = frame_header(point_count)
    else:
        header = frame_header(0)
    writer.write(",".join(header) + "\n")
    for f in stream.frames:
        cells = [
            f.recording_id,
            f.modality.value,
            str(f.frame_index),
            _format_float(f.timestamp_s),
        ]
        for x, y in f.points:
            cells.append(_format_float(x))
            cells.append(_format_float(y))
        writer.write(",".join(cells) + "\n")


# ---------------------------------------------------------------------------
# Speech CSV

def speech_header() -> list[str]:
    return ["recording_id", "window_index", "timestamp_s"] + [
        f"f{i:03d}" for i in range(SPEECH_FEATURE_COUNT)
    ]


def parse_speech_features(reader: IO[str] | Iterable[str]) -> list[SpeechFeatureRow]:
    """Parse the speech feature CSV; rows are returned ordered by window_index."""
    rows = csv.reader(reader)
    try:
        header = next(rows)
    except StopIteration:
        raise ParseError("empty input, expected header", line=1)
    expected = speech_header()
    if header != expected:
        raise ParseError(
            f"bad speech header ({len(header)} columns, expected {len(expected)})",
            line=1,
        )
    out: list[SpeechFeatureRow] = []
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != len(expected):
            raise ParseError(
                f"{len(row)} columns, expected {len(expected)}", line=lineno
            )
        try:
            rec = SpeechFeatureRow(
                recording_id=row[0],
                window_index=int(row[1]),
                timestamp_s=float(row[2]),
                features=tuple(float(v) for v in row[3:]),
            )
        except (ValueError, ValidationError) as exc:
            raise ParseError(str(exc), line=lineno)
        out.append(rec)
    out.sort(key=lambda r: r.window_index)
    return out


def write_speech_features(rows: Sequence[SpeechFeatureRow], writer: IO[str]) -> None:
    writer.write(",".join(speech_header()) + "\n")
    for r in rows:
        cells = [r.recording_id, str(r.window_index), _format_float(r.timestamp_s)]
        cells += [_format_float(v) for v in r.features]
        writer.write(",".join(cells) + "\n")


# ---------------------------------------------------------------------------
# Annotation JSONL

_ANNOTATION_KEYS = (
    "recording_id",
    "start_frame",
    "end_frame",
    "intensity",
    "annotator_id",
    "created_at",
)


def parse_annotations(
    reader: IO[str] | Iterable[str],
    window_frames: int | None = DEFAULT_WINDOW_FRAMES,
) -> list[AnnotationRecord]:
    """Parse JSON Lines annotations, validating every record.

    ``window_frames`` enforces the configured window length; pass None to
    skip that check.
    """
    out: list[AnnotationRecord] = []
    for lineno, line in enumerate(reader, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}", line=lineno)
        missing = [k for k in _ANNOTATION_KEYS if k not in obj]
        if missing:
            raise ParseError(f"missing keys: {missing}", line=lineno)
        try:
            rec = AnnotationRecord(
                recording_id=str(obj["recording_id"]),
                start_frame=int(obj["start_frame"]),
                end_frame=int(obj["end_frame"]),
                intensity=float(obj["intensity"]),
                annotator_id=str(obj["annotator_id"]),
                created_at=str(obj["created_at"]),
            )
            if window_frames is not None:
                rec.check_window(window_frames)
        except (ValueError, ValidationError) as exc:
            raise ParseError(str(exc), line=lineno)
        out.append(rec)
    return out


def annotation_to_dict(rec: AnnotationRecord) -> dict:
    return {
        "recording_id": rec.recording_id,
        "start_frame": rec.start_frame,
        "end_frame": rec.end_frame,
        "intensity": rec.intensity,
        "annotator_id": rec.annotator_id,
        "created_at": rec.created_at,
    }


def write_annotations(records: Sequence[AnnotationRecord], writer: IO[str]) -> None:
    for rec in records:
        writer.write(json.dumps(annotation_to_dict(rec)) + "\n")


def normalized_stream(stream: FrameStream, config: ModalityConfig) -> FrameStream:
    """Divide all coordinates by the mean distance between the configured
    reference point pair (identity when the pair is unset)."""
    pair = config.normalize_reference_pair
    if pair is None or not stream.frames:
        return stream
    i, j = pair
    dists = [
        math.dist(f.points[i], f.points[j]) for f in stream.frames
    ]
    ref = sum(dists) / len(dists)
    if ref <= 0:
        raise ValidationError("degenerate reference pair: zero mean distance")
    frames = tuple(
        replace(
            f,
            points=tuple((x / ref, y / ref) for x, y in f.points),
        )
        for f in stream.frames
    )
    return replace(stream, frames=frames)
