"""Kinematic feature extraction over N-frame windows.

Per window and modality the feature vector bundles the last frame's
coordinates, angles of configured point-pair lines against the
horizontal, and per-point motion terms: net displacement (first to last
frame), average path speed (summed step lengths over the window
duration), and the orientation of the net motion.

Displacement is NET (endpoint to endpoint); speed is PATH (total
travelled length per second). Window duration comes from timestamps,
not the nominal fps, so dropped frames do not skew speeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterator, Sequence

from .datamodel import (
    Frame,
    FrameStream,
    Modality,
    ModalityConfig,
    ValidationError,
)


@dataclass(frozen=True)
class WindowRef:
    recording_id: str
    start_frame: int
    end_frame: int


@dataclass(frozen=True)
class VisualFeatureVector:
    """One window's feature bundle for a visual modality.

    ``orientations`` are velocity directions in (-pi, pi]; they are
    unrelated to any model coefficients despite sharing a Greek letter
    in common notation.
    """

    modality: Modality
    window: WindowRef
    coords: tuple[float, ...]          # x0, y0, x1, y1, ... of the last frame
    angles: tuple[float, ...]          # per configured pair, (-pi/2, pi/2]
    displacements: tuple[float, ...]   # net displacement per point, >= 0
    speeds: tuple[float, ...]          # path speed per point, units/s, >= 0
    orientations: tuple[float, ...]    # net-motion direction per point

    def __post_init__(self):
        n = len(self.displacements)
        if len(self.coords) != 2 * n or len(self.speeds) != n or len(self.orientations) != n:
            raise ValidationError("feature array lengths inconsistent")
        for v in self.coords + self.angles + self.displacements + self.speeds + self.orientations:
            if not math.isfinite(v):
                raise ValidationError("non-finite feature value")
        if any(d < 0 for d in self.displacements) or any(s < 0 for s in self.speeds):
            raise ValidationError("displacement and speed must be non-negative")

    def flatten(self) -> list[float]:
        """Deterministic field order: coords, angles, displacements, then
        (speed, orientation) interleaved per point."""
        out = list(self.coords) + list(self.angles) + list(self.displacements)
        for s, t in zip(self.speeds, self.orientations):
            out += [s, t]
        return out


@dataclass(frozen=True)
class WindowAggregate:
    """Window means of the motion features: mean displacement and mean speed."""

    modality: Modality
    window: WindowRef
    mean_displacement: float
    mean_speed: float
    m: int  # number of motion features averaged (= point count)

    def __post_init__(self):
        if self.mean_displacement < 0 or self.mean_speed < 0:
            raise ValidationError("window aggregates must be non-negative")


def compute_point_kinematics(
    track: Sequence[tuple[float, float]], duration_s: float
) -> tuple[float, float, float]:
    """(net displacement, average path speed, net-motion orientation)
    for one point's positions across a window.

    Orientation is 0 by convention when the point ends where it started.
    """
    if len(track) < 2:
        raise ValidationError("kinematics need at least 2 positions")
    if duration_s <= 0:
        raise ValidationError("duration must be positive")
    x0, y0 = track[0]
    x1, y1 = track[-1]
    displacement = math.hypot(x1 - x0, y1 - y0)
    path = 0.0
    for (ax, ay), (bx, by) in zip(track, track[1:]):
        path += math.hypot(bx - ax, by - ay)
    speed = path / duration_s
    orientation = math.atan2(y1 - y0, x1 - x0) if displacement > 0 else 0.0
    return displacement, speed, orientation


def compute_pair_angle(p_i: tuple[float, float], p_j: tuple[float, float]) -> float:
    """Angle in (-pi/2, pi/2] between the undirected line through the two
    points and the horizontal; 0 for coincident points."""
    dx = p_j[0] - p_i[0]
    dy = p_j[1] - p_i[1]
    if dx == 0 and dy == 0:
        return 0.0
    angle = math.atan2(dy, dx)
    # fold the undirected line into (-pi/2, pi/2]
    if angle > math.pi / 2:
        angle -= math.pi
    elif angle <= -math.pi / 2:
        angle += math.pi
    return angle


def fold_angle(angle: float) -> float:
    """Fold any angle into the undirected-line range (-pi/2, pi/2]."""
    a = math.remainder(angle, math.pi)
    if a <= -math.pi / 2:
        a += math.pi
    return a


def assemble_feature_vector(
    frames: Sequence[Frame], config: ModalityConfig
) -> VisualFeatureVector:
    """Build the window feature vector from exactly N contiguous frames."""
    n = config.window_frames
    if len(frames) != n:
        raise ValidationError(f"expected {n} frames, got {len(frames)}")
    modality = frames[0].modality
    for f in frames:
        if f.modality != modality:
            raise ValidationError("mixed modalities in window")
        if len(f.points) != config.point_count:
            raise ValidationError(
                f"frame {f.frame_index} has {len(f.points)} points, "
                f"expected {config.point_count}"
            )
    for a, b in zip(frames, frames[1:]):
        if b.frame_index != a.frame_index + 1:
            raise ValidationError(
                f"frame index gap between {a.frame_index} and {b.frame_index}"
            )
    duration = frames[-1].timestamp_s - frames[0].timestamp_s
    if duration <= 0:
        raise ValidationError("window has non-positive duration")

    last = frames[-1]
    coords = tuple(c for p in last.points for c in p)
    angles = tuple(
        compute_pair_angle(last.points[i], last.points[j])
        for i, j in config.angle_pairs
    )
    displacements = []
    speeds = []
    orientations = []
    for p in range(config.point_count):
        track = [f.points[p] for f in frames]
        d, s, o = compute_point_kinematics(track, duration)
        displacements.append(d)
        speeds.append(s)
        orientations.append(o)
    return VisualFeatureVector(
        modality=modality,
        window=WindowRef(
            recording_id=last.recording_id,
            start_frame=frames[0].frame_index,
            end_frame=last.frame_index,
        ),
        coords=coords,
        angles=angles,
        displacements=tuple(displacements),
        speeds=tuple(speeds),
        orientations=tuple(orientations),
    )


def aggregate_window(fv: VisualFeatureVector) -> WindowAggregate:
    """Arithmetic means of per-point displacement and speed."""
    m = len(fv.displacements)
    return WindowAggregate(
        modality=fv.modality,
        window=fv.window,
        mean_displacement=sum(fv.displacements) / m,
        mean_speed=sum(fv.speeds) / m,
        m=m,
    )


def window_iterator(
    stream: FrameStream, config: ModalityConfig
) -> Iterator[tuple[Frame, ...]]:
    """Non-overlapping N-frame windows (stride N) aligned to the stream
    start; the trailing partial window is dropped."""
    n = config.window_frames
    frames = stream.frames
    for start in range(0, len(frames) - n + 1, n):
        yield frames[start : start + n]


def extract_features(
    stream: FrameStream, config: ModalityConfig
) -> list[VisualFeatureVector]:
    return [assemble_feature_vector(w, config) for w in window_iterator(stream, config)]


def feature_csv_header(config: ModalityConfig) -> list[str]:
    cols = ["recording_id", "modality", "start_frame", "end_frame"]
    for i in range(config.point_count):
        cols += [f"x{i}", f"y{i}"]
    for i, j in config.angle_pairs:
        cols.append(f"angle_{i}_{j}")
    for i in range(config.point_count):
        cols.append(f"disp{i}")
    for i in range(config.point_count):
        cols += [f"speed{i}", f"orient{i}"]
    return cols


def write_feature_csv(
    vectors: Sequence[VisualFeatureVector], config: ModalityConfig, writer: IO[str]
) -> None:
    """One row per window, columns in the deterministic flatten order."""
    writer.write(",".join(feature_csv_header(config)) + "\n")
    for fv in vectors:
        cells = [
            fv.window.recording_id,
            fv.modality.value,
            str(fv.window.start_frame),
            str(fv.window.end_frame),
        ]
        cells += [repr(v) for v in fv.flatten()]
        writer.write(",".join(cells) + "\n")
