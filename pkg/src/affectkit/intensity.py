"""Linear intensity models, least-squares fitting, and time-windowed
multimodal fusion.

Visual modalities map (classifier confidence, mean displacement, mean
speed) through a 4-coefficient linear model; speech maps the 38-wide
prosodic slice through a coefficient vector (no intercept by default).
Raw linear outputs are clamped to [0, 1] for emission; the raw value is
kept alongside for diagnostics.

Fitting solves the least-squares normal equations, with an optional
ridge term (intercept unpenalized) and an automatic tiny-ridge fallback
when the Gram matrix is near-singular. Fusion accumulates per-modality
estimates over a time window, averages within each modality first, then
across modalities.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from . import classify, features as features_mod
from .datamodel import (
    PROSODIC_FEATURE_COUNT,
    Frame,
    FrameStream,
    Modality,
    ModalityConfig,
    SpeechFeatureRow,
    ValidationError,
)
from .features import WindowAggregate, WindowRef

FUSED = "fused"

CONDITION_LIMIT = 1e10
FALLBACK_RIDGE = 1e-8

MODEL_FORMAT_VERSION = 1


def clamp01(v: float) -> float:
    return min(1.0, max(0.0, v))


@dataclass(frozen=True)
class VisualIntensityModel:
    """Coefficients (confidence, mean displacement, mean speed, intercept)."""

    modality: Modality
    theta: tuple[float, float, float, float]

    def __post_init__(self):
        if self.modality is Modality.SPEECH:
            raise ValidationError("visual model cannot target speech")
        if not all(math.isfinite(t) for t in self.theta):
            raise ValidationError("non-finite coefficient")


@dataclass(frozen=True)
class SpeechIntensityModel:
    """Coefficients over the prosodic slice; optional intercept, default off."""

    theta: tuple[float, ...]
    include_intercept: bool = False

    def __post_init__(self):
        expected = PROSODIC_FEATURE_COUNT + (1 if self.include_intercept else 0)
        if len(self.theta) != expected:
            raise ValidationError(
                f"expected {expected} coefficients, got {len(self.theta)}"
            )
        if not all(math.isfinite(t) for t in self.theta):
            raise ValidationError("non-finite coefficient")


@dataclass(frozen=True)
class IntensityEstimate:
    """One clamped [0, 1] estimate with its pre-clamp value and provenance.

    ``modality`` is a modality name or the distinguished "fused" marker.
    """

    value: float
    raw: float
    modality: str
    timestamp_s: float
    window: WindowRef | None = None

    def __post_init__(self):
        if self.value != clamp01(self.raw):
            raise ValidationError("value must equal the clamped raw output")


def make_estimate(
    raw: float,
    modality: str,
    timestamp_s: float,
    window: WindowRef | None = None,
) -> IntensityEstimate:
    if not math.isfinite(raw):
        raise ValidationError("non-finite intensity output")
    return IntensityEstimate(
        value=clamp01(raw),
        raw=raw,
        modality=modality,
        timestamp_s=timestamp_s,
        window=window,
    )


def estimate_visual(
    model: VisualIntensityModel, c_f: float, agg: WindowAggregate, timestamp_s: float
) -> IntensityEstimate:
    """Linear combination of confidence, mean displacement, and mean speed."""
    if agg.modality != model.modality:
        raise ValidationError(
            f"aggregate modality {agg.modality.value} does not match model "
            f"{model.modality.value}"
        )
    if not math.isfinite(c_f):
        raise ValidationError("non-finite confidence")
    t1, t2, t3, t4 = model.theta
    raw = t1 * c_f + t2 * agg.mean_displacement + t3 * agg.mean_speed + t4
    return make_estimate(raw, model.modality.value, timestamp_s, agg.window)


def estimate_speech(
    model: SpeechIntensityModel, row: SpeechFeatureRow
) -> IntensityEstimate:
    """Dot product of the coefficients with the prosodic feature slice."""
    prosodic = row.prosodic
    if model.include_intercept:
        raw = float(np.dot(model.theta[:-1], prosodic)) + model.theta[-1]
    else:
        raw = float(np.dot(model.theta, prosodic))
    window = WindowRef(
        recording_id=row.recording_id,
        start_frame=row.window_index,
        end_frame=row.window_index,
    )
    return make_estimate(raw, Modality.SPEECH.value, row.timestamp_s, window)


# ---------------------------------------------------------------------------
# Least-squares fitting

@dataclass(frozen=True)
class FitReport:
    theta: tuple[float, ...]
    cost: float          # residual sum of squares on the training rows
    condition: float     # condition number of the Gram matrix
    ridge: float         # ridge actually used (0 for pure OLS)
    rows: int
    ridge_fallback: bool = False

    def __post_init__(self):
        if self.cost < 0:
            raise ValidationError("cost cannot be negative")


def cost_value(theta: Sequence[float], x: np.ndarray, y: np.ndarray) -> float:
    """Sum of squared residuals of the linear model."""
    r = y - x @ np.asarray(theta, dtype=float)
    return float(r @ r)


def cost_gradient(theta: Sequence[float], x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Analytic gradient of the squared-residual cost with respect to theta."""
    r = y - x @ np.asarray(theta, dtype=float)
    return -2.0 * (x.T @ r)


def _solve_least_squares(
    x: np.ndarray, y: np.ndarray, lam: float, penalize: np.ndarray
) -> tuple[np.ndarray, FitReport]:
    n, d = x.shape
    if lam < 0:
        raise ValidationError("ridge must be non-negative")
    if lam == 0 and n < d:
        raise ValidationError(f"need at least {d} rows for OLS, got {n}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValidationError("non-finite fitting inputs")
    gram = x.T @ x
    condition = float(np.linalg.cond(gram))
    used_lam = lam
    fallback = False
    if lam == 0 and condition > CONDITION_LIMIT:
        used_lam = FALLBACK_RIDGE
        fallback = True
    reg = used_lam * np.diag(penalize.astype(float))
    theta = np.linalg.solve(gram + reg, x.T @ y)
    cost = cost_value(theta, x, y)
    report = FitReport(
        theta=tuple(float(t) for t in theta),
        cost=cost,
        condition=condition,
        ridge=used_lam,
        rows=n,
        ridge_fallback=fallback,
    )
    return theta, report


def _check_labels(labels: Sequence[float]) -> None:
    for v in labels:
        if not (0.0 <= v <= 1.0):
            raise ValidationError(f"label {v} outside [0, 1]")


def fit_visual(
    modality: Modality,
    rows: Sequence[tuple[float, float, float]],  # (confidence, mean disp, mean speed)
    labels: Sequence[float],
    lam: float = 0.0,
) -> tuple[VisualIntensityModel, FitReport]:
    if len(rows) != len(labels):
        raise ValidationError("rows and labels must align")
    _check_labels(labels)
    x = np.array([[c, d, s, 1.0] for c, d, s in rows], dtype=float)
    y = np.asarray(labels, dtype=float)
    penalize = np.array([1.0, 1.0, 1.0, 0.0])  # intercept unpenalized
    theta, report = _solve_least_squares(x, y, lam, penalize)
    model = VisualIntensityModel(
        modality=modality, theta=tuple(float(t) for t in theta)
    )
    return model, report


def fit_speech(
    rows: Sequence[SpeechFeatureRow],
    labels: Sequence[float],
    lam: float = 0.0,
    include_intercept: bool = False,
) -> tuple[SpeechIntensityModel, FitReport]:
    if len(rows) != len(labels):
        raise ValidationError("rows and labels must align")
    _check_labels(labels)
    p = np.array([r.prosodic for r in rows], dtype=float)
    if include_intercept:
        x = np.hstack([p, np.ones((len(rows), 1))])
        penalize = np.append(np.ones(PROSODIC_FEATURE_COUNT), 0.0)
    else:
        x = p
        penalize = np.ones(PROSODIC_FEATURE_COUNT)
    y = np.asarray(labels, dtype=float)
    theta, report = _solve_least_squares(x, y, lam, penalize)
    model = SpeechIntensityModel(
        theta=tuple(float(t) for t in theta), include_intercept=include_intercept
    )
    return model, report


# ---------------------------------------------------------------------------
# Time-windowed fusion

@dataclass
class FusionBuffer:
    """Accumulates per-modality estimates for one fusion time window."""

    window_start_s: float
    window_length_s: float = 1.0
    estimates: dict[str, list[IntensityEstimate]] = field(default_factory=dict)

    def __post_init__(self):
        if self.window_length_s <= 0:
            raise ValidationError("fusion window length must be positive")

    @property
    def window_end_s(self) -> float:
        return self.window_start_s + self.window_length_s

    def add(self, est: IntensityEstimate) -> None:
        if not (self.window_start_s <= est.timestamp_s < self.window_end_s):
            raise ValidationError(
                f"estimate at {est.timestamp_s}s outside window "
                f"[{self.window_start_s}, {self.window_end_s})"
            )
        if est.modality == FUSED:
            raise ValidationError("cannot buffer an already-fused estimate")
        self.estimates.setdefault(est.modality, []).append(est)

    def is_empty(self) -> bool:
        return not any(self.estimates.values())


def fuse_multimodal(buffer: FusionBuffer) -> IntensityEstimate | None:
    """Mean of per-modality means over the window (clamped values);
    None when the buffer holds no estimates."""
    means = [
        sum(e.value for e in ests) / len(ests)
        for _, ests in sorted(buffer.estimates.items())
        if ests
    ]
    if not means:
        return None
    raw = sum(means) / len(means)
    return make_estimate(raw, FUSED, buffer.window_end_s)


# ---------------------------------------------------------------------------
# Pipeline

@dataclass
class PipelineResult:
    per_modality: dict[str, list[IntensityEstimate]]
    fused: list[IntensityEstimate]

    def all_estimates(self) -> list[IntensityEstimate]:
        out = [e for ests in self.per_modality.values() for e in ests]
        return out + list(self.fused)


def run_pipeline(
    streams: dict[Modality, FrameStream],
    speech_rows: Sequence[SpeechFeatureRow],
    configs: dict[Modality, ModalityConfig],
    classifiers: dict[Modality, classify.LinearClassifier],
    visual_models: dict[Modality, VisualIntensityModel],
    speech_model: SpeechIntensityModel | None = None,
    fusion_window_s: float = 1.0,
) -> PipelineResult:
    """Feature extraction -> confidence -> per-modality intensity ->
    time-windowed fusion, for one recording. Deterministic."""
    per_modality: dict[str, list[IntensityEstimate]] = {}

    for modality, stream in streams.items():
        if not stream.frames:
            continue
        if modality not in visual_models:
            raise ValidationError(f"no intensity model for {modality.value}")
        if modality not in classifiers:
            raise ValidationError(f"no classifier for {modality.value}")
        config = configs[modality]
        ests: list[IntensityEstimate] = []
        for window in features_mod.window_iterator(stream, config):
            fv = features_mod.assemble_feature_vector(window, config)
            agg = features_mod.aggregate_window(fv)
            pred = classify.predict(classifiers[modality], fv.flatten())
            ests.append(
                estimate_visual(
                    visual_models[modality],
                    pred.confidence,
                    agg,
                    timestamp_s=window[-1].timestamp_s,
                )
            )
        if ests:
            per_modality[modality.value] = ests

    if speech_rows:
        if speech_model is None:
            raise ValidationError("speech rows present but no speech model")
        per_modality[Modality.SPEECH.value] = [
            estimate_speech(speech_model, row) for row in speech_rows
        ]

    # bucket every estimate into consecutive fusion windows from t = 0
    buckets: dict[int, FusionBuffer] = {}
    for ests in per_modality.values():
        for est in ests:
            k = int(est.timestamp_s // fusion_window_s)
            buf = buckets.setdefault(
                k,
                FusionBuffer(
                    window_start_s=k * fusion_window_s,
                    window_length_s=fusion_window_s,
                ),
            )
            buf.add(est)
    fused = []
    for k in sorted(buckets):
        out = fuse_multimodal(buckets[k])
        if out is not None:
            fused.append(out)
    return PipelineResult(per_modality=per_modality, fused=fused)


# ---------------------------------------------------------------------------
# Model files and estimate dumps

def intensity_model_to_dict(
    model: VisualIntensityModel | SpeechIntensityModel, report: FitReport | None = None
) -> dict:
    obj: dict = {"format_version": MODEL_FORMAT_VERSION}
    if isinstance(model, VisualIntensityModel):
        obj.update(kind="visual", modality=model.modality.value, theta=list(model.theta))
    else:
        obj.update(
            kind="speech",
            theta=list(model.theta),
            include_intercept=model.include_intercept,
        )
    if report is not None:
        obj["training"] = {
            "rows": report.rows,
            "cost": report.cost,
            "ridge": report.ridge,
            "condition": report.condition,
        }
    return obj


def intensity_model_from_dict(obj: dict) -> VisualIntensityModel | SpeechIntensityModel:
    kind = obj.get("kind")
    if kind == "visual":
        t = obj["theta"]
        if len(t) != 4:
            raise ValidationError("visual model needs 4 coefficients")
        return VisualIntensityModel(
            modality=Modality(obj["modality"]),
            theta=(float(t[0]), float(t[1]), float(t[2]), float(t[3])),
        )
    if kind == "speech":
        return SpeechIntensityModel(
            theta=tuple(float(v) for v in obj["theta"]),
            include_intercept=bool(obj.get("include_intercept", False)),
        )
    raise ValidationError(f"unknown intensity model kind {kind!r}")


def save_intensity_model(
    model: VisualIntensityModel | SpeechIntensityModel,
    writer: IO[str],
    report: FitReport | None = None,
) -> None:
    json.dump(intensity_model_to_dict(model, report), writer)


def load_intensity_model(reader: IO[str]) -> VisualIntensityModel | SpeechIntensityModel:
    return intensity_model_from_dict(json.load(reader))


def write_estimate_csv(estimates: Sequence[IntensityEstimate], writer: IO[str]) -> None:
    writer.write("recording_id,timestamp_s,modality,raw,value\n")
    for e in estimates:
        rid = e.window.recording_id if e.window else ""
        writer.write(
            f"{rid},{repr(e.timestamp_s)},{e.modality},{repr(e.raw)},{repr(e.value)}\n"
        )
