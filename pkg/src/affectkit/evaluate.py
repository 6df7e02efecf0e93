"""Margin-based intensity accuracy, classification metrics, k-fold cross
validation, and the per-modality vs multimodal experiment harness.

An intensity estimate counts as accurate when it falls within an
inclusive +/-margin band (default 0.1) of the annotated label. The
experiment report mirrors the two-table layout of the source study:
recognition metrics per modality plus majority-vote fusion, and
intensity-estimation accuracy per modality plus window-averaged fusion.
The original study's "Rate" column has no defined semantics, so plain
accuracy is reported and labeled as such.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import classify, features as features_mod, intensity
from .classify import ANGER, NOT_ANGER, LinearClassifier, TrainConfig, TrainingExample
from .datamodel import (
    AnnotationRecord,
    FrameStream,
    Modality,
    ModalityConfig,
    SpeechFeatureRow,
    ValidationError,
)
from .synth import SyntheticRecording

ANGER_THRESHOLD = 0.5  # windows at or above this intensity count as anger


@dataclass(frozen=True)
class IntensityAccuracyReport:
    modality: str
    n: int
    accuracy: float
    margin: float
    mae: float

    def __post_init__(self):
        if not (0.0 <= self.accuracy <= 1.0):
            raise ValidationError("accuracy outside [0, 1]")


@dataclass(frozen=True)
class ClassificationReport:
    modality: str
    accuracy: float
    precision: float
    recall: float
    tp: int
    fp: int
    tn: int
    fn: int
    precision_defined: bool = True
    recall_defined: bool = True


@dataclass(frozen=True)
class FoldPlan:
    k: int
    seed: int
    folds: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        seen: set[int] = set()
        for fold in self.folds:
            overlap = seen.intersection(fold)
            if overlap:
                raise ValidationError(f"folds overlap on indices {sorted(overlap)}")
            seen.update(fold)
        sizes = [len(f) for f in self.folds]
        if sizes and max(sizes) - min(sizes) > 1:
            raise ValidationError("fold sizes differ by more than 1")

    def split(self, fold_index: int) -> tuple[list[int], list[int]]:
        """(train indices, test indices) for one fold."""
        test = list(self.folds[fold_index])
        train = [i for f, fold in enumerate(self.folds) if f != fold_index for i in fold]
        return train, test


def intensity_accuracy(
    estimates: Sequence[float],
    labels: Sequence[float],
    margin: float = 0.1,
    modality: str = "",
) -> IntensityAccuracyReport:
    """Fraction of estimates within the inclusive +/-margin band of the label."""
    if len(estimates) != len(labels):
        raise ValidationError("estimates and labels must align")
    if not estimates:
        raise ValidationError("empty evaluation set")
    for v in labels:
        if not (0.0 <= v <= 1.0):
            raise ValidationError(f"label {v} outside [0, 1]")
    errors = [abs(e - l) for e, l in zip(estimates, labels)]
    # 1 ulp-scale slack keeps the boundary inclusive for decimal inputs
    # (e.g. label + 0.1 must count as accurate at margin 0.1)
    hits = sum(1 for e in errors if e <= margin + 1e-12)
    return IntensityAccuracyReport(
        modality=modality,
        n=len(estimates),
        accuracy=hits / len(estimates),
        margin=margin,
        mae=sum(errors) / len(errors),
    )


def classification_metrics(
    predictions: Sequence[str], labels: Sequence[str], modality: str = ""
) -> ClassificationReport:
    """Confusion-matrix metrics with anger as the positive class;
    undefined ratios report 0 and are flagged."""
    if len(predictions) != len(labels):
        raise ValidationError("predictions and labels must align")
    if not predictions:
        raise ValidationError("empty evaluation set")
    tp = sum(1 for p, l in zip(predictions, labels) if p == ANGER and l == ANGER)
    fp = sum(1 for p, l in zip(predictions, labels) if p == ANGER and l != ANGER)
    fn = sum(1 for p, l in zip(predictions, labels) if p != ANGER and l == ANGER)
    tn = len(predictions) - tp - fp - fn
    precision_defined = (tp + fp) > 0
    recall_defined = (tp + fn) > 0
    return ClassificationReport(
        modality=modality,
        accuracy=(tp + tn) / len(predictions),
        precision=tp / (tp + fp) if precision_defined else 0.0,
        recall=tp / (tp + fn) if recall_defined else 0.0,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        precision_defined=precision_defined,
        recall_defined=recall_defined,
    )


def kfold(
    n_items: int,
    k: int = 10,
    seed: int = 0,
    labels: Sequence[str] | None = None,
) -> FoldPlan:
    """Seeded shuffle then round-robin fold assignment, stratified by
    label when labels are supplied."""
    if k < 2:
        raise ValidationError("k must be >= 2")
    if k > n_items:
        raise ValidationError(f"k={k} exceeds item count {n_items}")
    rng = np.random.default_rng(seed)
    if labels is not None:
        if len(labels) != n_items:
            raise ValidationError("labels must align with items")
        order: list[int] = []
        for cls in sorted(set(labels)):
            members = [i for i in range(n_items) if labels[i] == cls]
            perm = rng.permutation(len(members))
            order.extend(members[int(p)] for p in perm)
    else:
        order = [int(i) for i in rng.permutation(n_items)]
    folds: list[list[int]] = [[] for _ in range(k)]
    for pos, idx in enumerate(order):
        folds[pos % k].append(idx)
    return FoldPlan(k=k, seed=seed, folds=tuple(tuple(f) for f in folds))


# ---------------------------------------------------------------------------
# Experiment harness

@dataclass
class Dataset:
    """Everything run_experiment needs for one recording."""

    streams: dict[Modality, FrameStream]
    speech_rows: list[SpeechFeatureRow]
    annotations: list[AnnotationRecord]
    configs: dict[Modality, ModalityConfig]

    @classmethod
    def from_synthetic(cls, rec: SyntheticRecording) -> "Dataset":
        return cls(
            streams=dict(rec.streams),
            speech_rows=list(rec.speech_rows),
            annotations=list(rec.annotations),
            configs=dict(rec.configs),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    k: int = 10
    seed: int = 0
    margin: float = 0.1
    ridge: float = 0.0
    train: TrainConfig = TrainConfig()


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    recognition: list[ClassificationReport]      # Table 1 analogue
    intensity: list[IntensityAccuracyReport]     # Table 2 analogue
    per_fold_intensity: dict[str, list[float]] = field(default_factory=dict)

    def intensity_accuracy_of(self, modality: str) -> float:
        for row in self.intensity:
            if row.modality == modality:
                return row.accuracy
        raise KeyError(modality)


@dataclass
class _WindowData:
    """Aligned per-window evidence across modalities."""

    label: float
    class_label: str
    visual: dict[Modality, tuple[features_mod.VisualFeatureVector, features_mod.WindowAggregate]]
    speech: SpeechFeatureRow | None


def _collect_windows(dataset: Dataset) -> list[_WindowData]:
    if not dataset.annotations:
        raise ValidationError("dataset has no annotations")
    if not dataset.streams:
        raise ValidationError("dataset has no modality data")
    speech_by_index = {r.window_index: r for r in dataset.speech_rows}
    visual_by_window: dict[Modality, dict[int, tuple]] = {}
    for modality, stream in dataset.streams.items():
        config = dataset.configs[modality]
        per = {}
        for fv in features_mod.extract_features(stream, config):
            per[fv.window.start_frame] = (fv, features_mod.aggregate_window(fv))
        visual_by_window[modality] = per

    windows = []
    for w, ann in enumerate(sorted(dataset.annotations, key=lambda a: a.start_frame)):
        visual = {}
        for modality, per in visual_by_window.items():
            if ann.start_frame in per:
                visual[modality] = per[ann.start_frame]
        windows.append(
            _WindowData(
                label=ann.intensity,
                class_label=ANGER if ann.intensity >= ANGER_THRESHOLD else NOT_ANGER,
                visual=visual,
                speech=speech_by_index.get(w),
            )
        )
    return windows


def run_experiment(dataset: Dataset, config: ExperimentConfig = ExperimentConfig()) -> ExperimentReport:
    """K-fold train/evaluate over annotated windows; reports per-modality
    and multimodal recognition and intensity rows, pooled across folds.
    Fully reproducible from (dataset, config)."""
    windows = _collect_windows(dataset)
    class_labels = [w.class_label for w in windows]
    plan = kfold(len(windows), k=config.k, seed=config.seed, labels=class_labels)

    modalities = sorted(
        {m for w in windows for m in w.visual}, key=lambda m: m.value
    )
    has_speech = any(w.speech is not None for w in windows)
    channels = [m.value for m in modalities] + (["speech"] if has_speech else [])

    pooled_preds: dict[str, list[str]] = {c: [] for c in channels + ["multimodal"]}
    pooled_pred_labels: list[str] = []
    pooled_est: dict[str, list[float]] = {c: [] for c in channels + ["multimodal"]}
    pooled_est_labels: list[float] = []
    per_fold_intensity: dict[str, list[float]] = {c: [] for c in channels + ["multimodal"]}

    for fold_index in range(plan.k):
        train_idx, test_idx = plan.split(fold_index)
        train_windows = [windows[i] for i in train_idx]
        test_windows = [windows[i] for i in test_idx]

        classifiers: dict[str, LinearClassifier] = {}
        visual_models: dict[Modality, intensity.VisualIntensityModel] = {}
        speech_model: intensity.SpeechIntensityModel | None = None

        for modality in modalities:
            examples = [
                TrainingExample(tuple(w.visual[modality][0].flatten()), w.class_label)
                for w in train_windows
                if modality in w.visual
            ]
            clf = classify.train(examples, modality, config.train)
            margins = [classify.margin_of(clf, e.features) for e in examples]
            clf = classify.calibrate(clf, margins, [e.label for e in examples])
            classifiers[modality.value] = clf
            fit_rows = []
            fit_labels = []
            for w in train_windows:
                if modality not in w.visual:
                    continue
                fv, agg = w.visual[modality]
                conf = classify.predict(clf, fv.flatten()).confidence
                fit_rows.append((conf, agg.mean_displacement, agg.mean_speed))
                fit_labels.append(w.label)
            visual_models[modality], _ = intensity.fit_visual(
                modality, fit_rows, fit_labels, lam=config.ridge
            )

        if has_speech:
            examples = [
                TrainingExample(w.speech.features, w.class_label)
                for w in train_windows
                if w.speech is not None
            ]
            clf = classify.train(examples, Modality.SPEECH, config.train)
            margins = [classify.margin_of(clf, e.features) for e in examples]
            clf = classify.calibrate(clf, margins, [e.label for e in examples])
            classifiers["speech"] = clf
            rows = [w.speech for w in train_windows if w.speech is not None]
            labels = [w.label for w in train_windows if w.speech is not None]
            speech_model, _ = intensity.fit_speech(rows, labels, lam=config.ridge)

        fold_est: dict[str, list[float]] = {c: [] for c in channels + ["multimodal"]}
        fold_est_labels: list[float] = []
        for w in test_windows:
            per_window_preds: list[classify.Prediction] = []
            per_window_est: dict[str, float] = {}
            for modality in modalities:
                if modality not in w.visual:
                    continue
                fv, agg = w.visual[modality]
                pred = classify.predict(classifiers[modality.value], fv.flatten())
                per_window_preds.append(pred)
                pooled_preds[modality.value].append(pred.label)
                est = intensity.estimate_visual(
                    visual_models[modality], pred.confidence, agg, timestamp_s=0.0
                )
                per_window_est[modality.value] = est.value
            if w.speech is not None and speech_model is not None:
                pred = classify.predict(classifiers["speech"], w.speech.features)
                per_window_preds.append(pred)
                pooled_preds["speech"].append(pred.label)
                per_window_est["speech"] = intensity.estimate_speech(
                    speech_model, w.speech
                ).value
            if per_window_preds:
                fused = classify.fuse_majority(per_window_preds)
                pooled_preds["multimodal"].append(fused.label)
            if per_window_est:
                per_window_est["multimodal"] = sum(per_window_est.values()) / len(
                    per_window_est
                )
            pooled_pred_labels.append(w.class_label)
            pooled_est_labels.append(w.label)
            fold_est_labels.append(w.label)
            for c, v in per_window_est.items():
                pooled_est[c].append(v)
                fold_est[c].append(v)
        for c in fold_est:
            if fold_est[c]:
                per_fold_intensity[c].append(
                    intensity_accuracy(
                        fold_est[c], fold_est_labels, config.margin, c
                    ).accuracy
                )

    recognition = [
        classification_metrics(pooled_preds[c], pooled_pred_labels, c)
        for c in channels + ["multimodal"]
        if pooled_preds[c]
    ]
    intensity_rows = [
        intensity_accuracy(pooled_est[c], pooled_est_labels, config.margin, c)
        for c in channels + ["multimodal"]
        if pooled_est[c]
    ]
    return ExperimentReport(
        config=config,
        recognition=recognition,
        intensity=intensity_rows,
        per_fold_intensity=per_fold_intensity,
    )


# ---------------------------------------------------------------------------
# Rendering

def render_report(report: ExperimentReport) -> str:
    """Plain-text aligned tables mirroring the two-table layout."""
    out = io.StringIO()
    out.write("Anger recognition results (accuracy reported; no 'Rate' analogue)\n")
    out.write(f"{'Modality':<12}{'Accuracy':>10}{'Precision':>11}{'Recall':>9}\n")
    for r in report.recognition:
        prec = f"{r.precision:.2f}" if r.precision_defined else "n/a"
        rec = f"{r.recall:.2f}" if r.recall_defined else "n/a"
        out.write(f"{r.modality:<12}{r.accuracy:>10.2f}{prec:>11}{rec:>9}\n")
    out.write("\n")
    out.write(
        f"Anger intensity estimation results (margin +/-{report.config.margin})\n"
    )
    out.write(f"{'Modality':<12}{'Accuracy':>10}{'MAE':>9}{'Windows':>9}\n")
    for r in report.intensity:
        out.write(f"{r.modality:<12}{r.accuracy:>10.2f}{r.mae:>9.3f}{r.n:>9}\n")
    return out.getvalue()


def report_to_csv(report: ExperimentReport) -> str:
    lines = ["table,modality,accuracy,precision,recall,mae,n,margin"]
    for r in report.recognition:
        lines.append(
            f"recognition,{r.modality},{r.accuracy!r},{r.precision!r},{r.recall!r},,"
            f"{r.tp + r.fp + r.tn + r.fn},"
        )
    for r in report.intensity:
        lines.append(
            f"intensity,{r.modality},{r.accuracy!r},,,{r.mae!r},{r.n},{r.margin!r}"
        )
    return "\n".join(lines) + "\n"
