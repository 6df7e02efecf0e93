"""Per-modality binary anger classification with calibrated confidence,
plus decision-level majority-vote fusion.

The classifier is a linear SVM trained by seeded, epoch-shuffled
subgradient descent on the L2-regularized hinge loss (Pegasos-style
step sizes, averaged iterate). Confidence is the logistic of the
margin, optionally Platt-calibrated on held-out margins.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import IO, Sequence

import numpy as np

from .datamodel import Modality, ValidationError

ANGER = "anger"
NOT_ANGER = "not_anger"
LABELS = (ANGER, NOT_ANGER)

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainingExample:
    features: tuple[float, ...]
    label: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValidationError(f"unknown label {self.label!r}")


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 1e-4   # L2 regularization strength
    epochs: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValidationError("lam must be positive")
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")


@dataclass(frozen=True)
class LinearClassifier:
    modality: Modality
    weights: tuple[float, ...]
    bias: float
    feature_means: tuple[float, ...]
    feature_stds: tuple[float, ...]   # > 0; zero-variance features get 1.0
    calibration: tuple[float, float] = (1.0, 0.0)  # (A, B) of sigma(A*m + B)
    calibrated: bool = False
    train_config: TrainConfig = TrainConfig()

    def __post_init__(self):
        n = len(self.weights)
        if len(self.feature_means) != n or len(self.feature_stds) != n:
            raise ValidationError("standardizer length mismatch")
        if any(s <= 0 for s in self.feature_stds):
            raise ValidationError("feature stds must be positive")


@dataclass(frozen=True)
class Prediction:
    label: str
    margin: float
    confidence: float

    def __post_init__(self):
        if not (0.0 <= self.confidence <= 1.0):
            raise ValidationError("confidence outside [0, 1]")


@dataclass(frozen=True)
class FusedPrediction:
    label: str
    vote_fraction: float
    predictions: tuple[Prediction, ...]


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def train(
    examples: Sequence[TrainingExample],
    modality: Modality,
    config: TrainConfig = TrainConfig(),
) -> LinearClassifier:
    """Train a linear SVM; deterministic for a fixed config seed.

    Raises on an empty or single-class training set. Zero-variance
    features are standardized with std 1 and keep weight 0.
    """
    if len(examples) < 2:
        raise ValidationError("need at least 2 training examples")
    labels = {e.label for e in examples}
    if len(labels) < 2:
        raise ValidationError("training set contains a single class")
    widths = {len(e.features) for e in examples}
    if len(widths) != 1:
        raise ValidationError("inconsistent feature lengths in training set")

    x = np.array([e.features for e in examples], dtype=float)
    y = np.array([1.0 if e.label == ANGER else -1.0 for e in examples])
    means = x.mean(axis=0)
    stds = x.std(axis=0)
    constant = stds == 0.0
    stds = np.where(constant, 1.0, stds)
    xs = (x - means) / stds

    rng = np.random.default_rng(config.seed)
    n, d = xs.shape
    w = np.zeros(d)
    b = 0.0
    w_sum = np.zeros(d)
    b_sum = 0.0
    t = 0
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for i in order:
            t += 1
            # +1 denominator bounds the first steps; same 1/(lam*t) decay
            eta = 1.0 / (config.lam * t + 1.0)
            margin = y[i] * (xs[i] @ w + b)
            w *= 1.0 - eta * config.lam
            if margin < 1.0:
                w += eta * y[i] * xs[i]
                b += eta * y[i]
        w_sum += w
        b_sum += b
    w_avg = w_sum / config.epochs
    b_avg = b_sum / config.epochs
    w_avg[constant] = 0.0

    return LinearClassifier(
        modality=modality,
        weights=tuple(float(v) for v in w_avg),
        bias=float(b_avg),
        feature_means=tuple(float(v) for v in means),
        feature_stds=tuple(float(v) for v in stds),
        train_config=config,
    )


def hinge_objective(
    clf: LinearClassifier, examples: Sequence[TrainingExample]
) -> float:
    """Mean hinge loss plus the L2 term, on standardized features."""
    w = np.array(clf.weights)
    losses = []
    for e in examples:
        m = margin_of(clf, e.features)
        yi = 1.0 if e.label == ANGER else -1.0
        losses.append(max(0.0, 1.0 - yi * m))
    reg = 0.5 * clf.train_config.lam * float(w @ w)
    return float(np.mean(losses)) + reg


def margin_of(clf: LinearClassifier, features: Sequence[float]) -> float:
    if len(features) != len(clf.weights):
        raise ValidationError(
            f"feature length {len(features)} does not match model "
            f"({len(clf.weights)})"
        )
    x = np.asarray(features, dtype=float)
    xs = (x - np.array(clf.feature_means)) / np.array(clf.feature_stds)
    return float(xs @ np.array(clf.weights) + clf.bias)


def predict(clf: LinearClassifier, features: Sequence[float]) -> Prediction:
    """Label is anger iff the margin is strictly positive (tie -> not_anger);
    confidence = sigma(A*margin + B)."""
    m = margin_of(clf, features)
    a, b = clf.calibration
    return Prediction(
        label=ANGER if m > 0 else NOT_ANGER,
        margin=m,
        confidence=_sigmoid(a * m + b),
    )


def calibrate(
    clf: LinearClassifier,
    margins: Sequence[float],
    labels: Sequence[str],
    iterations: int = 50,
) -> LinearClassifier:
    """Fit (A, B) minimizing the logistic negative log-likelihood of the
    held-out labels given margins, by fixed-iteration damped Newton.

    A single-class held-out set keeps the default (1, 0) and leaves the
    model flagged uncalibrated.
    """
    if len(margins) != len(labels):
        raise ValidationError("margins and labels must align")
    if len(set(labels)) < 2:
        return replace(clf, calibration=(1.0, 0.0), calibrated=False)
    m = np.asarray(margins, dtype=float)
    y = np.array([1.0 if l == ANGER else 0.0 for l in labels])

    def nll(a: float, b: float) -> float:
        z = a * m + b
        # log(1 + e^z) - y z, numerically stable
        return float(np.sum(np.logaddexp(0.0, z) - y * z))

    a, b = 0.0, 0.0
    current = nll(a, b)
    for _ in range(iterations):
        z = a * m + b
        p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
        g = np.array([float((p - y) @ m), float(np.sum(p - y))])
        w = p * (1.0 - p)
        h = np.array(
            [
                [float((w * m) @ m), float(w @ m)],
                [float(w @ m), float(np.sum(w))],
            ]
        ) + 1e-10 * np.eye(2)
        step = np.linalg.solve(h, g)
        scale = 1.0
        for _ in range(30):
            cand = nll(a - scale * step[0], b - scale * step[1])
            if cand <= current:
                break
            scale *= 0.5
        else:
            break
        a -= scale * step[0]
        b -= scale * step[1]
        current = cand
    return replace(clf, calibration=(float(a), float(b)), calibrated=True)


def fuse_majority(predictions: Sequence[Prediction]) -> FusedPrediction:
    """Majority vote over per-modality predictions; ties go to not_anger."""
    if not predictions:
        raise ValidationError("need at least one prediction to fuse")
    anger_votes = sum(1 for p in predictions if p.label == ANGER)
    total = len(predictions)
    label = ANGER if anger_votes * 2 > total else NOT_ANGER
    votes_for = anger_votes if label == ANGER else total - anger_votes
    return FusedPrediction(
        label=label,
        vote_fraction=votes_for / total,
        predictions=tuple(predictions),
    )


# ---------------------------------------------------------------------------
# Model file (JSON)

def classifier_to_dict(clf: LinearClassifier) -> dict:
    return {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "classifier",
        "modality": clf.modality.value,
        "weights": list(clf.weights),
        "bias": clf.bias,
        "feature_means": list(clf.feature_means),
        "feature_stds": list(clf.feature_stds),
        "calibration": list(clf.calibration),
        "calibrated": clf.calibrated,
        "train_config": {
            "lam": clf.train_config.lam,
            "epochs": clf.train_config.epochs,
            "seed": clf.train_config.seed,
        },
    }


def classifier_from_dict(obj: dict) -> LinearClassifier:
    if obj.get("kind") != "classifier":
        raise ValidationError("not a classifier model file")
    tc = obj.get("train_config", {})
    return LinearClassifier(
        modality=Modality(obj["modality"]),
        weights=tuple(obj["weights"]),
        bias=float(obj["bias"]),
        feature_means=tuple(obj["feature_means"]),
        feature_stds=tuple(obj["feature_stds"]),
        calibration=(float(obj["calibration"][0]), float(obj["calibration"][1])),
        calibrated=bool(obj.get("calibrated", False)),
        train_config=TrainConfig(
            lam=float(tc.get("lam", 1e-4)),
            epochs=int(tc.get("epochs", 50)),
            seed=int(tc.get("seed", 0)),
        ),
    )


def save_classifier(clf: LinearClassifier, writer: IO[str]) -> None:
    json.dump(classifier_to_dict(clf), writer)


def load_classifier(reader: IO[str]) -> LinearClassifier:
    return classifier_from_dict(json.load(reader))
