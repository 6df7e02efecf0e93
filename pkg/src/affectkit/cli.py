"""Command-line workflow: simulate, extract, train, fit, estimate,
evaluate, serve.

Exit codes: 0 success, 1 validation/domain error, 2 usage error.
All commands are deterministic under a fixed --seed.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import classify, evaluate as evaluate_mod, features as features_mod, intensity
from .datamodel import (
    DEFAULT_WINDOW_FRAMES,
    Modality,
    ValidationError,
    default_config,
    parse_frames,
    write_annotations,
)
from .service import DEFAULT_PORT, create_app
from .store import RecordingStore, StoreError
from .synth import SyntheticSpec, default_curve, generate_synthetic_recording


class DomainError(click.ClickException):
    exit_code = 1


def _domain(f):
    """Map validation/store/io failures onto exit code 1."""
    import functools

    @functools.wraps(f)
    def wrapper(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except (ValidationError, StoreError, OSError) as exc:
            raise DomainError(str(exc))

    return wrapper


@click.group()
def main():
    """Multimodal affect intensity toolkit."""


def _load_dataset(
    store: RecordingStore, recording_id: str | None, window_frames: int
) -> tuple[str, evaluate_mod.Dataset]:
    metas = store.list_recordings()
    if not metas:
        raise ValidationError("no recordings in data directory")
    if recording_id is None:
        recording_id = metas[0].recording_id
    meta = store.get_meta(recording_id)
    visual = [m for m in store.available_streams(recording_id) if m.is_visual]
    configs = {
        m: default_config(m, window_frames=window_frames, fps=meta.fps) for m in visual
    }
    streams = {m: store.load_stream(recording_id, m, configs[m]) for m in visual}
    annotations = [
        a
        for a in store.load_annotations(window_frames)
        if a.recording_id == recording_id
    ]
    return recording_id, evaluate_mod.Dataset(
        streams=streams,
        speech_rows=store.load_speech(recording_id),
        annotations=annotations,
        configs=configs,
    )


@main.command()
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--windows", default=50, show_default=True)
@click.option("--noise", default=0.0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--curve", default=None, help="Comma-separated intensities in [0,1], cycled over windows.")
@click.option("--recording-id", default=None)
@click.option("--window-frames", default=DEFAULT_WINDOW_FRAMES, show_default=True)
@_domain
def simulate(out, windows, noise, seed, curve, recording_id, window_frames):
    """Generate a synthetic dataset into a data directory."""
    if curve is not None:
        try:
            values = [float(v) for v in curve.split(",") if v.strip()]
        except ValueError as exc:
            raise ValidationError(f"bad curve value: {exc}")
        if not values:
            raise ValidationError("empty curve")
        curve_values = tuple(values[i % len(values)] for i in range(windows))
    else:
        curve_values = default_curve(windows, seed)
    spec = SyntheticSpec(
        curve=curve_values,
        noise=noise,
        seed=seed,
        recording_id=recording_id or f"synthetic-{seed}",
        window_frames=window_frames,
    )
    rec = generate_synthetic_recording(spec)
    store = RecordingStore(out)
    store.save_recording(rec.meta, rec.streams, rec.speech_rows)
    from .store import _atomic_write

    _atomic_write(
        store.annotations_path, lambda f: write_annotations(rec.annotations, f)
    )
    click.echo(
        f"wrote {windows} windows ({windows * window_frames} frames per visual "
        f"modality) to {out}"
    )


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--modality", required=True, type=click.Choice([m.value for m in Modality if m.is_visual]))
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--window-frames", default=DEFAULT_WINDOW_FRAMES, show_default=True)
@_domain
def extract(in_path, modality, out, window_frames):
    """Extract window feature vectors from a frame CSV."""
    config = default_config(Modality(modality), window_frames=window_frames)
    with in_path.open(encoding="utf-8", newline="") as f:
        stream = parse_frames(f, config)
    vectors = features_mod.extract_features(stream, config)
    with out.open("w", encoding="utf-8", newline="") as f:
        features_mod.write_feature_csv(vectors, config, f)
    click.echo(f"wrote {len(vectors)} feature rows to {out}")


@main.command()
@click.option("--data-dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--recording", default=None)
@click.option("--lam", default=1e-4, show_default=True)
@click.option("--epochs", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--window-frames", default=DEFAULT_WINDOW_FRAMES, show_default=True)
@_domain
def train(data_dir, recording, lam, epochs, seed, window_frames):
    """Train per-modality anger classifiers from annotated windows."""
    store = RecordingStore(data_dir)
    rid, dataset = _load_dataset(store, recording, window_frames)
    windows = evaluate_mod._collect_windows(dataset)
    config = classify.TrainConfig(lam=lam, epochs=epochs, seed=seed)
    trained = 0
    for modality in dataset.streams:
        examples = [
            classify.TrainingExample(tuple(w.visual[modality][0].flatten()), w.class_label)
            for w in windows
            if modality in w.visual
        ]
        clf = classify.train(examples, modality, config)
        margins = [classify.margin_of(clf, e.features) for e in examples]
        clf = classify.calibrate(clf, margins, [e.label for e in examples])
        store.save_classifier(clf)
        trained += 1
    if dataset.speech_rows:
        examples = [
            classify.TrainingExample(w.speech.features, w.class_label)
            for w in windows
            if w.speech is not None
        ]
        clf = classify.train(examples, Modality.SPEECH, config)
        margins = [classify.margin_of(clf, e.features) for e in examples]
        clf = classify.calibrate(clf, margins, [e.label for e in examples])
        store.save_classifier(clf)
        trained += 1
    click.echo(f"trained {trained} classifiers for recording {rid}")


@main.command()
@click.option("--data-dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--recording", default=None)
@click.option("--ridge", default=0.0, show_default=True)
@click.option("--window-frames", default=DEFAULT_WINDOW_FRAMES, show_default=True)
@_domain
def fit(data_dir, recording, ridge, window_frames):
    """Fit per-modality intensity models by least squares."""
    store = RecordingStore(data_dir)
    rid, dataset = _load_dataset(store, recording, window_frames)
    windows = evaluate_mod._collect_windows(dataset)
    fitted = 0
    for modality in dataset.streams:
        clf = store.load_classifier(modality)
        rows, labels = [], []
        for w in windows:
            if modality not in w.visual:
                continue
            fv, agg = w.visual[modality]
            conf = classify.predict(clf, fv.flatten()).confidence
            rows.append((conf, agg.mean_displacement, agg.mean_speed))
            labels.append(w.label)
        model, report = intensity.fit_visual(modality, rows, labels, lam=ridge)
        store.save_intensity_model(model, report)
        fitted += 1
    if dataset.speech_rows:
        rows = [w.speech for w in windows if w.speech is not None]
        labels = [w.label for w in windows if w.speech is not None]
        model, report = intensity.fit_speech(rows, labels, lam=ridge)
        store.save_intensity_model(model, report)
        fitted += 1
    click.echo(f"fitted {fitted} intensity models for recording {rid}")


@main.command()
@click.option("--data-dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--recording", default=None)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@click.option("--fusion-window", default=1.0, show_default=True, help="Fusion window T in seconds.")
@click.option("--window-frames", default=DEFAULT_WINDOW_FRAMES, show_default=True)
@_domain
def estimate(data_dir, recording, out, fusion_window, window_frames):
    """Run the full pipeline and dump the intensity estimate CSV."""
    store = RecordingStore(data_dir)
    rid, dataset = _load_dataset(store, recording, window_frames)
    classifiers = {m: store.load_classifier(m) for m in dataset.streams}
    visual_models = {m: store.load_intensity_model(m) for m in dataset.streams}
    speech_model = (
        store.load_intensity_model(Modality.SPEECH) if dataset.speech_rows else None
    )
    result = intensity.run_pipeline(
        dataset.streams,
        dataset.speech_rows,
        dataset.configs,
        classifiers,
        visual_models,
        speech_model,
        fusion_window_s=fusion_window,
    )
    estimates = result.all_estimates()
    estimates.sort(key=lambda e: (e.timestamp_s, e.modality))
    with out.open("w", encoding="utf-8", newline="") as f:
        intensity.write_estimate_csv(estimates, f)
    click.echo(f"wrote {len(estimates)} estimates for recording {rid} to {out}")


@main.command()
@click.option("--data-dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--recording", default=None)
@click.option("--out", default=None, type=click.Path(path_type=Path))
@click.option("--k", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--margin", default=0.1, show_default=True)
@click.option("--ridge", default=0.0, show_default=True)
@click.option("--window-frames", default=DEFAULT_WINDOW_FRAMES, show_default=True)
@_domain
def evaluate(data_dir, recording, out, k, seed, margin, ridge, window_frames):
    """K-fold cross-validated experiment; prints the two result tables."""
    store = RecordingStore(data_dir)
    rid, dataset = _load_dataset(store, recording, window_frames)
    config = evaluate_mod.ExperimentConfig(
        k=k,
        seed=seed,
        margin=margin,
        ridge=ridge,
        train=classify.TrainConfig(seed=seed),
    )
    report = evaluate_mod.run_experiment(dataset, config)
    text = evaluate_mod.render_report(report)
    click.echo(text, nl=False)
    try:
        fused = report.intensity_accuracy_of("multimodal")
        click.echo(f"fused intensity accuracy: {fused:.4f}")
    except KeyError:
        pass
    if out is not None:
        out.write_text(text, encoding="utf-8")
        out.with_suffix(".csv").write_text(
            evaluate_mod.report_to_csv(report), encoding="utf-8"
        )
        click.echo(f"report written to {out} (CSV alongside)")


@main.command()
@click.option("--port", default=DEFAULT_PORT, show_default=True)
@click.option("--data-dir", required=True, type=click.Path(exists=True, path_type=Path))
@click.option("--ui-dir", default=None, type=click.Path(path_type=Path))
@click.option("--window-frames", default=DEFAULT_WINDOW_FRAMES, show_default=True)
@_domain
def serve(port, data_dir, ui_dir, window_frames):
    """Serve the annotation/estimation HTTP API until interrupted."""
    import uvicorn

    app = create_app(data_dir, window_frames=window_frames, ui_dir=ui_dir)
    try:
        uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    sys.exit(main())
