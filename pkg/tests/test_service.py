"""HTTP API: recordings, frames, annotations, estimates."""
import pytest
from fastapi.testclient import TestClient
from affectkit import classify, evaluate as ev, intensity
from affectkit.service import create_app
from affectkit.store import RecordingStore, _atomic_write
from affectkit.datamodel import write_annotations
from affectkit.synth import SyntheticSpec, default_curve, generate_synthetic_recording
@pytest.fixture(scope="module")
def populated_dir(tmp_path_factory):
    data_dir = tmp_path_factory.mktemp("data")
    rec = generate_synthetic_recording(
        SyntheticSpec(curve=default_curve(45, 7), noise=0.01, seed=7, recording_id="rec-a")
    )
    store = RecordingStore(data_dir)
    store.save_recording(rec.meta, rec.streams, rec.speech_rows)
    _atomic_write(store.annotations_path, lambda f: write_annotations(rec.annotations, f))
    return data_dir, rec
@pytest.fixture()
def client(populated_dir):
    data_dir, _ = populated_dir
    return TestClient(create_app(data_dir))
def fit_and_store_models(data_dir, rec):
    store = RecordingStore(data_dir)
    ds = ev.Dataset.from_synthetic(rec)
    windows = ev._collect_windows(ds)
    for modality in rec.streams:
        examples = [
            classify.TrainingExample(tuple(w.visual[modality][0].flatten()), w.class_label)
            for w in windows
        ]
        clf = classify.train(examples, modality)
        store.save_classifier(clf)
        rows = []
        labels = []
        for w in windows:
            fv, agg = w.visual[modality]
            conf = classify.predict(clf, fv.flatten()).confidence
            rows.append((conf, agg.mean_displacement, agg.mean_speed))
            labels.append(w.label)
        model, rep = intensity.fit_visual(modality, rows, labels)
        store.save_intensity_model(model, rep)
    model, rep = intensity.fit_speech(
        [w.speech for w in windows], [w.label for w in windows]
    )
    store.save_intensity_model(model, rep)
class TestRecordings:
    def test_list(self, client):
        resp = client.get("/api/recordings")
        assert resp.status_code == 200
        body = resp.json()
        assert len(body) == 1
        assert body[0]["recording_id"] == "rec-a"
        assert "face" in body[0]["modalities"]
    def test_empty_store(self, tmp_path):
        (tmp_path / "empty").mkdir()
        c = TestClient(create_app(tmp_path / "empty"))
        resp = c.get("/api/recordings")
        assert resp.status_code == 200
        assert resp.json() == []
    def test_missing_store_path(self, tmp_path):
        c = TestClient(create_app(tmp_path / "missing"), raise_server_exceptions=False)
        resp = c.get("/api/recordings")
        assert resp.status_code == 500
        assert "does not exist" in resp.json()["detail"]
class TestFrames:
    def test_range(self, client):
        resp = client.get(
            "/api/recordings/rec-a/frames",
            params={"modality": "face", "from": 0, "to": 9},
        )
        assert resp.status_code == 200
        frames = resp.json()
        assert len(frames) == 10
        assert frames[0]["frame_index"] == 0
        assert len(frames[0]["points"]) == 60
    def test_clipped_range(self, client):
        resp = client.get(
            "/api/recordings/rec-a/frames",
            params={"modality": "hand", "from": 440, "to": 2000},
        )
        assert resp.status_code == 200
        assert [f["frame_index"] for f in resp.json()] == list(range(440, 450))
    def test_unknown_recording(self, client):
        resp = client.get(
            "/api/recordings/nope/frames", params={"modality": "face"}
        )
        assert resp.status_code == 404
    def test_bad_range(self, client):
        resp = client.get(
            "/api/recordings/rec-a/frames",
            params={"modality": "face", "from": 10, "to": 5},
        )
        assert resp.status_code == 400
    def test_csv_format(self, client):
        resp = client.get(
            "/api/recordings/rec-a/frames",
            params={"modality": "body", "from": 0, "to": 1, "format": "csv"},
        )
        assert resp.status_code == 200
        assert resp.text.startswith("recording_id,modality,frame_index")
def annotation_body(**overrides):
    body = {
        "recording_id": "rec-a",
        "start_frame": 0,
        "end_frame": 9,
        "intensity": 0.4,
        "annotator_id": "human-1",
        "created_at": "2026-08-23T10:00:00Z",
    }
    body.update(overrides)
    return body
class TestAnnotations:
    def test_submit_fetch_round_trip(self, client):
        body = annotation_body(start_frame=30, end_frame=39, intensity=0.45)
        resp = client.post("/api/annotations", json=body)
        assert resp.status_code == 200
        assert resp.json() == body
        fetched = client.get("/api/annotations", params={"recording_id": "rec-a"}).json()
        assert body in fetched
    def test_invalid_intensity_field_error(self, client):
        resp = client.post("/api/annotations", json=annotation_body(intensity=1.2))
        assert resp.status_code == 400
        detail = resp.json()["detail"]
        assert detail[0]["field"] == "intensity"
    def test_wrong_window_length(self, client):
        resp = client.post("/api/annotations", json=annotation_body(end_frame=8))
        assert resp.status_code == 400
    def test_unknown_recording(self, client):
        resp = client.post(
            "/api/annotations", json=annotation_body(recording_id="nope")
        )
        assert resp.status_code == 404
    def test_last_write_wins(self, client):
        key = dict(start_frame=100, end_frame=109, annotator_id="dup")
        client.post("/api/annotations", json=annotation_body(intensity=0.3, **key))
        client.post("/api/annotations", json=annotation_body(intensity=0.6, **key))
        fetched = client.get("/api/annotations", params={"recording_id": "rec-a"}).json()
        matches = [
            a
            for a in fetched
            if a["start_frame"] == 100 and a["annotator_id"] == "dup"
        ]
        assert len(matches) == 1
        assert matches[0]["intensity"] == 0.6
class TestEstimates:
    def test_conflict_without_models(self, client):
        resp = client.get("/api/recordings/rec-a/estimates")
        assert resp.status_code == 409
    def test_estimates_with_models(self, populated_dir):
        data_dir, rec = populated_dir
        fit_and_store_models(data_dir, rec)
        c = TestClient(create_app(data_dir))
        resp = c.get("/api/recordings/rec-a/estimates")
        assert resp.status_code == 200
        series = resp.json()
        assert series
        assert all(0.0 <= e["value"] <= 1.0 for e in series)
        assert any(e["modality"] == "fused" for e in series)
        csv_resp = c.get(
            "/api/recordings/rec-a/estimates", params={"format": "csv"}
        )
        assert csv_resp.text.startswith("recording_id,timestamp_s,modality,raw,value")
    def test_unknown_recording(self, client):
        assert client.get("/api/recordings/nope/estimates").status_code == 404
