"""Kinematics, pair angles, window assembly, and geometric invariants."""

import math

import numpy as np
import pytest

from affectkit.datamodel import Frame, Modality, ModalityConfig, ValidationError
from affectkit.features import (
    aggregate_window,
    assemble_feature_vector,
    compute_pair_angle,
    compute_point_kinematics,
    window_iterator,
)
from affectkit.datamodel import FrameStream


def toy_config(points=3, window=3, pairs=((0, 1), (1, 2))):
    return ModalityConfig(
        Modality.HAND, point_count=points, angle_pairs=pairs, window_frames=window
    )


def make_window(positions_per_frame, config, fps=30.0, start=0):
    """positions_per_frame: list of per-frame point lists."""
    return [
        Frame("r1", config.modality, start + i, (start + i) / fps, tuple(pts))
        for i, pts in enumerate(positions_per_frame)
    ]


class TestPointKinematics:
    def test_3_4_5_triangle(self):
        d, s, o = compute_point_kinematics([(0.0, 0.0), (3.0, 4.0)], 1.0)
        assert d == pytest.approx(5.0)
        assert s == pytest.approx(5.0)
        assert o == pytest.approx(math.atan2(4, 3))

    def test_stationary_point(self):
        track = [(2.0, 2.0)] * 5
        d, s, o = compute_point_kinematics(track, 1.0)
        assert (d, s, o) == (0.0, 0.0, 0.0)

    def test_closed_polygon_circle(self):
        # 64-gon traversal in 1 s: net displacement ~0, path speed equals
        # the inscribed polygon perimeter 64 * 2 * sin(pi/64)
        n = 64
        track = [
            (math.cos(2 * math.pi * k / n), math.sin(2 * math.pi * k / n))
            for k in range(n + 1)
        ]
        d, s, _ = compute_point_kinematics(track, 1.0)
        perimeter = n * 2 * math.sin(math.pi / n)
        assert d <= 1e-9
        assert abs(s - perimeter) <= 1e-9

    def test_too_few_positions(self):
        with pytest.raises(ValidationError):
            compute_point_kinematics([(0.0, 0.0)], 1.0)

    def test_non_positive_duration(self):
        with pytest.raises(ValidationError):
            compute_point_kinematics([(0.0, 0.0), (1.0, 0.0)], 0.0)

    def test_path_at_least_net(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            track = [tuple(p) for p in rng.normal(size=(5, 2))]
            d, s, _ = compute_point_kinematics(track, 2.0)
            assert s * 2.0 >= d - 1e-12


class TestPairAngle:
    def test_horizontal(self):
        assert compute_pair_angle((0, 0), (1, 0)) == 0.0

    def test_vertical(self):
        assert compute_pair_angle((0, 0), (0, 1)) == pytest.approx(math.pi / 2)

    def test_diagonal_undirected(self):
        assert compute_pair_angle((0, 0), (1, 1)) == pytest.approx(math.pi / 4)
        assert compute_pair_angle((1, 1), (0, 0)) == pytest.approx(math.pi / 4)

    def test_coincident_points(self):
        assert compute_pair_angle((2, 3), (2, 3)) == 0.0

    def test_range(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            p, q = rng.normal(size=(2, 2))
            a = compute_pair_angle(tuple(p), tuple(q))
            assert -math.pi / 2 < a <= math.pi / 2


class TestAssembleFeatureVector:
    def test_stationary_window(self):
        config = toy_config()
        pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]
        frames = make_window([pts] * 3, config)
        fv = assemble_feature_vector(frames, config)
        assert fv.displacements == (0.0, 0.0, 0.0)
        assert fv.speeds == (0.0, 0.0, 0.0)
        assert fv.angles[0] == 0.0
        assert fv.angles[1] == pytest.approx(math.pi / 2)

    def test_rigid_translation(self):
        config = toy_config()
        base = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)]
        frames = make_window(
            [[(x + i, y) for x, y in base] for i in range(3)], config
        )
        fv = assemble_feature_vector(frames, config)
        assert len(set(fv.displacements)) == 1
        assert all(o == 0.0 for o in fv.orientations)
        ref = assemble_feature_vector(make_window([base] * 3, config), config)
        assert fv.angles == ref.angles

    def test_wrong_frame_count(self):
        config = toy_config()
        pts = [(0.0, 0.0)] * 3
        with pytest.raises(ValidationError, match="expected 3 frames"):
            assemble_feature_vector(make_window([pts] * 2, config), config)

    def test_index_gap(self):
        config = toy_config()
        pts = [(0.0, 0.0)] * 3
        frames = make_window([pts] * 3, config)
        frames[2] = Frame("r1", config.modality, 5, 5 / 30.0, tuple(pts))
        with pytest.raises(ValidationError, match="gap"):
            assemble_feature_vector(frames, config)

    def test_flatten_order(self):
        config = toy_config()
        pts = [(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)]
        fv = assemble_feature_vector(make_window([pts] * 3, config), config)
        flat = fv.flatten()
        # coords (6), angles (2), displacements (3), speed/orientation pairs (6)
        assert flat[:6] == [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]
        assert len(flat) == 6 + 2 + 3 + 6


class TestAggregateWindow:
    def test_arithmetic_mean(self):
        config = toy_config()
        base = [(0.0, 0.0), (10.0, 0.0), (20.0, 0.0)]
        # per-frame steps 1, 2, 3 -> displacements over 2 steps: 2, 4, 6
        frames = make_window(
            [[(x + i * (k + 1), y) for k, (x, y) in enumerate(base)] for i in range(3)],
            config,
        )
        agg = aggregate_window(assemble_feature_vector(frames, config))
        assert agg.mean_displacement == pytest.approx(4.0)
        assert agg.m == 3

    def test_all_zero_speed(self):
        config = toy_config()
        fv = assemble_feature_vector(
            make_window([[(0.0, 0.0)] * 3] * 3, config), config
        )
        assert aggregate_window(fv).mean_speed == 0.0

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(7)
        config = ModalityConfig(Modality.BODY, 12, window_frames=4)
        positions = rng.normal(size=(4, 12, 2)) * 10
        frames = make_window([[tuple(p) for p in f] for f in positions], config)
        fv = assemble_feature_vector(frames, config)
        agg = aggregate_window(fv)

        def naive_mean(values):
            total = 0.0
            for v in values:
                total += v
            return total / len(values)

        assert agg.mean_displacement == pytest.approx(
            naive_mean(fv.displacements), rel=1e-15
        )
        assert agg.mean_speed == pytest.approx(naive_mean(fv.speeds), rel=1e-15)


class TestWindowIterator:
    def make_stream(self, n, config):
        frames = tuple(
            Frame("r1", config.modality, i, i / 30.0,
                  tuple((float(i), 0.0) for _ in range(config.point_count)))
            for i in range(n)
        )
        return FrameStream("r1", config.modality, frames)

    def test_25_frames_stride_10(self):
        config = ModalityConfig(Modality.HAND, 8, window_frames=10)
        windows = list(window_iterator(self.make_stream(25, config), config))
        assert len(windows) == 2
        assert windows[0][0].frame_index == 0
        assert windows[1][-1].frame_index == 19

    def test_exact_fit(self):
        config = ModalityConfig(Modality.HAND, 8, window_frames=10)
        assert len(list(window_iterator(self.make_stream(10, config), config))) == 1

    def test_too_short_is_empty(self):
        config = ModalityConfig(Modality.HAND, 8, window_frames=10)
        assert list(window_iterator(self.make_stream(9, config), config)) == []


def random_window(rng, config):
    positions = rng.normal(size=(config.window_frames, config.point_count, 2)) * 5
    return make_window([[tuple(p) for p in f] for f in positions], config)


def transformed(frames, config, fn):
    return [
        Frame(f.recording_id, f.modality, f.frame_index, f.timestamp_s,
              tuple(fn(x, y) for x, y in f.points))
        for f in frames
    ]


class TestGeometricInvariants:
    config = ModalityConfig(
        Modality.HAND, 8, angle_pairs=((0, 1), (2, 5), (3, 7)), window_frames=5
    )

    def test_translation_invariance(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            frames = random_window(rng, self.config)
            fv = assemble_feature_vector(frames, self.config)
            moved = transformed(frames, self.config, lambda x, y: (x + 17.5, y - 3.25))
            fv2 = assemble_feature_vector(moved, self.config)
            assert fv2.displacements == pytest.approx(fv.displacements)
            assert fv2.speeds == pytest.approx(fv.speeds)
            assert fv2.orientations == pytest.approx(fv.orientations)
            assert fv2.angles == pytest.approx(fv.angles)

    def test_rotation_covariance(self):
        rng = np.random.default_rng(22)
        phi = 0.7
        c, s = math.cos(phi), math.sin(phi)
        for _ in range(50):
            frames = random_window(rng, self.config)
            fv = assemble_feature_vector(frames, self.config)
            rot = transformed(frames, self.config, lambda x, y: (c * x - s * y, s * x + c * y))
            fv2 = assemble_feature_vector(rot, self.config)
            assert fv2.displacements == pytest.approx(fv.displacements)
            assert fv2.speeds == pytest.approx(fv.speeds)
            for o, o2 in zip(fv.orientations, fv2.orientations):
                expected = math.remainder(o + phi, 2 * math.pi)
                assert math.isclose(
                    math.remainder(o2 - expected, 2 * math.pi), 0.0, abs_tol=1e-9
                )
            for a, a2 in zip(fv.angles, fv2.angles):
                diff = math.remainder(a2 - (a + phi), math.pi)
                assert math.isclose(diff, 0.0, abs_tol=1e-9)

    def test_scale_covariance(self):
        rng = np.random.default_rng(23)
        k = 2.5
        for _ in range(50):
            frames = random_window(rng, self.config)
            fv = assemble_feature_vector(frames, self.config)
            scaled = transformed(frames, self.config, lambda x, y: (k * x, k * y))
            fv2 = assemble_feature_vector(scaled, self.config)
            assert fv2.displacements == pytest.approx(tuple(k * d for d in fv.displacements))
            assert fv2.speeds == pytest.approx(tuple(k * s for s in fv.speeds))
            assert fv2.orientations == pytest.approx(fv.orientations)
            assert fv2.angles == pytest.approx(fv.angles)

    def test_path_dominates_net(self):
        rng = np.random.default_rng(24)
        for _ in range(50):
            frames = random_window(rng, self.config)
            fv = assemble_feature_vector(frames, self.config)
            duration = frames[-1].timestamp_s - frames[0].timestamp_s
            for d, s in zip(fv.displacements, fv.speeds):
                assert s * duration >= d - 1e-9
