from __future__ import annotations

import json
import math

import numpy as np
import pytest

from twinsim.errors import InvalidInputError
from twinsim.geometry import (CameraPose, ContributorLine, Quaternion,
                              SamplingScenario, ScenarioParams, ViewpointSet,
                              compose_camera_matrix, coverage_metrics,
                              default_cooperative_lines, look_at_pose,
                              quat_to_rotation, read_transforms_manifest,
                              rotation_to_quat, sample_viewpoints, scaling_matrix,
                              translation_matrix, write_transforms_manifest)


def quat_rotate_oracle(q: Quaternion, v) -> np.ndarray:
    """Rotate a vector by Hamilton product q * v * conj(q); independent of
    the closed-form rotation-matrix formula."""
    def mul(a, b):
        w1, x1, y1, z1 = a
        w2, x2, y2, z2 = b
        return (w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2)
    qt = (q.w, q.x, q.y, q.z)
    conj = (q.w, -q.x, -q.y, -q.z)
    rotated = mul(mul(qt, (0.0, v[0], v[1], v[2])), conj)
    return np.array(rotated[1:])


def rotation_matrix_oracle(q: Quaternion) -> np.ndarray:
    """Columns are the rotated basis vectors."""
    return np.column_stack([quat_rotate_oracle(q, e) for e in np.eye(3)])


def random_quaternion(rng) -> Quaternion:
    w, x, y, z = rng.normal(size=4)
    return Quaternion(w, x, y, z)


class TestQuaternion:
    def test_normalized_on_construction(self):
        q = Quaternion(2.0, 0.0, 0.0, 0.0)
        assert q.w == 1.0
        assert abs(q.norm - 1.0) <= 1e-9

    def test_zero_norm_rejected(self):
        with pytest.raises(InvalidInputError):
            Quaternion(0.0, 0.0, 0.0, 0.0)

    def test_nan_rejected(self):
        with pytest.raises(InvalidInputError):
            Quaternion(float("nan"), 0.0, 0.0, 1.0)

    def test_identity_quaternion_gives_identity(self):
        R = quat_to_rotation(Quaternion(1.0, 0.0, 0.0, 0.0))
        assert np.array_equal(R, np.eye(3))

    def test_z_flip_quaternion(self):
        # w=0, z=1: half-turn about z
        R = quat_to_rotation(Quaternion(0.0, 0.0, 0.0, 1.0))
        assert np.array_equal(R, np.diag([-1.0, -1.0, 1.0]))
        oracle = rotation_matrix_oracle(Quaternion(0.0, 0.0, 0.0, 1.0))
        np.testing.assert_allclose(R, oracle, rtol=0, atol=1e-15)

    def test_quarter_turn_about_z(self):
        s = math.sqrt(0.5)
        R = quat_to_rotation(Quaternion(s, 0.0, 0.0, s))
        expected = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        np.testing.assert_allclose(R, expected, rtol=0, atol=1e-15)
        np.testing.assert_allclose(R, rotation_matrix_oracle(Quaternion(s, 0, 0, s)),
                                   rtol=0, atol=1e-15)

    def test_random_rotations_orthonormal(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            q = random_quaternion(rng)
            R = quat_to_rotation(q)
            np.testing.assert_allclose(R.T @ R, np.eye(3), rtol=0, atol=1e-9)
            assert abs(np.linalg.det(R) - 1.0) <= 1e-9

    def test_matches_hamilton_product_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            q = random_quaternion(rng)
            np.testing.assert_allclose(quat_to_rotation(q), rotation_matrix_oracle(q),
                                       rtol=0, atol=1e-12)

    def test_rotation_round_trip(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            q = random_quaternion(rng)
            q2 = rotation_to_quat(quat_to_rotation(q))
            # q and -q encode the same rotation
            sign = 1.0 if q.w * q2.w + q.x * q2.x + q.y * q2.y + q.z * q2.z >= 0 else -1.0
            np.testing.assert_allclose([q.w, q.x, q.y, q.z],
                                       [sign * q2.w, sign * q2.x, sign * q2.y, sign * q2.z],
                                       rtol=0, atol=1e-9)


class TestHomogeneousFactors:
    def test_translation_zero_is_identity(self):
        assert np.array_equal(translation_matrix((0.0, 0.0, 0.0)), np.eye(4))

    def test_translation_last_column(self):
        M = translation_matrix((1.0, 2.0, 3.0))
        assert np.array_equal(M[:, 3], [1.0, 2.0, 3.0, 1.0])
        assert np.array_equal(M[:3, :3], np.eye(3))
        assert np.array_equal(translation_matrix((-5, 0, 0))[:, 3], [-5.0, 0.0, 0.0, 1.0])

    def test_scaling_diag(self):
        assert np.array_equal(scaling_matrix((1.0, 1.0, 1.0)), np.eye(4))
        assert np.array_equal(scaling_matrix((2.0, 2.0, 2.0)), np.diag([2.0, 2.0, 2.0, 1.0]))
        assert np.array_equal(scaling_matrix((1.0, 2.0, 0.5)), np.diag([1.0, 2.0, 0.5, 1.0]))

    def test_scaling_rejects_nonpositive(self):
        with pytest.raises(InvalidInputError):
            scaling_matrix((1.0, 0.0, 1.0))
        with pytest.raises(InvalidInputError):
            scaling_matrix((1.0, -2.0, 1.0))


def compose_oracle(pose: CameraPose) -> np.ndarray:
    """Brute-force product of the three homogeneous factors."""
    R4 = np.eye(4)
    R4[:3, :3] = quat_to_rotation(pose.orientation)
    return translation_matrix(pose.translation) @ R4 @ scaling_matrix(pose.scale)


class TestComposeCameraMatrix:
    def test_identity_pose(self):
        pose = CameraPose(Quaternion(1, 0, 0, 0), (0.0, 0.0, 0.0))
        assert np.array_equal(compose_camera_matrix(pose), np.eye(4))

    def test_pure_translation(self):
        pose = CameraPose(Quaternion(1, 0, 0, 0), (1.0, 2.0, 3.0))
        assert np.array_equal(compose_camera_matrix(pose), translation_matrix((1, 2, 3)))

    def test_worked_example(self):
        pose = CameraPose(Quaternion(0, 0, 0, 1), (1.0, 0.0, 0.0), scale=(2.0, 2.0, 2.0))
        expected = np.array([[-2.0, 0.0, 0.0, 1.0],
                             [0.0, -2.0, 0.0, 0.0],
                             [0.0, 0.0, 2.0, 0.0],
                             [0.0, 0.0, 0.0, 1.0]])
        M = compose_camera_matrix(pose)
        assert np.array_equal(M, expected)
        np.testing.assert_allclose(M, compose_oracle(pose), rtol=1e-12, atol=0)

    def test_matches_product_oracle_on_random_poses(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            pose = CameraPose(random_quaternion(rng),
                              tuple(rng.normal(scale=10.0, size=3)),
                              scale=tuple(rng.uniform(0.1, 5.0, size=3)),
                              timestamp=float(rng.uniform(0.0, 10.0)))
            np.testing.assert_allclose(compose_camera_matrix(pose), compose_oracle(pose),
                                       rtol=1e-12, atol=1e-15)

    def test_bottom_row(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            pose = CameraPose(random_quaternion(rng), tuple(rng.normal(size=3)))
            assert np.array_equal(compose_camera_matrix(pose)[3], [0.0, 0.0, 0.0, 1.0])

    def test_pose_validation(self):
        with pytest.raises(InvalidInputError):
            CameraPose(Quaternion(1, 0, 0, 0), (0, 0, 0), scale=(1.0, 0.0, 1.0))
        with pytest.raises(InvalidInputError):
            CameraPose(Quaternion(1, 0, 0, 0), (0, 0, 0), timestamp=-1.0)


class TestSampleViewpoints:
    def test_ideal_hemisphere(self):
        vs = sample_viewpoints(SamplingScenario.IDEAL, 100,
                               ScenarioParams(radius=4.0), seed=7)
        assert len(vs.poses) == 100
        for pose in vs.poses:
            p = np.asarray(pose.translation)
            assert p[2] >= 0.0
            assert abs(np.linalg.norm(p) - 4.0) <= 1e-6

    def test_ideal_looks_at_center(self):
        vs = sample_viewpoints(SamplingScenario.IDEAL, 50, seed=1)
        center = np.asarray(vs.target_center)
        for pose in vs.poses:
            d = pose.look_direction()
            v = center - np.asarray(pose.translation)
            np.testing.assert_allclose(d, v / np.linalg.norm(v), rtol=0, atol=1e-9)

    def test_unbounded_spacing_exact(self):
        vs = sample_viewpoints(SamplingScenario.UNBOUNDED, 10,
                               ScenarioParams(speed_mps=10.0, frame_rate_hz=2.0))
        pts = np.array([p.translation for p in vs.poses])
        gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        assert np.all(gaps == 5.0)

    def test_unbounded_spacing_other_rates(self):
        vs = sample_viewpoints(SamplingScenario.UNBOUNDED, 8,
                               ScenarioParams(speed_mps=9.0, frame_rate_hz=2.0))
        pts = np.array([p.translation for p in vs.poses])
        gaps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        assert np.all(gaps == 4.5)

    def test_disperse_excludes_polar_cap(self):
        vs = sample_viewpoints(SamplingScenario.DISPERSE, 25,
                               ScenarioParams(radius=4.0, cap_angle_deg=30.0), seed=3)
        assert len(vs.poses) == 25
        zmax = math.cos(math.radians(30.0))
        for pose in vs.poses:
            p = np.asarray(pose.translation)
            elevation = math.degrees(math.asin(p[2] / np.linalg.norm(p)))
            assert elevation < 60.0
            assert p[2] / np.linalg.norm(p) < zmax

    def test_cooperative_unions_contributors(self):
        vs = sample_viewpoints(SamplingScenario.COOPERATIVE, 10, seed=2)
        ids = {p.contributor_id for p in vs.poses}
        assert ids == {"veh0", "veh1"}
        counts = [sum(1 for p in vs.poses if p.contributor_id == cid) for cid in sorted(ids)]
        assert counts == [5, 5]

    def test_cooperative_custom_lines(self):
        lines = (ContributorLine("a", count=3), ContributorLine("b", direction=(0, 1, 0), count=4))
        vs = sample_viewpoints(SamplingScenario.COOPERATIVE, 7,
                               ScenarioParams(contributors=lines))
        assert sum(1 for p in vs.poses if p.contributor_id == "a") == 3
        assert sum(1 for p in vs.poses if p.contributor_id == "b") == 4

    def test_deterministic_per_seed(self):
        for scenario in SamplingScenario:
            a = sample_viewpoints(scenario, 12, seed=99)
            b = sample_viewpoints(scenario, 12, seed=99)
            assert a == b

    def test_seed_changes_layout(self):
        a = sample_viewpoints(SamplingScenario.IDEAL, 10, seed=1)
        b = sample_viewpoints(SamplingScenario.IDEAL, 10, seed=2)
        assert a != b

    def test_rejects_bad_inputs(self):
        with pytest.raises(InvalidInputError):
            sample_viewpoints(SamplingScenario.IDEAL, 0)
        with pytest.raises(InvalidInputError):
            sample_viewpoints(SamplingScenario.IDEAL, 5, ScenarioParams(radius=-1.0))

    def test_viewpoint_set_rejects_stray_pose(self):
        stray = look_at_pose((10.0, 0.0, 2.0), (10.0, 50.0, 2.0))
        with pytest.raises(InvalidInputError):
            ViewpointSet(poses=(stray,), target_center=(0.0, 0.0, 0.0),
                         target_radius=1.0, scenario=SamplingScenario.IDEAL)


def coverage_oracle(azimuths_deg, bins=36):
    """Brute-force bin scan over explicit azimuth values."""
    width = 360.0 / bins
    hit = [False] * bins
    for az in azimuths_deg:
        hit[int((az % 360.0) // width) % bins] = True
    frac = sum(hit) / bins
    max_run = 0
    if not all(hit):
        doubled = hit + hit
        run = 0
        for h in doubled:
            run = run + 1 if not h else 0
            max_run = max(max_run, min(run, bins))
    return frac, max_run * width


def _set_at_azimuths(azimuths_deg, radius=4.0):
    poses = []
    for i, az in enumerate(azimuths_deg):
        r = math.radians(az)
        p = (radius * math.cos(r), radius * math.sin(r), 1.0)
        poses.append(look_at_pose(p, (0.0, 0.0, 0.0), timestamp=float(i)))
    return ViewpointSet(poses=tuple(poses), target_center=(0.0, 0.0, 0.0),
                        target_radius=radius, scenario=SamplingScenario.COOPERATIVE)


class TestCoverageMetrics:
    def test_ideal_full_coverage(self):
        vs = sample_viewpoints(SamplingScenario.IDEAL, 100, seed=7)
        cm = coverage_metrics(vs)
        assert cm.coverage_fraction == 1.0
        assert cm.max_gap_deg == 0.0
        assert cm.distinct_views == 100

    def test_single_pose(self):
        cm = coverage_metrics(_set_at_azimuths([45.0]))
        assert cm.coverage_fraction == pytest.approx(1 / 36)
        assert cm.max_gap_deg == pytest.approx(350.0)
        assert cm.distinct_views == 1

    def test_opposite_pair(self):
        cm = coverage_metrics(_set_at_azimuths([0.0, 180.0]))
        frac, gap = coverage_oracle([0.0, 180.0])
        assert cm.coverage_fraction == pytest.approx(2 / 36)
        assert cm.coverage_fraction == pytest.approx(frac)
        assert cm.max_gap_deg == pytest.approx(170.0)
        assert cm.max_gap_deg == pytest.approx(gap)

    def test_matches_oracle_on_random_sets(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            azimuths = rng.uniform(0.0, 360.0, size=rng.integers(1, 30)).tolist()
            cm = coverage_metrics(_set_at_azimuths(azimuths))
            frac, gap = coverage_oracle(azimuths)
            assert cm.coverage_fraction == pytest.approx(frac)
            assert cm.max_gap_deg == pytest.approx(gap)


class TestTransformsManifest:
    def test_single_identity_pose(self, tmp_path):
        pose = look_at_pose((0.0, -4.0, 0.0), (0.0, 0.0, 0.0))
        vs = ViewpointSet(poses=(pose,), target_center=(0.0, 0.0, 0.0),
                          target_radius=4.0, scenario=SamplingScenario.IDEAL)
        out = write_transforms_manifest(vs, tmp_path / "transforms.json")
        doc = json.loads(out.read_text())
        assert doc["frame_count"] == 1
        assert len(doc["frames"]) == 1
        np.testing.assert_allclose(np.array(doc["frames"][0]["transform_matrix"]),
                                   compose_camera_matrix(pose), rtol=0, atol=0)

    def test_round_trip_bit_identical(self, tmp_path):
        vs = sample_viewpoints(SamplingScenario.DISPERSE, 25, seed=13)
        path = write_transforms_manifest(vs, tmp_path / "t.json")
        angle, frames = read_transforms_manifest(path)
        assert len(frames) == 25
        for i, (name, M) in enumerate(frames):
            assert name == f"./images/frame_{i:04d}"
            assert np.array_equal(M, compose_camera_matrix(vs.poses[i]))

    def test_frame_count_field(self, tmp_path):
        vs = sample_viewpoints(SamplingScenario.IDEAL, 100, seed=7)
        doc = json.loads(write_transforms_manifest(vs, tmp_path / "i.json").read_text())
        assert doc["frame_count"] == 100
        assert len(doc["frames"]) == 100

    def test_rewrite_is_byte_identical(self, tmp_path):
        vs = sample_viewpoints(SamplingScenario.IDEAL, 20, seed=4)
        a = write_transforms_manifest(vs, tmp_path / "a.json").read_bytes()
        b = write_transforms_manifest(vs, tmp_path / "b.json").read_bytes()
        assert a == b

    def test_unwritable_path_raises(self, tmp_path):
        vs = sample_viewpoints(SamplingScenario.IDEAL, 3, seed=0)
        with pytest.raises(OSError):
            write_transforms_manifest(vs, tmp_path / "missing" / "t.json")


class TestDefaultCooperativeLines:
    def test_distinct_directions(self):
        lines = default_cooperative_lines(4)
        dirs = {tuple(round(c, 9) for c in ln.direction) for ln in lines}
        assert len(dirs) == 4

    def test_rejects_zero(self):
        with pytest.raises(InvalidInputError):
            default_cooperative_lines(0)
