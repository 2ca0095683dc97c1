from __future__ import annotations

import math

import numpy as np
import pytest

from twinsim.errors import InvalidInputError
from twinsim.mobility import (VehicleTrajectory, associate, generate_path,
                              position_at, read_trajectories_csv,
                              write_trajectories_csv)
from twinsim.radio import AreaClass, Rect, make_environment

REGION = Rect(0.0, 0.0, 1000.0, 800.0)


class TestGeneratePath:
    def test_zero_duration_single_sample(self):
        traj = generate_path(1, REGION, (5.0, 10.0), duration=0.0)
        assert len(traj.samples) == 1
        assert traj.samples[0][0] == 0.0

    def test_deterministic_per_seed(self):
        a = generate_path(42, REGION, (8.0, 16.0), duration=120.0, timestep=0.5)
        b = generate_path(42, REGION, (8.0, 16.0), duration=120.0, timestep=0.5)
        assert a.samples == b.samples

    def test_different_seeds_differ(self):
        a = generate_path(1, REGION, (8.0, 16.0), duration=60.0)
        b = generate_path(2, REGION, (8.0, 16.0), duration=60.0)
        assert a.samples != b.samples

    def test_positions_inside_region(self):
        for seed in range(10):
            traj = generate_path(seed, REGION, (8.0, 16.0), duration=300.0)
            for _, (x, y) in traj.samples:
                assert REGION.contains((x, y), tol=1e-9)

    def test_leg_speeds_within_range(self):
        for seed in range(10):
            traj = generate_path(seed, REGION, (8.0, 16.0), duration=300.0, timestep=0.7)
            for (t0, p0), (t1, p1) in zip(traj.samples, traj.samples[1:]):
                speed = math.hypot(p1[0] - p0[0], p1[1] - p0[1]) / (t1 - t0)
                assert 8.0 - 1e-6 <= speed <= 16.0 + 1e-6

    def test_ends_at_duration(self):
        traj = generate_path(3, REGION, (8.0, 16.0), duration=100.0, timestep=0.3)
        assert traj.samples[-1][0] == pytest.approx(100.0, abs=1e-9)

    def test_pause_inserts_stationary_interval(self):
        traj = generate_path(5, Rect.square(60.0), (10.0, 10.0), duration=200.0,
                             timestep=1.0, pause_time=3.0)
        stationary = any(a[1] == b[1] for a, b in zip(traj.samples, traj.samples[1:]))
        assert stationary

    def test_rejects_bad_inputs(self):
        with pytest.raises(InvalidInputError):
            generate_path(1, REGION, (0.0, 10.0), duration=10.0)
        with pytest.raises(InvalidInputError):
            generate_path(1, REGION, (10.0, 5.0), duration=10.0)
        with pytest.raises(InvalidInputError):
            generate_path(1, REGION, (5.0, 10.0), duration=-1.0)
        with pytest.raises(InvalidInputError):
            generate_path(1, REGION, (5.0, 10.0), duration=10.0, timestep=0.0)
        with pytest.raises(InvalidInputError):
            Rect(0.0, 0.0, -10.0, 10.0)


class TestPositionAt:
    def _traj(self):
        return VehicleTrajectory("v", ((0.0, (0.0, 0.0)), (1.0, (10.0, 0.0))), (5.0, 15.0))

    def test_exact_sample(self):
        assert position_at(self._traj(), 1.0) == (10.0, 0.0)

    def test_midpoint(self):
        assert position_at(self._traj(), 0.5) == (5.0, 0.0)

    def test_clamps_outside_span(self):
        traj = self._traj()
        assert position_at(traj, -5.0) == (0.0, 0.0)
        assert position_at(traj, 99.0) == (10.0, 0.0)

    def test_nonincreasing_timestamps_rejected(self):
        with pytest.raises(InvalidInputError):
            VehicleTrajectory("v", ((0.0, (0.0, 0.0)), (0.0, (1.0, 0.0))), (1.0, 2.0))


class TestAssociate:
    def _env(self):
        return make_environment(AreaClass.SUBURBAN, Rect(0, 0, 1800, 1800))

    def test_exact_station_position(self):
        env = self._env()
        for i, st in enumerate(env.stations):
            assert associate(st, env) == i

    def test_tie_breaks_to_lowest_index(self):
        env = self._env()
        s0, s1 = env.stations[0], env.stations[1]
        mid = ((s0[0] + s1[0]) / 2.0, (s0[1] + s1[1]) / 2.0)
        assert associate(mid, env) == 0

    def test_matches_brute_force_scan(self):
        env = self._env()
        rng = np.random.default_rng(123)
        stations = np.asarray(env.stations)
        for _ in range(10_000):
            p = rng.uniform(-200.0, 2000.0, size=2)
            idx = associate(p, env)
            dists = np.linalg.norm(stations - p, axis=1)
            assert dists[idx] <= dists.min() + 1e-12


class TestTrajectoryCsv:
    def test_round_trip(self, tmp_path):
        trajs = [generate_path(s, REGION, (8.0, 16.0), duration=30.0) for s in (1, 2)]
        path = write_trajectories_csv(trajs, tmp_path / "paths.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "vehicle_id,t,x,y"
        # coordinates carry exactly 3 decimal places
        assert all(len(part.split(".")[1]) == 3 for part in lines[1].split(",")[2:])
        back = read_trajectories_csv(path)
        assert {t.vehicle_id for t in back} == {t.vehicle_id for t in trajs}
        orig = {t.vehicle_id: t for t in trajs}
        for traj in back:
            ref = orig[traj.vehicle_id]
            assert len(traj.samples) == len(ref.samples)
            for (ta, pa), (tb, pb) in zip(traj.samples, ref.samples):
                assert ta == pytest.approx(tb, abs=1e-6)
                assert pa[0] == pytest.approx(pb[0], abs=5e-4)
                assert pa[1] == pytest.approx(pb[1], abs=5e-4)
