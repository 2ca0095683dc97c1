"""Vehicle trajectories (random-waypoint walks) and station association."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .radio import RadioEnvironment, Rect, nearest_station


@dataclass(frozen=True)
class VehicleTrajectory:
    """Timestamped 2D positions of one vehicle.

    Timestamps are strictly increasing; between consecutive samples the
    vehicle moves in a straight line at constant speed, so generated walks
    keep every leg speed inside speed_range.
    """

    vehicle_id: str
    samples: tuple[tuple[float, tuple[float, float]], ...]
    speed_range: tuple[float, float]
    _times: np.ndarray = field(init=False, repr=False, compare=False)
    _xs: np.ndarray = field(init=False, repr=False, compare=False)
    _ys: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        samples = tuple((float(t), (float(p[0]), float(p[1]))) for t, p in self.samples)
        if not samples:
            raise InvalidInputError("trajectory must contain at least one sample")
        times = np.array([t for t, _ in samples])
        if not np.all(np.isfinite(times)) or np.any(np.diff(times) <= 0.0):
            raise InvalidInputError("timestamps must be finite and strictly increasing")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "_times", times)
        object.__setattr__(self, "_xs", np.array([p[0] for _, p in samples]))
        object.__setattr__(self, "_ys", np.array([p[1] for _, p in samples]))

    @property
    def start_time(self) -> float:
        return float(self._times[0])

    @property
    def end_time(self) -> float:
        return float(self._times[-1])


def generate_path(seed: int, region: Rect, speed_range: tuple[float, float],
                  duration: float, timestep: float = 1.0,
                  vehicle_id: str | None = None, pause_time: float = 0.0) -> VehicleTrajectory:
    """Random-waypoint walk inside a region; deterministic per seed.

    Picks a uniform waypoint and uniform speed, moves toward it each
    timestep, and draws a new leg on arrival. Arrival instants get their
    own sample so every consecutive pair moves at one leg's exact speed.
    """
    vmin, vmax = speed_range
    if not (0.0 < vmin <= vmax) or not math.isfinite(vmax):
        raise InvalidInputError(f"speed range must satisfy 0 < min <= max, got {speed_range}")
    if duration < 0.0 or not math.isfinite(duration):
        raise InvalidInputError(f"duration must be >= 0, got {duration}")
    if timestep <= 0.0:
        raise InvalidInputError(f"timestep must be > 0, got {timestep}")
    if pause_time < 0.0:
        raise InvalidInputError(f"pause time must be >= 0, got {pause_time}")
    rng = np.random.default_rng(seed)

    def draw_point() -> np.ndarray:
        return np.array([rng.uniform(region.xmin, region.xmax),
                         rng.uniform(region.ymin, region.ymax)])

    pos = draw_point()
    samples = [(0.0, (float(pos[0]), float(pos[1])))]
    t = 0.0
    waypoint = draw_point()
    speed = rng.uniform(vmin, vmax)
    paused_until = None
    while t < duration:
        if paused_until is not None:
            t_next = min(paused_until, t + timestep, duration)
            if t_next >= paused_until:
                paused_until = None
            samples.append((t_next, (float(pos[0]), float(pos[1]))))
            t = t_next
            continue
        to_wp = waypoint - pos
        dist = float(np.linalg.norm(to_wp))
        if dist < 1e-9:
            waypoint = draw_point()
            speed = rng.uniform(vmin, vmax)
            continue
        t_arrive = t + dist / speed
        t_next = min(t + timestep, t_arrive, duration)
        if t_next == t_arrive:
            pos = waypoint.copy()
            waypoint = draw_point()
            speed = rng.uniform(vmin, vmax)
            if pause_time > 0.0:
                paused_until = t_arrive + pause_time
        else:
            pos = pos + to_wp / dist * (speed * (t_next - t))
        if t_next > t:
            samples.append((t_next, (float(pos[0]), float(pos[1]))))
        t = t_next
    return VehicleTrajectory(vehicle_id=vehicle_id or f"veh{seed}",
                             samples=tuple(samples), speed_range=(vmin, vmax))


def position_at(traj: VehicleTrajectory, t: float) -> tuple[float, float]:
    """Linearly interpolated position; clamps outside the sampled span."""
    x = float(np.interp(t, traj._times, traj._xs))
    y = float(np.interp(t, traj._times, traj._ys))
    return (x, y)


def associate(position, env: RadioEnvironment) -> int:
    """Serving base-station index: nearest station, ties to the lowest index."""
    return nearest_station(env, position)


def write_trajectories_csv(trajectories, path) -> Path:
    """CSV export `vehicle_id,t,x,y` with 3 decimal places on coordinates."""
    lines = ["vehicle_id,t,x,y"]
    for traj in trajectories:
        for t, (x, y) in traj.samples:
            lines.append(f"{traj.vehicle_id},{t:.6f},{x:.3f},{y:.3f}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_trajectories_csv(path) -> list[VehicleTrajectory]:
    """Read trajectories back; speed_range is recovered from the leg speeds."""
    rows: dict[str, list[tuple[float, tuple[float, float]]]] = {}
    text = Path(path).read_text(encoding="utf-8")
    for line in text.splitlines()[1:]:
        if not line.strip():
            continue
        vid, t, x, y = line.split(",")
        rows.setdefault(vid, []).append((float(t), (float(x), float(y))))
    trajectories = []
    for vid, samples in rows.items():
        samples.sort(key=lambda s: s[0])
        speeds = [math.hypot(b[1][0] - a[1][0], b[1][1] - a[1][1]) / (b[0] - a[0])
                  for a, b in zip(samples, samples[1:])]
        rng = (min(speeds), max(speeds)) if speeds else (1.0, 1.0)
        rng = (max(rng[0], 1e-9), max(rng[1], 1e-9))
        trajectories.append(VehicleTrajectory(vehicle_id=vid, samples=tuple(samples),
                                              speed_range=rng))
    return trajectories
