"""Camera extrinsics math, viewpoint generators, and coverage metrics.

Poses follow the reconstruction-manifest convention: the camera looks along
its local -z axis, +y is up, and the pose matrix M maps camera coordinates
to world coordinates via M = T * R * S (translation, rotation, per-axis
scale).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import InvalidInputError

Vec3 = tuple[float, float, float]

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
DEFAULT_CAMERA_ANGLE_X = math.pi / 3.0  # horizontal FOV passthrough, radians

# A generated pose must aim its view ray within this multiple of the target
# radius of the target center.
LOOK_AT_TOLERANCE_FACTOR = 1.5


class SamplingScenario(str, Enum):
    IDEAL = "ideal"
    DISPERSE = "disperse"
    UNBOUNDED = "unbounded"
    COOPERATIVE = "cooperative"


@dataclass(frozen=True)
class Quaternion:
    """Unit quaternion (w, x, y, z); normalized on construction."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        norm = math.sqrt(self.w * self.w + self.x * self.x
                         + self.y * self.y + self.z * self.z)
        if not math.isfinite(norm) or norm < 1e-12:
            raise InvalidInputError(
                f"quaternion norm must be positive and finite, got {norm!r}")
        object.__setattr__(self, "w", self.w / norm)
        object.__setattr__(self, "x", self.x / norm)
        object.__setattr__(self, "y", self.y / norm)
        object.__setattr__(self, "z", self.z / norm)

    @property
    def norm(self) -> float:
        return math.sqrt(self.w * self.w + self.x * self.x
                         + self.y * self.y + self.z * self.z)


IDENTITY_QUATERNION = Quaternion(1.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class CameraPose:
    """One image sample: orientation, position, per-axis scale, capture time."""

    orientation: Quaternion
    translation: Vec3
    scale: Vec3 = (1.0, 1.0, 1.0)
    timestamp: float = 0.0
    contributor_id: str = "cam"

    def __post_init__(self):
        if len(self.translation) != 3 or len(self.scale) != 3:
            raise InvalidInputError("translation and scale must be 3-vectors")
        if not all(math.isfinite(v) for v in (*self.translation, *self.scale)):
            raise InvalidInputError("pose components must be finite")
        if any(s <= 0.0 for s in self.scale):
            raise InvalidInputError(f"scale components must be > 0, got {self.scale}")
        if not (math.isfinite(self.timestamp) and self.timestamp >= 0.0):
            raise InvalidInputError(f"timestamp must be >= 0, got {self.timestamp}")

    def look_direction(self) -> np.ndarray:
        """Unit vector of the camera's view ray (-z axis in world frame)."""
        return -quat_to_rotation(self.orientation)[:, 2]


def quat_to_rotation(q: Quaternion) -> np.ndarray:
    """3x3 rotation matrix of a unit quaternion, evaluated entrywise."""
    w, x, y, z = q.w, q.x, q.y, q.z
    return np.array([
        [1 - 2 * y * y - 2 * z * z, 2 * x * y - 2 * z * w, 2 * x * z + 2 * y * w],
        [2 * x * y + 2 * z * w, 1 - 2 * x * x - 2 * z * z, 2 * y * z - 2 * x * w],
        [2 * x * z - 2 * y * w, 2 * y * z + 2 * x * w, 1 - 2 * x * x - 2 * y * y],
    ])


def rotation_to_quat(R: np.ndarray) -> Quaternion:
    """Unit quaternion of a 3x3 rotation matrix (Shepperd's method)."""
    trace = R[0, 0] + R[1, 1] + R[2, 2]
    if trace > 0:
        s = 0.5 / math.sqrt(trace + 1.0)
        w = 0.25 / s
        x = (R[2, 1] - R[1, 2]) * s
        y = (R[0, 2] - R[2, 0]) * s
        z = (R[1, 0] - R[0, 1]) * s
    elif R[0, 0] > R[1, 1] and R[0, 0] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        w = (R[2, 1] - R[1, 2]) / s
        x = 0.25 * s
        y = (R[0, 1] + R[1, 0]) / s
        z = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] > R[2, 2]:
        s = 2.0 * math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2])
        w = (R[0, 2] - R[2, 0]) / s
        x = (R[0, 1] + R[1, 0]) / s
        y = 0.25 * s
        z = (R[1, 2] + R[2, 1]) / s
    else:
        s = 2.0 * math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1])
        w = (R[1, 0] - R[0, 1]) / s
        x = (R[0, 2] + R[2, 0]) / s
        y = (R[1, 2] + R[2, 1]) / s
        z = 0.25 * s
    return Quaternion(w, x, y, z)


def translation_matrix(t) -> np.ndarray:
    """4x4 homogeneous translation: identity with last column (tx, ty, tz, 1)."""
    t = np.asarray(t, dtype=float)
    if t.shape != (3,):
        raise InvalidInputError("translation must be a 3-vector")
    M = np.eye(4)
    M[:3, 3] = t
    return M


def scaling_matrix(s) -> np.ndarray:
    """4x4 homogeneous scaling: diag(sx, sy, sz, 1)."""
    s = np.asarray(s, dtype=float)
    if s.shape != (3,):
        raise InvalidInputError("scale must be a 3-vector")
    if np.any(s <= 0.0) or not np.all(np.isfinite(s)):
        raise InvalidInputError(f"scale components must be > 0, got {s.tolist()}")
    return np.diag([s[0], s[1], s[2], 1.0])


def compose_camera_matrix(pose: CameraPose) -> np.ndarray:
    """Pose matrix M = T * R * S with R embedded in homogeneous 4x4 form.

    Assembled directly: the upper-left block is R with its columns scaled,
    the last column is the translation. Equals the explicit 4x4 product.
    """
    R = quat_to_rotation(pose.orientation)
    s = np.asarray(pose.scale, dtype=float)
    M = np.eye(4)
    M[:3, :3] = R * s  # column j scaled by s[j]
    M[:3, 3] = pose.translation
    return M


def look_at_pose(position, target, timestamp: float = 0.0,
                 contributor_id: str = "cam", scale: Vec3 = (1.0, 1.0, 1.0)) -> CameraPose:
    """Pose at `position` aiming the view ray (-z) at `target`, +y up."""
    position = np.asarray(position, dtype=float)
    target = np.asarray(target, dtype=float)
    forward = target - position
    dist = np.linalg.norm(forward)
    if dist < 1e-12:
        raise InvalidInputError("camera position coincides with the target")
    forward = forward / dist
    z_cam = -forward
    up = np.array([0.0, 0.0, 1.0])
    if abs(float(np.dot(up, z_cam))) > 0.9999:  # near-vertical view ray
        up = np.array([0.0, 1.0, 0.0])
    x_cam = np.cross(up, z_cam)
    x_cam = x_cam / np.linalg.norm(x_cam)
    y_cam = np.cross(z_cam, x_cam)
    R = np.column_stack([x_cam, y_cam, z_cam])
    return CameraPose(
        orientation=rotation_to_quat(R),
        translation=(float(position[0]), float(position[1]), float(position[2])),
        scale=scale,
        timestamp=timestamp,
        contributor_id=contributor_id,
    )


@dataclass(frozen=True)
class ContributorLine:
    """Capture line of one contributor in the cooperative scenario."""

    contributor_id: str
    speed_mps: float = 10.0
    frame_rate_hz: float = 2.0
    start: Vec3 | None = None  # None: line is centered on its closest approach
    direction: Vec3 = (1.0, 0.0, 0.0)
    count: int | None = None  # None: even share of the requested total


@dataclass(frozen=True)
class ScenarioParams:
    """Tunable parameters of the four viewpoint sampling scenarios."""

    target_center: Vec3 = (0.0, 0.0, 0.0)
    radius: float = 4.0
    frame_rate_hz: float = 2.0
    # disperse: excluded polar cap and azimuth jitter
    cap_angle_deg: float = 30.0
    azimuth_jitter_deg: float = 5.0
    # unbounded: straight capture line
    speed_mps: float = 10.0
    line_start: Vec3 | None = None
    line_direction: Vec3 = (1.0, 0.0, 0.0)
    standoff_m: float = 6.0
    camera_height_m: float = 1.6
    # cooperative: per-contributor lines (None: two default lines)
    contributors: tuple[ContributorLine, ...] | None = None


@dataclass(frozen=True)
class ViewpointSet:
    """Poses sampled around one target, tagged with their scenario."""

    poses: tuple[CameraPose, ...]
    target_center: Vec3
    target_radius: float
    scenario: SamplingScenario

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        if not self.poses:
            raise InvalidInputError("viewpoint set must contain at least one pose")
        if self.target_radius <= 0.0:
            raise InvalidInputError(f"target radius must be > 0, got {self.target_radius}")
        center = np.asarray(self.target_center, dtype=float)
        tol = LOOK_AT_TOLERANCE_FACTOR * self.target_radius
        for pose in self.poses:
            d = pose.look_direction()
            v = center - np.asarray(pose.translation)
            along = float(np.dot(v, d))
            miss = float(np.linalg.norm(v - along * d)) if along > 0 else float(np.linalg.norm(v))
            if miss > tol:
                raise InvalidInputError(
                    f"pose at {pose.translation} misses the target by {miss:.3f} m "
                    f"(tolerance {tol:.3f} m)")


def sample_viewpoints(scenario: SamplingScenario, n: int,
                      params: ScenarioParams | None = None,
                      seed: int = 0) -> ViewpointSet:
    """Generate n poses for a sampling scenario; deterministic per seed."""
    params = params or ScenarioParams()
    if n < 1:
        raise InvalidInputError(f"sample count must be >= 1, got {n}")
    if params.radius <= 0.0:
        raise InvalidInputError(f"radius must be > 0, got {params.radius}")
    if params.frame_rate_hz <= 0.0:
        raise InvalidInputError(f"frame rate must be > 0, got {params.frame_rate_hz}")
    scenario = SamplingScenario(scenario)
    if scenario is SamplingScenario.IDEAL:
        poses = _hemisphere_poses(n, params, seed, z_extent=1.0, jitter_deg=0.0)
    elif scenario is SamplingScenario.DISPERSE:
        z_extent = math.cos(math.radians(params.cap_angle_deg))
        poses = _hemisphere_poses(n, params, seed, z_extent=z_extent,
                                  jitter_deg=params.azimuth_jitter_deg)
    elif scenario is SamplingScenario.UNBOUNDED:
        line = ContributorLine("veh0", params.speed_mps, params.frame_rate_hz,
                               params.line_start, params.line_direction, count=n)
        poses = _line_poses(line, n, params)
    else:
        poses = _cooperative_poses(n, params)
    return ViewpointSet(poses=tuple(poses), target_center=params.target_center,
                        target_radius=params.radius, scenario=scenario)


def _hemisphere_poses(n: int, params: ScenarioParams, seed: int,
                      z_extent: float, jitter_deg: float) -> list[CameraPose]:
    """Fibonacci-spiral layout on the upper hemisphere, seed-perturbed."""
    rng = np.random.default_rng(seed)
    azimuth_offset = rng.uniform(0.0, 2.0 * math.pi)
    jitter = np.zeros(n)
    if jitter_deg > 0.0:
        jitter = rng.uniform(-math.radians(jitter_deg), math.radians(jitter_deg), size=n)
    center = np.asarray(params.target_center, dtype=float)
    r = params.radius
    poses = []
    for i in range(n):
        z = (i + 0.5) / n * z_extent
        az = azimuth_offset + i * GOLDEN_ANGLE + jitter[i]
        rho = math.sqrt(max(0.0, 1.0 - z * z))
        p = center + r * np.array([rho * math.cos(az), rho * math.sin(az), z])
        poses.append(look_at_pose(p, center, timestamp=i / params.frame_rate_hz,
                                  contributor_id="rig"))
    return poses


def _line_points(line: ContributorLine, n: int, params: ScenarioParams) -> np.ndarray:
    """Capture positions along a straight line with exact spacing speed/frame_rate."""
    fr = line.frame_rate_hz
    if fr <= 0.0 or line.speed_mps <= 0.0:
        raise InvalidInputError("line speed and frame rate must be > 0")
    spacing = line.speed_mps / fr
    d = np.asarray(line.direction, dtype=float)
    d_norm = np.linalg.norm(d)
    if d_norm < 1e-12:
        raise InvalidInputError("line direction must be nonzero")
    d = d / d_norm
    if line.start is not None:
        base = np.asarray(line.start, dtype=float)
        offsets = np.arange(n, dtype=float)
    else:
        # center the capture span on the line's closest approach to the target
        center = np.asarray(params.target_center, dtype=float)
        side = np.cross(d, np.array([0.0, 0.0, 1.0]))
        side_norm = np.linalg.norm(side)
        if side_norm < 1e-12:
            raise InvalidInputError("line direction must not be vertical")
        side = side / side_norm
        base = center + params.standoff_m * side
        base[2] = params.camera_height_m
        offsets = np.arange(n, dtype=float) - (n - 1) / 2.0
    return base[None, :] + (offsets * spacing)[:, None] * d[None, :]


def _line_poses(line: ContributorLine, n: int, params: ScenarioParams) -> list[CameraPose]:
    points = _line_points(line, n, params)
    center = np.asarray(params.target_center, dtype=float)
    return [look_at_pose(points[i], center, timestamp=i / line.frame_rate_hz,
                         contributor_id=line.contributor_id)
            for i in range(n)]


def default_cooperative_lines(k: int, speed_mps: float = 10.0,
                              frame_rate_hz: float = 2.0) -> tuple[ContributorLine, ...]:
    """k capture lines tangent to the target, evenly rotated in azimuth."""
    if k < 1:
        raise InvalidInputError(f"contributor count must be >= 1, got {k}")
    lines = []
    for j in range(k):
        theta = 2.0 * math.pi * j / k
        direction = (-math.sin(theta), math.cos(theta), 0.0)
        lines.append(ContributorLine(contributor_id=f"veh{j}", speed_mps=speed_mps,
                                     frame_rate_hz=frame_rate_hz, direction=direction))
    return tuple(lines)


def _cooperative_poses(n: int, params: ScenarioParams) -> list[CameraPose]:
    lines = params.contributors or default_cooperative_lines(
        2, params.speed_mps, params.frame_rate_hz)
    explicit = [ln.count for ln in lines if ln.count is not None]
    if explicit and len(explicit) == len(lines):
        if sum(explicit) != n:
            raise InvalidInputError(
                f"per-contributor counts sum to {sum(explicit)}, expected {n}")
        counts = list(explicit)
    else:
        base, extra = divmod(n, len(lines))
        counts = [base + (1 if j < extra else 0) for j in range(len(lines))]
    poses = []
    for line, count in zip(lines, counts):
        if count == 0:
            continue
        poses.extend(_line_poses(line, count, params))
    return poses


@dataclass(frozen=True)
class CoverageSummary:
    """Azimuthal coverage of a viewpoint set around its target."""

    coverage_fraction: float
    max_gap_deg: float
    distinct_views: int
    bins: int = 36


def azimuth_deg(position, center) -> float:
    """Azimuth of a position around a center, degrees in [0, 360)."""
    dx = position[0] - center[0]
    dy = position[1] - center[1]
    return math.degrees(math.atan2(dy, dx)) % 360.0


def coverage_metrics(vs: ViewpointSet, bins: int = 36) -> CoverageSummary:
    """Fraction of azimuth bins covered, largest uncovered arc, distinct views."""
    if bins < 1:
        raise InvalidInputError(f"bin count must be >= 1, got {bins}")
    bin_width = 360.0 / bins
    covered = sorted({int(azimuth_deg(p.translation, vs.target_center) // bin_width) % bins
                      for p in vs.poses})
    if len(covered) == bins:
        max_gap = 0.0
    else:
        gaps = []
        for a, b in zip(covered, covered[1:] + [covered[0] + bins]):
            gaps.append(b - a - 1)
        max_gap = max(gaps) * bin_width
    distinct = len({tuple(round(c, 6) for c in p.translation) for p in vs.poses})
    return CoverageSummary(coverage_fraction=len(covered) / bins,
                           max_gap_deg=max_gap, distinct_views=distinct, bins=bins)


def write_transforms_manifest(vs: ViewpointSet, path,
                              camera_angle_x: float = DEFAULT_CAMERA_ANGLE_X) -> Path:
    """Write the set as a JSON manifest of per-frame 4x4 pose matrices."""
    frames = []
    for i, pose in enumerate(vs.poses):
        M = compose_camera_matrix(pose)
        frames.append({
            "file_path": f"./images/frame_{i:04d}",
            "transform_matrix": [[float(v) for v in row] for row in M],
        })
    doc = {
        "camera_angle_x": float(camera_angle_x),
        "frame_count": len(frames),
        "frames": frames,
    }
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    return path


def read_transforms_manifest(path) -> tuple[float, list[tuple[str, np.ndarray]]]:
    """Read a manifest back as (camera_angle_x, [(file_path, 4x4 matrix), ...])."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    frames = [(f["file_path"], np.array(f["transform_matrix"], dtype=float))
              for f in doc["frames"]]
    return float(doc["camera_angle_x"]), frames
