"""End-to-end simulation: capture timing, compression, offloading, reporting.

A run walks the four latency stages of twin reconstruction: crowdsourcing
the image set, per-image preprocessing, offloading the compressed payload
over the radio model while the vehicle moves, and the reconstruction job
itself. The total is reported next to the predicted fidelity so the
latency/fidelity tradeoff is visible per configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, SimulationTimeout
from .fidelity import CalibrationTable, predict_fidelity
from .geometry import (SamplingScenario, ScenarioParams, ViewpointSet,
                       default_cooperative_lines, sample_viewpoints)
from .mobility import VehicleTrajectory, associate, generate_path, position_at
from .radio import AreaClass, AREA_PRESETS, Rect, make_environment

BYTES_PER_MB = 1e6  # decimal megabytes throughout


@dataclass(frozen=True)
class CompressionProfile:
    """Compression setting plus the two measured payload-size anchors."""

    q: int = 90
    size_anchor_max_mb: float = 18.0  # payload at q=90
    size_anchor_min_mb: float = 6.0   # payload at q=30

    def __post_init__(self):
        if not (30 <= self.q <= 90):
            raise InvalidInputError(f"compression parameter must lie in [30, 90], got {self.q}")
        if not (self.size_anchor_max_mb > self.size_anchor_min_mb > 0.0):
            raise InvalidInputError(
                f"size anchors must satisfy max > min > 0, got "
                f"({self.size_anchor_max_mb}, {self.size_anchor_min_mb})")


def compressed_size(profile: CompressionProfile, q: int) -> float:
    """Compressed payload size in MB, log-linear between the two anchors."""
    if not (isinstance(q, (int, float)) and math.isfinite(q) and 30 <= q <= 90):
        raise InvalidInputError(f"compression parameter must lie in [30, 90], got {q}")
    span = (90.0 - q) / 60.0
    if span == 0.0:
        return profile.size_anchor_max_mb
    if span == 1.0:
        return profile.size_anchor_min_mb
    ratio = profile.size_anchor_min_mb / profile.size_anchor_max_mb
    return profile.size_anchor_max_mb * ratio ** span


@dataclass(frozen=True)
class StageLatencies:
    """Configured wall-clock costs of the reconstruction pipeline stages."""

    t_induce_per_image_s: float = 0.05
    t_segment_per_image_s: float = 0.15
    t_reconstruct_base_s: float = 30.0

    def __post_init__(self):
        for name, v in (("induce", self.t_induce_per_image_s),
                        ("segment", self.t_segment_per_image_s),
                        ("reconstruct", self.t_reconstruct_base_s)):
            if v < 0.0 or not math.isfinite(v):
                raise InvalidInputError(f"{name} latency must be >= 0, got {v}")


@dataclass(frozen=True)
class OffloadTask:
    """One payload upload; remaining_bytes counts down during simulation."""

    vehicle_id: str
    total_bytes: float
    remaining_bytes: float
    start_time: float = 0.0
    finish_time: float | None = None

    def __post_init__(self):
        if not (0.0 <= self.remaining_bytes <= self.total_bytes):
            raise InvalidInputError(
                f"remaining bytes must lie in [0, total], got "
                f"{self.remaining_bytes} of {self.total_bytes}")
        if self.finish_time is not None and self.remaining_bytes != 0.0:
            raise InvalidInputError("finish_time set on an unfinished task")


@dataclass(frozen=True)
class SyncReport:
    """Per-stage latencies, total, and predicted fidelity of one run."""

    t_crowdsource_s: float
    t_preprocess_s: float
    t_offload_s: float
    t_reconstruct_s: float
    t_total_s: float
    predicted_psnr_db: float
    scenario: SamplingScenario
    compression_q: int

    def __post_init__(self):
        parts = (self.t_crowdsource_s, self.t_preprocess_s,
                 self.t_offload_s, self.t_reconstruct_s)
        if any(p < 0.0 or not math.isfinite(p) for p in parts):
            raise InvalidInputError("stage latencies must be finite and >= 0")
        if abs(self.t_total_s - sum(parts)) > 1e-9:
            raise InvalidInputError(
                f"total {self.t_total_s} does not equal the component sum {sum(parts)}")


def crowdsource_time(vs: ViewpointSet, contributors=None, frame_rate_hz: float = 2.0,
                     arrival_tolerance_m: float = 1.0) -> float:
    """Seconds until the last required viewpoint is captured.

    Hemisphere scenarios use the stationary multi-view rig abstraction
    (n / frame_rate). Line scenarios span (count-1)/frame_rate per
    contributor, offset by when that contributor's trajectory first comes
    within arrival_tolerance_m of its first capture point (offset 0 when
    no trajectories are supplied).
    """
    if frame_rate_hz <= 0.0:
        raise InvalidInputError(f"frame rate must be > 0, got {frame_rate_hz}")
    n = len(vs.poses)
    if vs.scenario in (SamplingScenario.IDEAL, SamplingScenario.DISPERSE):
        return n / frame_rate_hz
    groups: dict[str, list] = {}
    for pose in vs.poses:
        groups.setdefault(pose.contributor_id, []).append(pose)
    by_id = {}
    if contributors is not None:
        by_id = {traj.vehicle_id: traj for traj in contributors}
    spans = []
    for cid, poses in groups.items():
        first = min(poses, key=lambda p: p.timestamp)
        arrival = 0.0
        if by_id:
            if cid not in by_id:
                raise InvalidInputError(f"no trajectory supplied for contributor {cid!r}")
            arrival = _arrival_time(by_id[cid], first.translation[:2], arrival_tolerance_m)
        spans.append(arrival + (len(poses) - 1) / frame_rate_hz)
    return max(spans)


def _arrival_time(traj: VehicleTrajectory, point, tolerance_m: float) -> float:
    """First time the trajectory passes within tolerance of a 2D point."""
    target = np.asarray(point, dtype=float)
    prev_t, prev_p = traj.samples[0]
    prev = np.asarray(prev_p)
    if np.linalg.norm(prev - target) <= tolerance_m:
        return prev_t
    for t, p in traj.samples[1:]:
        cur = np.asarray(p)
        seg = cur - prev
        seg_len2 = float(np.dot(seg, seg))
        if seg_len2 > 0.0:
            u = float(np.clip(np.dot(target - prev, seg) / seg_len2, 0.0, 1.0))
            closest = prev + u * seg
            if np.linalg.norm(closest - target) <= tolerance_m:
                return prev_t + u * (t - prev_t)
        prev_t, prev = t, cur
    raise SimulationTimeout(
        f"contributor {traj.vehicle_id!r} never reaches its first capture point "
        f"(tolerance {tolerance_m} m) within the trajectory span")


def simulate_offload(task: OffloadTask, vehicle: VehicleTrajectory, env,
                     background_load=None, timestep_s: float = 0.01,
                     horizon_s: float = 3600.0) -> tuple[float, OffloadTask]:
    """Integrate the upload over the vehicle's motion; returns (latency, task).

    Each step uses the throughput at the vehicle's current position with
    sharing = background_load[serving station] + 1; the final step is
    shortened exactly so transferred bytes equal the payload.
    """
    if timestep_s <= 0.0:
        raise InvalidInputError(f"timestep must be > 0, got {timestep_s}")
    if task.remaining_bytes != task.total_bytes:
        raise InvalidInputError("task must be unstarted (remaining == total)")
    n_stations = len(env.stations)
    if background_load is None:
        load = [0] * n_stations
    elif isinstance(background_load, int):
        load = [background_load] * n_stations
    else:
        load = list(background_load)
        if len(load) != n_stations:
            raise InvalidInputError(
                f"background load has {len(load)} entries for {n_stations} stations")
    if any(v < 0 for v in load):
        raise InvalidInputError("background load counts must be >= 0")

    if task.total_bytes == 0.0:
        done = replace(task, remaining_bytes=0.0, finish_time=task.start_time)
        return 0.0, done
    remaining = task.total_bytes
    step = 0
    while True:
        elapsed = step * timestep_s
        if elapsed >= horizon_s:
            raise SimulationTimeout(
                f"offload horizon {horizon_s} s exceeded with {remaining:.0f} bytes left",
                remaining_bytes=remaining)
        t = task.start_time + elapsed
        pos = position_at(vehicle, t)
        station = associate(pos, env)
        rate_bps = env.throughput_at(pos, load[station] + 1) * 1e6 / 8.0
        if rate_bps > 0.0:
            chunk = rate_bps * timestep_s
            if chunk >= remaining:
                latency = elapsed + remaining / rate_bps
                done = replace(task, remaining_bytes=0.0,
                               finish_time=task.start_time + latency)
                return latency, done
            remaining -= chunk
        step += 1


@dataclass(frozen=True)
class EndToEndConfig:
    """Full scenario configuration of one deterministic run."""

    scenario: SamplingScenario = SamplingScenario.UNBOUNDED
    n_images: int = 45
    mask: bool = True
    frame_rate_hz: float = 2.0
    area: AreaClass = AreaClass.URBAN
    region: Rect | None = None  # None: square of side 2 * inter-site distance
    seed: int = 1
    compression: CompressionProfile = CompressionProfile()
    stages: StageLatencies = StageLatencies()
    t_compress_per_image_s: float = 0.02
    speed_range: tuple[float, float] = (8.0, 16.0)
    timestep_s: float = 0.01
    horizon_s: float = 600.0
    path_sample_step_s: float = 1.0
    background_load: int = 0
    vehicle_count: int = 1
    scenario_params: ScenarioParams | None = None
    radio_overrides: dict = field(default_factory=dict)
    calibration: CalibrationTable | None = None

    def __post_init__(self):
        if self.n_images < 1:
            raise InvalidInputError(f"image count must be >= 1, got {self.n_images}")
        if self.vehicle_count < 1:
            raise InvalidInputError(f"vehicle count must be >= 1, got {self.vehicle_count}")
        if self.t_compress_per_image_s < 0.0:
            raise InvalidInputError("compression time must be >= 0")


def default_region(area: AreaClass) -> Rect:
    return Rect.square(2.0 * AREA_PRESETS[AreaClass(area)].inter_site_distance_m)


def run_end_to_end(cfg: EndToEndConfig) -> SyncReport:
    """Simulate the full capture-to-reconstruction pipeline for one config."""
    params = cfg.scenario_params
    if params is None:
        contributors = None
        if cfg.scenario is SamplingScenario.COOPERATIVE:
            contributors = default_cooperative_lines(cfg.vehicle_count,
                                                     frame_rate_hz=cfg.frame_rate_hz)
        params = ScenarioParams(frame_rate_hz=cfg.frame_rate_hz, contributors=contributors)
    vs = sample_viewpoints(cfg.scenario, cfg.n_images, params, seed=cfg.seed)
    t_crowd = crowdsource_time(vs, frame_rate_hz=cfg.frame_rate_hz)

    per_image = (cfg.stages.t_induce_per_image_s + cfg.stages.t_segment_per_image_s
                 + cfg.t_compress_per_image_s)
    t_pre = cfg.n_images * per_image

    region = cfg.region or default_region(cfg.area)
    env = make_environment(cfg.area, region, **cfg.radio_overrides)
    vehicle = generate_path(cfg.seed, region, cfg.speed_range, duration=cfg.horizon_s,
                            timestep=cfg.path_sample_step_s)
    payload = compressed_size(cfg.compression, cfg.compression.q) * BYTES_PER_MB
    task = OffloadTask(vehicle_id=vehicle.vehicle_id, total_bytes=payload,
                       remaining_bytes=payload)
    t_off, _ = simulate_offload(task, vehicle, env, background_load=cfg.background_load,
                                timestep_s=cfg.timestep_s, horizon_s=cfg.horizon_s)

    t_rec = cfg.stages.t_reconstruct_base_s
    psnr_db = predict_fidelity(cfg.scenario, cfg.mask, cfg.n_images,
                               cfg.compression.q, table=cfg.calibration)
    total = t_crowd + t_pre + t_off + t_rec
    return SyncReport(t_crowdsource_s=t_crowd, t_preprocess_s=t_pre, t_offload_s=t_off,
                      t_reconstruct_s=t_rec, t_total_s=total, predicted_psnr_db=psnr_db,
                      scenario=cfg.scenario, compression_q=cfg.compression.q)


def write_sync_reports_csv(rows, path) -> Path:
    """CSV export of (seed, SyncReport) pairs, 6 decimal places."""
    lines = ["scenario,q,seed,t_crowdsource,t_preprocess,t_offload,t_reconstruct,t_total,psnr_db"]
    for seed, r in rows:
        lines.append(f"{r.scenario.value},{r.compression_q},{seed},"
                     f"{r.t_crowdsource_s:.6f},{r.t_preprocess_s:.6f},{r.t_offload_s:.6f},"
                     f"{r.t_reconstruct_s:.6f},{r.t_total_s:.6f},{r.predicted_psnr_db:.6f}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
