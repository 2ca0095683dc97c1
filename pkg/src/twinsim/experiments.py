"""Experiment runners producing the CSV artifacts of each case study.

Every experiment is a pure function of its configuration: identical
configs produce byte-identical outputs, and sweep rows are assembled in
(area, q, seed) order.
"""

from __future__ import annotations

import statistics
from pathlib import Path

from .config import ExperimentConfig, ExperimentKind
from .errors import InvalidInputError
from .fidelity import (CalibrationTable, default_calibration, fidelity_drop,
                       load_calibration_csv, predict_fidelity)
from .geometry import SamplingScenario
from .mobility import generate_path
from .pipeline import (CompressionProfile, EndToEndConfig, OffloadTask,
                       StageLatencies, compressed_size, run_end_to_end,
                       simulate_offload, write_sync_reports_csv)
from .radio import AREA_PRESETS, AreaClass, Rect, heatmap, make_environment, write_heatmap_csv

_RADIO_KEYS = ("tx_power_dbm", "noise_figure_db", "bandwidth_mhz", "path_loss_exponent",
               "carrier_freq_ghz", "inter_site_distance_m", "mimo_streams", "se_cap_bps_hz")

DEFAULT_IMAGE_COUNTS = {
    SamplingScenario.IDEAL: 100,
    SamplingScenario.DISPERSE: 25,
    SamplingScenario.UNBOUNDED: 45,
    SamplingScenario.COOPERATIVE: 45,
}


def _radio_overrides(config: ExperimentConfig) -> dict:
    return {k: v for k, v in config.overrides.items() if k in _RADIO_KEYS}


def _region(config: ExperimentConfig, area: AreaClass) -> Rect:
    side = config.overrides.get(
        "region_size_m",
        2.0 * config.overrides.get("inter_site_distance_m",
                                   AREA_PRESETS[area].inter_site_distance_m))
    return Rect.square(side)


def _calibration(config: ExperimentConfig) -> CalibrationTable:
    path = config.overrides.get("calibration_path")
    return load_calibration_csv(path) if path else default_calibration()


def _compression(config: ExperimentConfig, q: int) -> CompressionProfile:
    return CompressionProfile(
        q=q,
        size_anchor_max_mb=config.overrides.get("size_max_mb", 18.0),
        size_anchor_min_mb=config.overrides.get("size_min_mb", 6.0))


def run_experiment(config: ExperimentConfig) -> list[Path]:
    """Run one experiment; returns the paths of the files written."""
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if config.experiment is ExperimentKind.HEATMAP:
        return _run_heatmap(config, out)
    if config.experiment is ExperimentKind.FIDELITY_TABLE:
        return _run_fidelity_table(config, out)
    if config.experiment is ExperimentKind.TRADEOFF_SWEEP:
        return _run_tradeoff_sweep(config, out)
    if config.experiment is ExperimentKind.END_TO_END:
        return _run_end_to_end(config, out)
    raise InvalidInputError(f"unknown experiment kind {config.experiment!r}")


def _run_heatmap(config: ExperimentConfig, out: Path) -> list[Path]:
    ov = config.overrides
    paths = []
    for area in AreaClass:
        region = _region(config, area)
        env = make_environment(area, region, **_radio_overrides(config))
        cell = ov.get("cell_size_m", region.width / 50.0)
        hm = heatmap(env, cell, sharing_count=ov.get("sharing_count", 1))
        paths.append(write_heatmap_csv(hm, out / f"heatmap_{area.value}.csv"))
    return paths


def _run_fidelity_table(config: ExperimentConfig, out: Path) -> list[Path]:
    table = _calibration(config)
    lines = ["scenario,mask,image_count,psnr_db"]
    for r in table.rows:
        lines.append(f"{r.scenario.value},{str(r.mask).lower()},{r.image_count},{r.psnr_db:g}")
    table_path = out / "fidelity_table.csv"
    table_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    def masked_row(scenario):
        rows = [r for r in table.rows if r.scenario is scenario and r.mask]
        return rows[0] if rows else None

    degraded = masked_row(SamplingScenario.UNBOUNDED)
    drop_lines = ["comparison,baseline_psnr_db,degraded_psnr_db,drop_percent"]
    if degraded is not None:
        for name, scenario in (("unbounded_vs_ideal", SamplingScenario.IDEAL),
                               ("unbounded_vs_disperse", SamplingScenario.DISPERSE)):
            base = masked_row(scenario)
            if base is None:
                continue
            drop = fidelity_drop(base.psnr_db, degraded.psnr_db)
            drop_lines.append(f"{name},{base.psnr_db:g},{degraded.psnr_db:g},{drop:.6f}")
    drops_path = out / "fidelity_drops.csv"
    drops_path.write_text("\n".join(drop_lines) + "\n", encoding="utf-8")
    return [table_path, drops_path]


def _offload_latency(config: ExperimentConfig, env, traj, payload_mb: float) -> float:
    ov = config.overrides
    payload = payload_mb * 1e6
    task = OffloadTask(vehicle_id=traj.vehicle_id, total_bytes=payload,
                       remaining_bytes=payload)
    latency, _ = simulate_offload(
        task, traj, env,
        background_load=ov.get("background_load", 0),
        timestep_s=ov.get("timestep_s", 0.01),
        horizon_s=ov.get("horizon_s", 600.0))
    return latency


def _run_tradeoff_sweep(config: ExperimentConfig, out: Path) -> list[Path]:
    ov = config.overrides
    table = _calibration(config)
    n_images = ov.get("n_images", DEFAULT_IMAGE_COUNTS[config.scenario])
    mask = ov.get("mask", True)
    speed_range = (ov.get("speed_min_mps", 8.0), ov.get("speed_max_mps", 16.0))
    qs = sorted(set(config.q_values))
    lines = ["area,q,size_mb,latency_mean_s,latency_min_s,latency_max_s,psnr_db"]
    for area in AreaClass:
        region = _region(config, area)
        env = make_environment(area, region, **_radio_overrides(config))
        latencies: dict[int, list[float]] = {q: [] for q in qs}
        for seed in config.seeds:
            traj = generate_path(seed, region, speed_range,
                                 duration=ov.get("horizon_s", 600.0),
                                 timestep=ov.get("path_sample_step_s", 1.0))
            for q in qs:
                size_mb = compressed_size(_compression(config, q), q)
                latencies[q].append(_offload_latency(config, env, traj, size_mb))
        for q in qs:
            size_mb = compressed_size(_compression(config, q), q)
            vals = latencies[q]
            psnr_db = predict_fidelity(config.scenario, mask, n_images, q, table=table)
            lines.append(f"{area.value},{q},{size_mb:.6f},{statistics.fmean(vals):.6f},"
                         f"{min(vals):.6f},{max(vals):.6f},{psnr_db:.6f}")
    path = out / "tradeoff_sweep.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [path]


def _run_end_to_end(config: ExperimentConfig, out: Path) -> list[Path]:
    ov = config.overrides
    table = _calibration(config)
    n_images = ov.get("n_images", DEFAULT_IMAGE_COUNTS[config.scenario])
    stages = StageLatencies(
        t_induce_per_image_s=ov.get("t_induce_s", 0.05),
        t_segment_per_image_s=ov.get("t_segment_s", 0.15),
        t_reconstruct_base_s=ov.get("t_reconstruct_s", 30.0))
    rows = []
    for q in sorted(set(config.q_values)):
        for seed in config.seeds:
            cfg = EndToEndConfig(
                scenario=config.scenario,
                n_images=n_images,
                mask=ov.get("mask", True),
                frame_rate_hz=ov.get("frame_rate_hz", 2.0),
                area=config.area,
                region=Rect.square(ov["region_size_m"]) if "region_size_m" in ov else None,
                seed=seed,
                compression=_compression(config, q),
                stages=stages,
                t_compress_per_image_s=ov.get("t_compress_s", 0.02),
                speed_range=(ov.get("speed_min_mps", 8.0), ov.get("speed_max_mps", 16.0)),
                timestep_s=ov.get("timestep_s", 0.01),
                horizon_s=ov.get("horizon_s", 600.0),
                path_sample_step_s=ov.get("path_sample_step_s", 1.0),
                background_load=ov.get("background_load", 0),
                vehicle_count=config.vehicle_count,
                radio_overrides=_radio_overrides(config),
                calibration=table)
            rows.append((seed, run_end_to_end(cfg)))
    return [write_sync_reports_csv(rows, out / "end_to_end.csv")]
