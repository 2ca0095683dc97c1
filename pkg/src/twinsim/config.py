"""Experiment configuration files: TOML schema, parsing, validation."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .errors import ConfigError
from .geometry import SamplingScenario
from .radio import AreaClass


class ExperimentKind(str, Enum):
    HEATMAP = "heatmap"
    FIDELITY_TABLE = "fidelity_table"
    TRADEOFF_SWEEP = "tradeoff_sweep"
    END_TO_END = "end_to_end"


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding, anchored to a config file line."""

    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentKind
    area: AreaClass = AreaClass.URBAN
    scenario: SamplingScenario = SamplingScenario.UNBOUNDED
    q_values: tuple[int, ...] = (90,)
    seeds: tuple[int, ...] = (1,)
    vehicle_count: int = 1
    output_dir: str = "out"
    overrides: dict = field(default_factory=dict)


_TOP_LEVEL_KEYS = {"experiment", "area", "scenario", "q_values", "seeds",
                   "vehicle_count", "output_dir", "overrides"}

# override key -> (accepted types, must be > 0)
_OVERRIDE_KEYS: dict[str, tuple[tuple, bool]] = {
    # radio
    "tx_power_dbm": ((int, float), False),
    "noise_figure_db": ((int, float), False),
    "bandwidth_mhz": ((int, float), True),
    "path_loss_exponent": ((int, float), False),
    "carrier_freq_ghz": ((int, float), True),
    "inter_site_distance_m": ((int, float), True),
    "mimo_streams": ((int,), True),
    "se_cap_bps_hz": ((int, float), True),
    # region and heatmap
    "region_size_m": ((int, float), True),
    "cell_size_m": ((int, float), True),
    "sharing_count": ((int,), True),
    # offload integration
    "background_load": ((int,), False),
    "timestep_s": ((int, float), True),
    "horizon_s": ((int, float), True),
    "speed_min_mps": ((int, float), True),
    "speed_max_mps": ((int, float), True),
    "path_sample_step_s": ((int, float), True),
    # pipeline stages and compression anchors
    "frame_rate_hz": ((int, float), True),
    "n_images": ((int,), True),
    "mask": ((bool,), False),
    "t_induce_s": ((int, float), False),
    "t_segment_s": ((int, float), False),
    "t_compress_s": ((int, float), False),
    "t_reconstruct_s": ((int, float), False),
    "size_max_mb": ((int, float), True),
    "size_min_mb": ((int, float), True),
    # fidelity calibration
    "calibration_path": ((str,), False),
    # viewpoint geometry
    "radius_m": ((int, float), True),
    "cap_angle_deg": ((int, float), True),
    "standoff_m": ((int, float), True),
    "camera_height_m": ((int, float), True),
}


def _key_line(text: str, key: str) -> int:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for i, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return i
    return 1


def validate_config(path) -> tuple[ExperimentConfig | None, list[Diagnostic]]:
    """Parse and fully validate a config file.

    Returns (config, []) on success or (None, diagnostics) listing every
    violation with its line number. Unreadable paths raise OSError.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        return None, [Diagnostic(int(m.group(1)) if m else 1, f"TOML parse error: {exc}")]

    diags: list[Diagnostic] = []

    def report(key: str, message: str):
        diags.append(Diagnostic(_key_line(text, key), message))

    for key in raw:
        if key not in _TOP_LEVEL_KEYS:
            report(key, f"unknown key {key!r} (allowed: {sorted(_TOP_LEVEL_KEYS)})")

    if "experiment" not in raw:
        diags.append(Diagnostic(1, "missing required key 'experiment'"))
    kind = None
    if isinstance(raw.get("experiment"), str):
        try:
            kind = ExperimentKind(raw["experiment"])
        except ValueError:
            report("experiment", f"experiment must be one of "
                   f"{[k.value for k in ExperimentKind]}, got {raw['experiment']!r}")
    elif "experiment" in raw:
        report("experiment", "experiment must be a string")

    area = AreaClass.URBAN
    if "area" in raw:
        try:
            area = AreaClass(raw["area"])
        except ValueError:
            report("area", f"area must be one of {[a.value for a in AreaClass]}, "
                   f"got {raw['area']!r}")

    scenario = SamplingScenario.UNBOUNDED
    if "scenario" in raw:
        try:
            scenario = SamplingScenario(raw["scenario"])
        except ValueError:
            report("scenario", f"scenario must be one of "
                   f"{[s.value for s in SamplingScenario]}, got {raw['scenario']!r}")

    q_values = raw.get("q_values", [90])
    if not isinstance(q_values, list) or not q_values:
        report("q_values", "q_values must be a non-empty list of integers")
        q_values = [90]
    else:
        for i, q in enumerate(q_values):
            if not isinstance(q, int) or isinstance(q, bool):
                report("q_values", f"q_values[{i}] must be an integer, got {q!r}")
            elif not (30 <= q <= 90):
                report("q_values", f"q_values[{i}] = {q} outside allowed range [30, 90]")

    seeds = raw.get("seeds", [1])
    if not isinstance(seeds, list) or not seeds:
        report("seeds", "seeds must be a non-empty list of integers")
        seeds = [1]
    else:
        for i, s in enumerate(seeds):
            if not isinstance(s, int) or isinstance(s, bool):
                report("seeds", f"seeds[{i}] must be an integer, got {s!r}")

    vehicle_count = raw.get("vehicle_count", 1)
    if not isinstance(vehicle_count, int) or isinstance(vehicle_count, bool) \
            or vehicle_count < 1:
        report("vehicle_count", f"vehicle_count must be an integer >= 1, "
               f"got {vehicle_count!r}")
        vehicle_count = 1

    output_dir = raw.get("output_dir", "out")
    if not isinstance(output_dir, str):
        report("output_dir", "output_dir must be a string")
        output_dir = "out"

    overrides = raw.get("overrides", {})
    if not isinstance(overrides, dict):
        report("overrides", "overrides must be a table")
        overrides = {}
    else:
        for key, value in overrides.items():
            if key not in _OVERRIDE_KEYS:
                report(key, f"unknown override {key!r}")
                continue
            types, positive = _OVERRIDE_KEYS[key]
            if isinstance(value, bool) and bool not in types:
                report(key, f"override {key} must have type "
                       f"{'/'.join(t.__name__ for t in types)}, got bool")
            elif not isinstance(value, types):
                report(key, f"override {key} must have type "
                       f"{'/'.join(t.__name__ for t in types)}, got {type(value).__name__}")
            elif isinstance(value, (int, float)) and not isinstance(value, bool):
                if not math.isfinite(float(value)):
                    report(key, f"override {key} must be finite, got {value!r}")
                elif positive and value <= 0:
                    report(key, f"override {key} must be > 0, got {value!r}")
        if "speed_min_mps" in overrides and "speed_max_mps" in overrides:
            lo, hi = overrides["speed_min_mps"], overrides["speed_max_mps"]
            if isinstance(lo, (int, float)) and isinstance(hi, (int, float)) and lo > hi:
                report("speed_min_mps", f"speed_min_mps {lo} exceeds speed_max_mps {hi}")

    if diags or kind is None:
        return None, diags
    config = ExperimentConfig(experiment=kind, area=area, scenario=scenario,
                              q_values=tuple(q_values), seeds=tuple(seeds),
                              vehicle_count=vehicle_count, output_dir=output_dir,
                              overrides=dict(overrides))
    return config, []


def load_config(path) -> ExperimentConfig:
    """validate_config that raises ConfigError instead of returning diagnostics."""
    config, diags = validate_config(path)
    if config is None:
        summary = "; ".join(str(d) for d in diags) or "invalid configuration"
        raise ConfigError(f"{path}: {summary}", diagnostics=diags)
    return config
