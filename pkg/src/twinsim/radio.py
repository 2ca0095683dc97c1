"""5G downlink throughput model: area presets, path loss, heatmaps.

Base stations sit on a square grid keyed by inter-site distance; every
query associates with the nearest station and assumes all vehicles on a
station split its bandwidth equally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import InvalidInputError


class AreaClass(str, Enum):
    RURAL = "rural"
    SUBURBAN = "suburban"
    URBAN = "urban"


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle in meters."""

    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.xmin, self.ymin, self.xmax, self.ymax)):
            raise InvalidInputError("region bounds must be finite")
        if self.xmax <= self.xmin or self.ymax <= self.ymin:
            raise InvalidInputError(f"degenerate region {self}")

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    @property
    def center(self) -> tuple[float, float]:
        return ((self.xmin + self.xmax) / 2.0, (self.ymin + self.ymax) / 2.0)

    def contains(self, point, tol: float = 1e-9) -> bool:
        return (self.xmin - tol <= point[0] <= self.xmax + tol
                and self.ymin - tol <= point[1] <= self.ymax + tol)

    @classmethod
    def square(cls, side: float, center: tuple[float, float] = (0.0, 0.0)) -> "Rect":
        h = side / 2.0
        return cls(center[0] - h, center[1] - h, center[0] + h, center[1] + h)


@dataclass(frozen=True)
class AreaPreset:
    carrier_freq_ghz: float
    inter_site_distance_m: float
    path_loss_exponent: float
    bandwidth_mhz: float


# Carrier frequency and inter-site distance per area class; exponents and
# bandwidths are declared defaults, overridable per environment.
AREA_PRESETS: dict[AreaClass, AreaPreset] = {
    AreaClass.RURAL: AreaPreset(0.7, 2900.0, 2.6, 10.0),
    AreaClass.SUBURBAN: AreaPreset(1.8, 900.0, 3.0, 20.0),
    AreaClass.URBAN: AreaPreset(2.5, 440.0, 3.2, 40.0),
}

DEFAULT_TX_POWER_DBM = 40.0
DEFAULT_NOISE_FIGURE_DB = 7.0
DEFAULT_MIMO_STREAMS = 2
DEFAULT_SE_CAP_BPS_HZ = 7.8  # total cap across streams
MIN_PATH_DISTANCE_M = 10.0  # clamp before path-loss evaluation

_OVERRIDE_FIELDS = frozenset({
    "carrier_freq_ghz", "inter_site_distance_m", "mimo_streams", "bandwidth_mhz",
    "tx_power_dbm", "noise_figure_db", "path_loss_exponent", "se_cap_bps_hz",
    "stations",
})


@dataclass(frozen=True)
class RadioEnvironment:
    """Immutable radio environment; all queries are pure."""

    area: AreaClass
    carrier_freq_ghz: float
    inter_site_distance_m: float
    mimo_streams: int
    bandwidth_mhz: float
    tx_power_dbm: float
    noise_figure_db: float
    path_loss_exponent: float
    region: Rect
    stations: tuple[tuple[float, float], ...]
    se_cap_bps_hz: float = DEFAULT_SE_CAP_BPS_HZ

    def __post_init__(self):
        numeric = (self.carrier_freq_ghz, self.inter_site_distance_m, self.bandwidth_mhz,
                   self.tx_power_dbm, self.noise_figure_db, self.path_loss_exponent,
                   self.se_cap_bps_hz)
        if not all(math.isfinite(v) for v in numeric):
            raise InvalidInputError("radio parameters must be finite")
        if self.carrier_freq_ghz <= 0.0 or self.bandwidth_mhz <= 0.0:
            raise InvalidInputError("carrier frequency and bandwidth must be > 0")
        if self.inter_site_distance_m <= 0.0 or self.se_cap_bps_hz <= 0.0:
            raise InvalidInputError("inter-site distance and SE cap must be > 0")
        if int(self.mimo_streams) < 1:
            raise InvalidInputError(f"mimo_streams must be >= 1, got {self.mimo_streams}")
        if not self.stations:
            raise InvalidInputError("environment must contain at least one station")
        for st in self.stations:
            if not self.region.contains(st):
                raise InvalidInputError(f"station {st} lies outside the region")
        object.__setattr__(self, "stations", tuple((float(x), float(y))
                                                   for x, y in self.stations))

    @property
    def noise_floor_dbm(self) -> float:
        return -174.0 + 10.0 * math.log10(self.bandwidth_mhz * 1e6) + self.noise_figure_db

    def throughput_at(self, position, sharing_count: int = 1) -> float:
        return link_throughput(self, position, sharing_count)


def make_environment(area: AreaClass, region: Rect, **overrides) -> RadioEnvironment:
    """Preset environment for an area class with stations on a square grid.

    The grid has spacing inter_site_distance and is offset so one station
    sits at the region center; any preset parameter may be overridden by
    keyword.
    """
    area = AreaClass(area)
    unknown = set(overrides) - _OVERRIDE_FIELDS
    if unknown:
        raise InvalidInputError(f"unknown radio override(s): {sorted(unknown)}")
    preset = AREA_PRESETS[area]
    params = {
        "carrier_freq_ghz": preset.carrier_freq_ghz,
        "inter_site_distance_m": preset.inter_site_distance_m,
        "mimo_streams": DEFAULT_MIMO_STREAMS,
        "bandwidth_mhz": preset.bandwidth_mhz,
        "tx_power_dbm": DEFAULT_TX_POWER_DBM,
        "noise_figure_db": DEFAULT_NOISE_FIGURE_DB,
        "path_loss_exponent": preset.path_loss_exponent,
        "se_cap_bps_hz": DEFAULT_SE_CAP_BPS_HZ,
    }
    stations = overrides.pop("stations", None)
    for key, value in overrides.items():
        if not isinstance(value, (int, float)) or not math.isfinite(float(value)):
            raise InvalidInputError(f"override {key} must be a finite number, got {value!r}")
        params[key] = value
    if stations is None:
        stations = _grid_stations(region, params["inter_site_distance_m"])
    return RadioEnvironment(area=area, region=region,
                            stations=tuple(tuple(map(float, st)) for st in stations),
                            **params)


def _grid_stations(region: Rect, spacing: float) -> list[tuple[float, float]]:
    if spacing <= 0.0:
        raise InvalidInputError(f"inter-site distance must be > 0, got {spacing}")
    cx, cy = region.center
    imin = math.ceil((region.xmin - cx) / spacing - 1e-9)
    imax = math.floor((region.xmax - cx) / spacing + 1e-9)
    jmin = math.ceil((region.ymin - cy) / spacing - 1e-9)
    jmax = math.floor((region.ymax - cy) / spacing + 1e-9)
    return [(cx + i * spacing, cy + j * spacing)
            for j in range(jmin, jmax + 1)
            for i in range(imin, imax + 1)]


def path_loss(freq_ghz: float, distance_m: float, exponent: float) -> float:
    """Log-distance path loss in dB, referenced to free space at 1 km."""
    if not (math.isfinite(freq_ghz) and freq_ghz > 0.0):
        raise InvalidInputError(f"carrier frequency must be > 0 GHz, got {freq_ghz}")
    if not (math.isfinite(distance_m) and math.isfinite(exponent)):
        raise InvalidInputError("distance and exponent must be finite")
    d = max(distance_m, MIN_PATH_DISTANCE_M)
    fspl_1km = 32.44 + 20.0 * math.log10(freq_ghz * 1000.0)
    return fspl_1km + 10.0 * exponent * math.log10(d / 1000.0)


def nearest_station(env: RadioEnvironment, position) -> int:
    """Index of the nearest station; ties resolve to the lowest index."""
    pts = np.asarray(env.stations)
    pos = np.asarray(position, dtype=float)[:2]
    if not np.all(np.isfinite(pos)):
        raise InvalidInputError(f"position must be finite, got {position}")
    d2 = np.sum((pts - pos) ** 2, axis=1)
    return int(np.argmin(d2))


def link_throughput(env: RadioEnvironment, position, sharing_count: int = 1) -> float:
    """Equal-share downlink throughput in Mbps at a position.

    SNR comes from the nearest station's path loss against the thermal
    noise floor; spectral efficiency is ideal MIMO multiplexing capped at
    se_cap_bps_hz, and the station bandwidth is split evenly among
    sharing_count vehicles.
    """
    if sharing_count < 1 or int(sharing_count) != sharing_count:
        raise InvalidInputError(f"sharing count must be an integer >= 1, got {sharing_count}")
    idx = nearest_station(env, position)
    st = env.stations[idx]
    dist = math.hypot(position[0] - st[0], position[1] - st[1])
    pl = path_loss(env.carrier_freq_ghz, dist, env.path_loss_exponent)
    snr_db = env.tx_power_dbm - pl - env.noise_floor_dbm
    snr_lin = 10.0 ** (snr_db / 10.0)
    se = min(env.mimo_streams * math.log2(1.0 + snr_lin), env.se_cap_bps_hz)
    return se * env.bandwidth_mhz / sharing_count


@dataclass(frozen=True, eq=False)
class Heatmap:
    """Row-major grid of throughput samples over a region."""

    origin: tuple[float, float]
    cell_size: float
    rows: int
    cols: int
    values: np.ndarray  # shape (rows * cols,) Mbps

    def __post_init__(self):
        if self.rows * self.cols != self.values.size:
            raise InvalidInputError("heatmap grid shape does not match value count")
        if np.any(self.values < 0.0):
            raise InvalidInputError("throughput values must be >= 0")

    def grid(self) -> np.ndarray:
        return self.values.reshape(self.rows, self.cols)

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        return (self.origin[0] + (col + 0.5) * self.cell_size,
                self.origin[1] + (row + 0.5) * self.cell_size)


def heatmap(env: RadioEnvironment, cell_size: float, sharing_count: int = 1) -> Heatmap:
    """Sample link_throughput at each cell center of a regular grid."""
    if not (math.isfinite(cell_size) and cell_size > 0.0):
        raise InvalidInputError(f"cell size must be > 0, got {cell_size}")
    cols = max(1, math.ceil(env.region.width / cell_size - 1e-9))
    rows = max(1, math.ceil(env.region.height / cell_size - 1e-9))
    values = np.empty(rows * cols)
    for i in range(rows):
        y = env.region.ymin + (i + 0.5) * cell_size
        for j in range(cols):
            x = env.region.xmin + (j + 0.5) * cell_size
            values[i * cols + j] = link_throughput(env, (x, y), sharing_count)
    return Heatmap(origin=(env.region.xmin, env.region.ymin), cell_size=cell_size,
                   rows=rows, cols=cols, values=values)


def write_heatmap_csv(hm: Heatmap, path) -> Path:
    """CSV export: one `x,y,throughput_mbps` row per cell center, row-major."""
    lines = ["x,y,throughput_mbps"]
    for i in range(hm.rows):
        for j in range(hm.cols):
            x, y = hm.cell_center(i, j)
            lines.append(f"{x:.6f},{y:.6f},{hm.values[i * hm.cols + j]:.6f}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
