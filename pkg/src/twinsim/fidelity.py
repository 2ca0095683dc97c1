"""PSNR/MSE math and the calibrated reconstruction-fidelity model.

The fidelity model is a lookup over measured (scenario, mask, image count)
PSNR points, scaled by a small compression penalty; it deliberately does
not extrapolate a parametric quality surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, InvalidInputError
from .geometry import SamplingScenario

# PSNR at the strongest tested compression (q=30) keeps at least this
# fraction of the uncompressed value.
MAX_COMPRESSION_PENALTY = 0.001


@dataclass(frozen=True, eq=False)
class ImageBuffer:
    """Flat intensity samples of one image; values lie in [0, levels-1]."""

    width: int
    height: int
    channels: int
    samples: np.ndarray
    levels: int = 256

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float).ravel())
        if self.width < 1 or self.height < 1 or self.channels < 1:
            raise InvalidInputError("image dimensions must be >= 1")
        if self.levels < 2:
            raise InvalidInputError(f"intensity levels must be >= 2, got {self.levels}")
        expected = self.width * self.height * self.channels
        if self.samples.size != expected:
            raise InvalidInputError(
                f"sample count {self.samples.size} does not match {expected}")
        if np.any(self.samples < 0.0) or np.any(self.samples > self.levels - 1):
            raise InvalidInputError(f"samples must lie in [0, {self.levels - 1}]")

    @classmethod
    def from_array(cls, array, levels: int = 256) -> "ImageBuffer":
        """Build from an (H, W) or (H, W, C) array."""
        a = np.asarray(array, dtype=float)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.ndim != 3:
            raise InvalidInputError(f"expected a 2D or 3D array, got shape {a.shape}")
        return cls(width=a.shape[1], height=a.shape[0], channels=a.shape[2],
                   samples=a.ravel(), levels=levels)

    def shape_key(self) -> tuple[int, int, int, int]:
        return (self.width, self.height, self.channels, self.levels)


def mse(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean squared error between two identically shaped buffers."""
    if a.shape_key() != b.shape_key():
        raise InvalidInputError(
            f"buffer shapes differ: {a.shape_key()} vs {b.shape_key()}")
    diff = a.samples - b.samples
    return float(np.mean(diff * diff))


def psnr(a: ImageBuffer, b: ImageBuffer) -> float:
    """Peak signal-to-noise ratio 10*log10((L-1)^2 / MSE) in dB.

    Identical buffers (MSE=0) return math.inf, the infinite-fidelity
    sentinel, rather than raising.
    """
    err = mse(a, b)
    if err == 0.0:
        return math.inf
    peak = float(a.levels - 1)
    return 10.0 * math.log10(peak * peak / err)


@dataclass(frozen=True)
class FidelityRecord:
    """One calibration point: measured PSNR of a reconstruction setup."""

    scenario: SamplingScenario
    mask: bool
    image_count: int
    psnr_db: float

    def __post_init__(self):
        if not (math.isfinite(self.psnr_db) and self.psnr_db > 0.0):
            raise InvalidInputError(f"calibration PSNR must be finite and > 0, "
                                    f"got {self.psnr_db}")
        if self.image_count < 1:
            raise InvalidInputError(f"image count must be >= 1, got {self.image_count}")


@dataclass(frozen=True)
class CalibrationTable:
    rows: tuple[FidelityRecord, ...]

    def __post_init__(self):
        if not self.rows:
            raise ConfigError("calibration table is empty")
        object.__setattr__(self, "rows", tuple(self.rows))


@lru_cache(maxsize=1)
def default_calibration() -> CalibrationTable:
    """The five shipped calibration rows."""
    with resources.files("twinsim").joinpath("data/calibration.csv").open("r") as fh:
        return _parse_calibration(fh.read())


def load_calibration_csv(path) -> CalibrationTable:
    return _parse_calibration(Path(path).read_text(encoding="utf-8"))


def _parse_calibration(text: str) -> CalibrationTable:
    rows = []
    lines = [ln for ln in text.splitlines() if ln.strip()]
    for line in lines[1:]:
        scenario, mask, count, value = line.split(",")
        rows.append(FidelityRecord(scenario=SamplingScenario(scenario.strip()),
                                   mask=mask.strip().lower() == "true",
                                   image_count=int(count),
                                   psnr_db=float(value)))
    return CalibrationTable(rows=tuple(rows))


def write_calibration_csv(table: CalibrationTable, path) -> Path:
    lines = ["scenario,mask,image_count,psnr_db"]
    for r in table.rows:
        lines.append(f"{r.scenario.value},{str(r.mask).lower()},{r.image_count},{r.psnr_db:g}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def predict_fidelity(scenario: SamplingScenario, mask: bool, image_count: int,
                     q: int, table: CalibrationTable | None = None) -> float:
    """Predicted reconstruction PSNR in dB for a capture and compression setup.

    Looks up the calibration row matching (scenario, mask), picking the
    nearest image count when several rows match, then applies the linear
    compression penalty (at most 0.1% at q=30). Cooperative captures fall
    back to the masked unbounded row until calibrated.
    """
    if table is None:
        table = default_calibration()
    if not (30 <= q <= 90):
        raise InvalidInputError(f"compression parameter must lie in [30, 90], got {q}")
    scenario = SamplingScenario(scenario)
    rows = [r for r in table.rows if r.scenario is scenario and r.mask == mask]
    if not rows and scenario is SamplingScenario.COOPERATIVE:
        rows = [r for r in table.rows
                if r.scenario is SamplingScenario.UNBOUNDED and r.mask]
    if not rows:
        raise InvalidInputError(
            f"no calibration row for scenario={scenario.value} mask={mask}")
    row = min(rows, key=lambda r: (abs(r.image_count - image_count), r.image_count))
    penalty = MAX_COMPRESSION_PENALTY * (90 - q) / 60.0
    return row.psnr_db * (1.0 - penalty)


def fidelity_drop(baseline_db: float, degraded_db: float) -> float:
    """Relative fidelity loss in percent: 100*(baseline-degraded)/baseline."""
    if not (math.isfinite(baseline_db) and baseline_db > 0.0):
        raise InvalidInputError(f"baseline PSNR must be > 0, got {baseline_db}")
    return 100.0 * (baseline_db - degraded_db) / baseline_db
