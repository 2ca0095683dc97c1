"""Contributor selection baselines and road-topology viewpoint generators.

These are explicit baselines for quantifying how viewpoint availability
varies with road topology and how much a selection policy can recover;
none of them is a tuned or learned policy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import InvalidInputError
from .geometry import (CameraPose, SamplingScenario, ViewpointSet, azimuth_deg,
                       look_at_pose)

COVERAGE_BINS = 36
SIDE_SECTORS_DEG = ((60.0, 120.0), (240.0, 300.0))


class SelectionPolicy(str, Enum):
    ALL = "all"
    RANDOM_K = "random_k"
    GREEDY_COVERAGE = "greedy_coverage"


class RoadTopology(str, Enum):
    HIGHWAY = "highway"
    INTERSECTION = "intersection"
    ROUNDABOUT = "roundabout"


@dataclass(frozen=True)
class Candidate:
    """A contributor offering a planned viewpoint set and an uplink estimate."""

    contributor_id: str
    viewpoints: ViewpointSet
    estimated_offload_rate_mbps: float = 0.0


@dataclass(frozen=True)
class TopologyScenario:
    """Viewpoint-availability profile of a road layout."""

    kind: RoadTopology
    side_view_probability: float
    occlusion_probability: float

    def __post_init__(self):
        for name, p in (("side_view", self.side_view_probability),
                        ("occlusion", self.occlusion_probability)):
            if not (0.0 <= p <= 1.0):
                raise InvalidInputError(f"{name} probability must lie in [0, 1], got {p}")


HIGHWAY = TopologyScenario(RoadTopology.HIGHWAY, side_view_probability=0.1,
                           occlusion_probability=0.1)
INTERSECTION = TopologyScenario(RoadTopology.INTERSECTION, side_view_probability=0.5,
                                occlusion_probability=0.2)
ROUNDABOUT = TopologyScenario(RoadTopology.ROUNDABOUT, side_view_probability=0.5,
                              occlusion_probability=0.5)

TOPOLOGY_PRESETS = {RoadTopology.HIGHWAY: HIGHWAY,
                    RoadTopology.INTERSECTION: INTERSECTION,
                    RoadTopology.ROUNDABOUT: ROUNDABOUT}


def _covered_bins(sets, bins: int = COVERAGE_BINS) -> set[int]:
    width = 360.0 / bins
    covered: set[int] = set()
    for vs in sets:
        for pose in vs.poses:
            covered.add(int(azimuth_deg(pose.translation, vs.target_center) // width) % bins)
    return covered


def union_coverage_fraction(candidates, bins: int = COVERAGE_BINS) -> float:
    """Azimuthal coverage of the union of the candidates' viewpoint sets."""
    return len(_covered_bins([c.viewpoints for c in candidates], bins)) / bins


def greedy_coverage_order(candidates, k: int,
                          bins: int = COVERAGE_BINS) -> tuple[list, list[int]]:
    """Greedy max-coverage selection; returns (selected, marginal bin gains)."""
    chosen: list = []
    covered: set[int] = set()
    remaining = list(candidates)
    gains = []
    for _ in range(k):
        best = None
        best_gain = -1
        for cand in remaining:
            gain = len(covered | _covered_bins([cand.viewpoints], bins)) - len(covered)
            if gain > best_gain or (gain == best_gain
                                    and cand.contributor_id < best.contributor_id):
                best, best_gain = cand, gain
        chosen.append(best)
        gains.append(best_gain)
        covered |= _covered_bins([best.viewpoints], bins)
        remaining.remove(best)
    return chosen, gains


def select_contributors(candidates, k: int, policy: SelectionPolicy,
                        seed: int = 0) -> list[Candidate]:
    """Pick a contributor subset; deterministic per (inputs, seed).

    All returns every candidate (k ignored); RandomK draws a seeded
    uniform k-subset; GreedyCoverage adds the candidate with the largest
    marginal azimuthal-coverage gain, breaking ties on the lowest
    contributor_id.
    """
    candidates = list(candidates)
    policy = SelectionPolicy(policy)
    if policy is SelectionPolicy.ALL:
        return candidates
    if k < 0 or k > len(candidates):
        raise InvalidInputError(
            f"selection size {k} must lie in [0, {len(candidates)}]")
    if k == 0:
        return []
    if policy is SelectionPolicy.RANDOM_K:
        rng = np.random.default_rng(seed)
        idx = sorted(rng.choice(len(candidates), size=k, replace=False).tolist())
        return [candidates[i] for i in idx]
    chosen, _ = greedy_coverage_order(candidates, k)
    return chosen


def generate_topology_viewpoints(scenario: TopologyScenario, n: int, seed: int = 0,
                                 target_center=(0.0, 0.0, 0.0), radius: float = 4.0) -> ViewpointSet:
    """Sample n surviving poses whose azimuths reflect a road topology.

    Side-sector azimuths (broadside views of the target) occur with
    probability side_view_probability; each draw is independently occluded
    with occlusion_probability and resampled until n poses survive.
    """
    if n < 1:
        raise InvalidInputError(f"sample count must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    center = np.asarray(target_center, dtype=float)
    poses: list[CameraPose] = []
    while len(poses) < n:
        if rng.random() < scenario.side_view_probability:
            lo, hi = SIDE_SECTORS_DEG[0] if rng.random() < 0.5 else SIDE_SECTORS_DEG[1]
            az = rng.uniform(lo, hi)
        else:
            # complement of the side sectors, measure 240 degrees
            w = rng.uniform(0.0, 240.0)
            if w < 60.0:
                az = w
            elif w < 180.0:
                az = 120.0 + (w - 60.0)
            else:
                az = 300.0 + (w - 180.0)
        elevation = rng.uniform(10.0, 60.0)
        if rng.random() < scenario.occlusion_probability:
            continue  # occluded draw, resample
        az_r, el_r = math.radians(az), math.radians(elevation)
        p = center + radius * np.array([math.cos(el_r) * math.cos(az_r),
                                        math.cos(el_r) * math.sin(az_r),
                                        math.sin(el_r)])
        poses.append(look_at_pose(p, center, timestamp=float(len(poses)),
                                  contributor_id=scenario.kind.value))
    return ViewpointSet(poses=tuple(poses),
                        target_center=tuple(float(c) for c in center),
                        target_radius=radius, scenario=SamplingScenario.COOPERATIVE)


def is_side_view(pose: CameraPose, target_center) -> bool:
    az = azimuth_deg(pose.translation, target_center)
    return any(lo <= az < hi for lo, hi in SIDE_SECTORS_DEG)


def write_selection_report_csv(rows, path) -> Path:
    """CSV export `policy,k,selected_ids,union_coverage_fraction`.

    Each row is (policy, k, selected candidates); ids are ';'-joined.
    """
    lines = ["policy,k,selected_ids,union_coverage_fraction"]
    for policy, k, selected in rows:
        ids = ";".join(c.contributor_id for c in selected)
        frac = union_coverage_fraction(selected) if selected else 0.0
        lines.append(f"{SelectionPolicy(policy).value},{k},{ids},{frac:.6f}")
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
