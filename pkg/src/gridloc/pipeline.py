"""Per-window estimator: partition, then refine, with memory across windows."""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from gridloc.errors import EmptyWindowError, InsufficientAnchorsError, ValidationError
from gridloc.geometry import Deployment, GridCell, Point, anchor_position, corners_of_cell
from gridloc.propagation import PathLossModel
from gridloc.refiner import ClampPolicy, clamp_to_cell, refine_from_rssi
from gridloc.resolver import (
    DEFAULT_NEAR_RADIUS_FRACTION,
    DEFAULT_WINDOW_SECONDS,
    Half,
    ResolutionKind,
    RssiWindow,
    TrackerMemory,
    resolve,
    weighted_centroid,
)


class Method(str, enum.Enum):
    REFINED = "refined"
    EDGE_PAIR = "edge-pair"
    NEAR_NODE = "near-node"
    CENTROID_BASELINE = "centroid-baseline"


_METHOD_OF_KIND = {
    ResolutionKind.EDGE_PAIR: Method.EDGE_PAIR,
    ResolutionKind.NEAR_NODE: Method.NEAR_NODE,
}


@dataclass(frozen=True)
class Estimate:
    window_id: int
    position: Point
    method: Method
    cell: GridCell | None = None
    side_hint: frozenset[Half] | None = None

    def __post_init__(self):
        if self.method is Method.REFINED and self.cell is None:
            raise ValueError("a refined estimate must carry its cell")


@dataclass(frozen=True)
class Skip:
    window_id: int
    reason: str


@dataclass(frozen=True)
class EstimatorConfig:
    window_seconds: float = DEFAULT_WINDOW_SECONDS
    near_radius_fraction: float = DEFAULT_NEAR_RADIUS_FRACTION
    clamp_policy: ClampPolicy = ClampPolicy.OFF
    baseline_enabled: bool = False

    def __post_init__(self):
        if not self.window_seconds > 0:
            raise ValidationError("window_seconds must be > 0")
        if not 0 < self.near_radius_fraction < 1:
            raise ValidationError("near_radius_fraction must lie in (0, 1)")
        object.__setattr__(self, "clamp_policy", ClampPolicy(self.clamp_policy))

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["clamp_policy"] = self.clamp_policy.value
        return d


@dataclass
class BatchResult:
    estimates: list[Estimate] = field(default_factory=list)
    skips: list[Skip] = field(default_factory=list)
    memory: TrackerMemory = field(default_factory=TrackerMemory)


def step(
    config: EstimatorConfig,
    deployment: Deployment,
    model: PathLossModel,
    memory: TrackerMemory,
    window: RssiWindow,
) -> Estimate:
    """Estimate the position for one window.

    Raises InsufficientAnchorsError when fewer than four anchors were heard;
    callers treat that as a skipped window.
    """
    res = resolve(window, deployment, model, memory, config.near_radius_fraction)
    if res.kind is not ResolutionKind.RECTANGLE:
        return Estimate(window.window_id, res.position_hint, _METHOD_OF_KIND[res.kind], res.cell)
    corners, _ = corners_of_cell(deployment.grid, res.cell)
    p = refine_from_rssi(model, corners, *res.corner_rssi)
    p = clamp_to_cell(p, corners, config.clamp_policy)
    return Estimate(window.window_id, p, Method.REFINED, res.cell, res.side_hint)


def centroid_baseline(deployment: Deployment, window: RssiWindow) -> Estimate:
    """Weighted centroid of every heard anchor, weights in linear power."""
    if not window.readings:
        raise EmptyWindowError(f"window {window.window_id}: no anchors heard")
    ids = sorted(window.readings)
    positions = [anchor_position(deployment, a) for a in ids]
    p = weighted_centroid(positions, [window.readings[a] for a in ids])
    return Estimate(window.window_id, p, Method.CENTROID_BASELINE)


def run_batch(
    config: EstimatorConfig,
    deployment: Deployment,
    model: PathLossModel,
    windows: Iterable[RssiWindow],
) -> BatchResult:
    """Fold the estimator over ordered windows with a single tracker memory."""
    result = BatchResult()
    for window in windows:
        try:
            for anchor_id in window.readings:
                deployment.vertex_of(anchor_id)
            if config.baseline_enabled:
                est = centroid_baseline(deployment, window)
            else:
                est = step(config, deployment, model, result.memory, window)
        except (InsufficientAnchorsError, EmptyWindowError) as exc:
            result.skips.append(Skip(window.window_id, str(exc)))
            continue
        result.estimates.append(est)
    return result


def config_from_dict(data: Mapping[str, Any]) -> EstimatorConfig:
    known = {"window_seconds", "near_radius_fraction", "clamp_policy", "baseline_enabled"}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"config: unknown keys {sorted(unknown)}")
    try:
        return EstimatorConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"config: {exc}") from None


def load_config(path: str | Path) -> EstimatorConfig:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return config_from_dict(data)
