"""Seeded scenario engine: truth positions and the RSSI windows they produce.

Every (window, anchor) pair draws its shadowing noise from its own Philox
stream keyed by ``(seed, window_id, anchor_key)``. Values therefore do not
depend on anchor iteration order and windows can be generated in any order.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from gridloc.errors import ValidationError
from gridloc.geometry import Deployment, Point, deployment_from_dict
from gridloc.propagation import PathLossModel, load_model, model_from_dict, rss_at_distance_noisy
from gridloc.resolver import RssiWindow

MIN_DISTANCE = 0.01
SCENARIO_PRESETS = ("paper-iv",)


@dataclass(frozen=True)
class Sweep:
    nx: int
    ny: int
    margin: float = 0.0

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValidationError("sweep counts must be >= 1")
        if self.margin < 0:
            raise ValidationError("sweep margin must be >= 0")


@dataclass(frozen=True)
class Waypoints:
    points: tuple[Point, ...]
    speed: float

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValidationError("waypoint motion needs at least two points")
        if not self.speed > 0:
            raise ValidationError("waypoint speed must be > 0")


@dataclass(frozen=True)
class Scenario:
    deployment: Deployment
    model: PathLossModel
    seed: int
    motion: Sweep | Waypoints
    window_seconds: float = 0.2
    samples_per_window: int = 8

    def __post_init__(self):
        if self.samples_per_window < 1:
            raise ValidationError("samples_per_window must be >= 1")
        if not self.window_seconds > 0:
            raise ValidationError("window_seconds must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")

    def with_seed(self, seed: int) -> Scenario:
        return Scenario(self.deployment, self.model, seed, self.motion, self.window_seconds, self.samples_per_window)

    def with_model(self, model: PathLossModel) -> Scenario:
        return Scenario(self.deployment, model, self.seed, self.motion, self.window_seconds, self.samples_per_window)

    def to_dict(self) -> dict[str, Any]:
        if isinstance(self.motion, Sweep):
            motion = {"sweep": {"nx": self.motion.nx, "ny": self.motion.ny, "margin": self.motion.margin}}
        else:
            motion = {
                "waypoints": {
                    "points": [[p.x, p.y] for p in self.motion.points],
                    "speed": self.motion.speed,
                }
            }
        return {
            "deployment": self.deployment.to_dict(),
            "model": self.model.to_dict(),
            "seed": self.seed,
            "motion": motion,
            "window_seconds": self.window_seconds,
            "samples_per_window": self.samples_per_window,
        }


TruthTrace = list[tuple[int, Point]]


def sweep_points(region: tuple[float, float, float, float], nx: int, ny: int, margin: float = 0.0) -> list[Point]:
    """Row-major ``nx`` by ``ny`` lattice over the region inset by ``margin``.

    ``region`` is ``(x_min, y_min, x_max, y_max)``. A count of one puts the
    single coordinate at the center of that axis.
    """
    if nx < 1 or ny < 1:
        raise ValidationError("lattice counts must be >= 1")
    x_min, y_min, x_max, y_max = region
    x_lo, x_hi = x_min + margin, x_max - margin
    y_lo, y_hi = y_min + margin, y_max - margin
    if x_lo > x_hi or y_lo > y_hi:
        raise ValidationError(f"margin {margin} leaves an empty lattice")

    def axis(lo, hi, k):
        return [(lo + hi) / 2] if k == 1 else np.linspace(lo, hi, k).tolist()

    xs, ys = axis(x_lo, x_hi, nx), axis(y_lo, y_hi, ny)
    return [Point(x, y) for y in ys for x in xs]


def waypoint_positions(waypoints: Sequence[Point], speed: float, window_seconds: float) -> TruthTrace:
    """Constant-speed walk along the polyline, one sample per window."""
    if len(waypoints) < 2:
        raise ValidationError("need at least two waypoints")
    if not speed > 0 or not window_seconds > 0:
        raise ValidationError("speed and window duration must be > 0")
    seg_len = [a.distance_to(b) for a, b in zip(waypoints, waypoints[1:])]
    total = math.fsum(seg_len)
    if total == 0:
        raise ValidationError("waypoint path has zero length")
    step_len = speed * window_seconds
    count = int(math.floor(total / step_len + 1e-9)) + 1
    trace: TruthTrace = []
    seg, seg_start = 0, 0.0
    for k in range(count):
        s = min(k * step_len, total)
        while seg < len(seg_len) - 1 and s > seg_start + seg_len[seg] + 1e-12:
            seg_start += seg_len[seg]
            seg += 1
        a, b = waypoints[seg], waypoints[seg + 1]
        t = 0.0 if seg_len[seg] == 0 else min(max((s - seg_start) / seg_len[seg], 0.0), 1.0)
        trace.append((k, Point(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))))
    return trace


def anchor_key(anchor_id: str) -> int:
    return int.from_bytes(hashlib.blake2b(anchor_id.encode(), digest_size=8).digest(), "little")


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the given integer key path under ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def truth_trace(scenario: Scenario) -> TruthTrace:
    motion = scenario.motion
    if isinstance(motion, Sweep):
        pts = sweep_points(scenario.deployment.grid.bounds(), motion.nx, motion.ny, motion.margin)
        return list(enumerate(pts))
    return waypoint_positions(motion.points, motion.speed, scenario.window_seconds)


def simulate_window(scenario: Scenario, window_id: int, truth: Point) -> RssiWindow:
    dep = scenario.deployment
    readings = {}
    for anchor_id in dep.anchor_ids():
        pos = dep.grid.vertex_position(dep.vertex_of(anchor_id))
        d = max(truth.distance_to(pos), MIN_DISTANCE)
        rng = substream(scenario.seed, window_id, anchor_key(anchor_id))
        draws = rss_at_distance_noisy(scenario.model, d, rng, size=scenario.samples_per_window)
        readings[anchor_id] = math.fsum(draws.tolist()) / scenario.samples_per_window
    return RssiWindow(window_id, readings)


def run(scenario: Scenario) -> tuple[TruthTrace, list[RssiWindow]]:
    trace = truth_trace(scenario)
    return trace, [simulate_window(scenario, wid, p) for wid, p in trace]


def _motion_from_dict(data: Any):
    if not isinstance(data, Mapping) or len(data) != 1:
        raise ValidationError('scenario.motion: expected {"sweep": {...}} or {"waypoints": {...}}')
    (tag, body), = data.items()
    try:
        if tag == "sweep":
            return Sweep(int(body["nx"]), int(body["ny"]), float(body.get("margin", 0.0)))
        if tag == "waypoints":
            pts = tuple(Point(float(x), float(y)) for x, y in body["points"])
            return Waypoints(pts, float(body["speed"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"scenario.motion.{tag}: {exc}") from None
    raise ValidationError(f"scenario.motion: unknown kind {tag!r}")


def scenario_from_dict(data: Mapping[str, Any]) -> Scenario:
    if not isinstance(data, Mapping):
        raise ValidationError("scenario: expected a JSON object")
    for key in ("deployment", "model", "seed", "motion"):
        if key not in data:
            raise ValidationError(f"scenario.{key}: missing")
    model = data["model"]
    model = load_model(model) if isinstance(model, str) else model_from_dict(model)
    try:
        seed = int(data["seed"])
        window_seconds = float(data.get("window_seconds", 0.2))
        samples = int(data.get("samples_per_window", 8))
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"scenario: {exc}") from None
    return Scenario(
        deployment=deployment_from_dict(data["deployment"]),
        model=model,
        seed=seed,
        motion=_motion_from_dict(data["motion"]),
        window_seconds=window_seconds,
        samples_per_window=samples,
    )


def preset_scenario(name: str) -> Scenario:
    if name not in SCENARIO_PRESETS:
        raise ValidationError(f"unknown scenario preset {name!r}; choose from {', '.join(SCENARIO_PRESETS)}")
    return scenario_from_dict(json.loads(resources.files("gridloc.presets").joinpath(f"{name}.json").read_text()))


def load_scenario(spec: str | Path) -> Scenario:
    """Scenario from a preset name or a JSON file path."""
    if str(spec) in SCENARIO_PRESETS:
        return preset_scenario(str(spec))
    path = Path(spec)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return scenario_from_dict(data)

