"""Position error statistics, error-interval histograms, error surfaces and ranging profiles."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from gridloc.errors import ShapeError, ValidationError
from gridloc.geometry import Point
from gridloc.pipeline import Estimate
from gridloc.propagation import PathLossModel, distance_from_rss, rss_at_distance_noisy
from gridloc.simulator import substream

DEFAULT_BIN_EDGES = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
SKIPPED = -1.0


@dataclass(frozen=True)
class WindowError:
    window_id: int
    truth: Point
    estimate: Point
    error: float
    method: str


@dataclass(frozen=True)
class HistogramBin:
    lower: float
    upper: float  # math.inf for the open last bin
    count: int
    fraction: float


@dataclass
class ErrorReport:
    per_window: list[WindowError]
    skipped: list[int]
    histogram: list[HistogramBin]
    summary: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "summary": self.summary,
            "histogram": [
                {
                    "lower": b.lower,
                    "upper": None if math.isinf(b.upper) else b.upper,
                    "count": b.count,
                    "fraction": b.fraction,
                }
                for b in self.histogram
            ],
            "skipped_window_ids": list(self.skipped),
            "per_window": [
                {
                    "window_id": w.window_id,
                    "truth": [w.truth.x, w.truth.y],
                    "estimate": [w.estimate.x, w.estimate.y],
                    "error": w.error,
                    "method": w.method,
                }
                for w in self.per_window
            ],
        }


def position_error(truth: Point, estimate: Point) -> float:
    return math.hypot(truth.x - estimate.x, truth.y - estimate.y)


def _check_edges(bin_edges: Sequence[float]) -> list[float]:
    edges = [float(e) for e in bin_edges]
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValidationError(f"bin edges must be strictly ascending: {edges}")
    if edges and edges[0] <= 0:
        raise ValidationError("bin edges must be positive")
    return edges


def histogram(errors: Sequence[float], bin_edges: Sequence[float] = DEFAULT_BIN_EDGES) -> list[HistogramBin]:
    """Counts over (lower, upper] bins; the first bin starts at 0 inclusive."""
    edges = _check_edges(bin_edges)
    if not errors:
        return []
    counts = [0] * (len(edges) + 1)
    for e in errors:
        counts[bisect.bisect_left(edges, e)] += 1
    lowers = [0.0] + edges
    uppers = edges + [math.inf]
    n = len(errors)
    return [HistogramBin(lo, hi, c, c / n) for lo, hi, c in zip(lowers, uppers, counts)]


def _summary(errors: list[float], skipped: int) -> dict[str, Any]:
    if not errors:
        return {"count": 0, "skipped": skipped, "mean": None, "median": None, "p95": None, "max": None}
    arr = np.sort(np.asarray(errors))
    return {
        "count": len(errors),
        "skipped": skipped,
        "mean": math.fsum(errors) / len(errors),
        "median": float(np.median(arr)),
        "p95": float(np.percentile(arr, 95)),
        "max": float(arr[-1]),
    }


def _index_truth(truth_trace: Iterable[tuple[int, Point]]) -> dict[int, Point]:
    truth: dict[int, Point] = {}
    for wid, p in truth_trace:
        if wid in truth:
            raise ValidationError(f"duplicate window_id {wid} in truth")
        truth[wid] = p
    return truth


def _index_estimates(estimates: Iterable[Estimate]) -> dict[int, Estimate]:
    by_id: dict[int, Estimate] = {}
    for e in estimates:
        if e.window_id in by_id:
            raise ValidationError(f"duplicate window_id {e.window_id} in estimates")
        by_id[e.window_id] = e
    return by_id


def build_report(
    truth_trace: Iterable[tuple[int, Point]],
    estimates: Iterable[Estimate],
    bin_edges: Sequence[float] = DEFAULT_BIN_EDGES,
) -> ErrorReport:
    """Join estimates to truth by window id and summarize the errors.

    Truth windows without an estimate count as skipped. An estimate whose
    window id is absent from the truth is a join failure.
    """
    truth = _index_truth(truth_trace)
    by_id = _index_estimates(estimates)
    orphans = sorted(set(by_id) - set(truth))
    if orphans:
        raise ValidationError(f"estimates reference window ids missing from truth: {orphans}")
    rows, skipped = [], []
    for wid in sorted(truth):
        est = by_id.get(wid)
        if est is None:
            skipped.append(wid)
            continue
        rows.append(WindowError(wid, truth[wid], est.position, position_error(truth[wid], est.position), est.method.value))
    errors = [r.error for r in rows]
    return ErrorReport(rows, skipped, histogram(errors, bin_edges), _summary(errors, len(skipped)))


def error_surface(
    truth_trace: Sequence[tuple[int, Point]],
    estimates: Iterable[Estimate],
    nx: int,
    ny: int,
) -> list[list[float]]:
    """Per-point errors as ``ny`` rows of ``nx`` values, in sweep order.

    Skipped windows hold the sentinel -1.
    """
    if len(truth_trace) != nx * ny:
        raise ShapeError(f"{len(truth_trace)} truth points do not fill a {nx}x{ny} lattice")
    by_id = _index_estimates(estimates)
    flat = [
        position_error(p, by_id[wid].position) if wid in by_id else SKIPPED
        for wid, p in truth_trace
    ]
    return [flat[r * nx:(r + 1) * nx] for r in range(ny)]


def ranging_profile(
    model: PathLossModel,
    distances: Sequence[float],
    trials: int,
    seed: int,
) -> list[tuple[float, float]]:
    """Mean absolute ranging error at each distance under the model's shadowing."""
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    out = []
    for i, d in enumerate(distances):
        rng = substream(seed, i)
        rss = rss_at_distance_noisy(model, float(d), rng, size=trials)
        err = np.abs(distance_from_rss(model, rss) - d)
        out.append((float(d), float(np.mean(err))))
    return out
