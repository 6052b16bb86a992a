"""Partition phase: from one window of averaged RSSI to a grid cell.

The four strongest anchors normally sit on the corners of the cell holding the
blind node. When they do not, the node is either crossing between cells (edge
pair) or sitting close to one anchor (near node), and a coarse position is
produced instead of a cell.
"""

from __future__ import annotations

import enum
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

from gridloc.errors import EmptyWindowError, InsufficientAnchorsError, ValidationError
from gridloc.geometry import (
    CellCorners,
    Deployment,
    GridCell,
    Point,
    anchor_position,
    cell_of_vertices,
    corners_of_cell,
)
from gridloc.propagation import PathLossModel, distance_from_rss

DEFAULT_WINDOW_SECONDS = 0.2
DEFAULT_NEAR_RADIUS_FRACTION = 0.25


class Half(str, enum.Enum):
    X1 = "x1-half"
    X2 = "x2-half"
    Y1 = "y1-half"
    Y2 = "y2-half"
    CENTER = "center"


class ResolutionKind(str, enum.Enum):
    RECTANGLE = "rectangle"
    EDGE_PAIR = "edge-pair"
    NEAR_NODE = "near-node"


@dataclass(frozen=True)
class RssiWindow:
    window_id: int
    readings: Mapping[str, float]

    def __post_init__(self):
        readings = {str(k): float(v) for k, v in self.readings.items()}
        for anchor_id, rssi in readings.items():
            if not math.isfinite(rssi):
                raise ValidationError(f"window {self.window_id}: non-finite rssi for {anchor_id!r}")
        object.__setattr__(self, "readings", readings)


@dataclass(frozen=True)
class QuadSelection:
    """The four strongest (anchor_id, rssi) pairs, strongest first."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if len(self.entries) != 4:
            raise ValueError("a quad selection has exactly four entries")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(a for a, _ in self.entries)

    def rssi_of(self) -> dict[str, float]:
        return dict(self.entries)


@dataclass(frozen=True)
class CellResolution:
    kind: ResolutionKind
    cell: GridCell | None = None
    position_hint: Point | None = None
    side_hint: frozenset[Half] | None = None
    corner_rssi: tuple[float, float, float, float] | None = None  # A, B, C, D when kind is RECTANGLE


@dataclass
class TrackerMemory:
    """Last cell resolved as a clean rectangle; one instance per blind node."""

    last_cell: GridCell | None = None


@dataclass(frozen=True)
class Rectangle:
    cell: GridCell


@dataclass(frozen=True)
class Degenerate:
    pass


def average_window(
    samples: Iterable[tuple[str, float, float]],
    window: float = DEFAULT_WINDOW_SECONDS,
    window_id: int = 0,
) -> RssiWindow:
    """Per-anchor mean of raw ``(anchor_id, rssi, timestamp)`` samples."""
    if window <= 0:
        raise ValidationError("window duration must be positive")
    samples = list(samples)
    if not samples:
        raise EmptyWindowError(f"window {window_id}: no samples")
    stamps = [t for _, _, t in samples]
    if max(stamps) - min(stamps) > window + 1e-9:
        raise ValidationError(
            f"window {window_id}: samples span {max(stamps) - min(stamps):.3f} s, longer than {window} s"
        )
    per_anchor: dict[str, list[float]] = defaultdict(list)
    for anchor_id, rssi, _ in samples:
        per_anchor[str(anchor_id)].append(float(rssi))
    return RssiWindow(window_id, {a: math.fsum(v) / len(v) for a, v in per_anchor.items()})


def select_top4(window: RssiWindow) -> QuadSelection:
    if len(window.readings) < 4:
        raise InsufficientAnchorsError(
            f"window {window.window_id}: {len(window.readings)} anchors heard, need 4"
        )
    ranked = sorted(window.readings.items(), key=lambda kv: (-kv[1], kv[0]))
    return QuadSelection(tuple(ranked[:4]))


def classify_quad(selection: QuadSelection, deployment: Deployment) -> Rectangle | Degenerate:
    vertices = [deployment.vertex_of(a) for a in selection.ids]
    cell = cell_of_vertices(deployment.grid, vertices)
    return Rectangle(cell) if cell is not None else Degenerate()


def side_test(corners: CellCorners, rssi_a: float, rssi_b: float, rssi_c: float, rssi_d: float) -> frozenset[Half]:
    """Which half (or quadrant) of the cell the strongest corners point to.

    Only comparisons are used. An empty set means the comparisons were mixed
    and no half could be singled out.
    """
    del corners  # the canonical labelling already fixes which corner is which
    halves = set()
    if rssi_a > rssi_b and rssi_d > rssi_c:
        halves.add(Half.X1)
    elif rssi_b > rssi_a and rssi_c > rssi_d:
        halves.add(Half.X2)
    if rssi_a > rssi_d and rssi_b > rssi_c:
        halves.add(Half.Y1)
    elif rssi_d > rssi_a and rssi_c > rssi_b:
        halves.add(Half.Y2)
    if not halves and rssi_a == rssi_b == rssi_c == rssi_d:
        halves.add(Half.CENTER)
    return frozenset(halves)


def _best_pairing(selection: QuadSelection) -> tuple[tuple[str, str], tuple[str, str]]:
    rssi = selection.rssi_of()
    p, q, r, s = sorted(selection.ids)
    candidates = [((p, q), (r, s)), ((p, r), (q, s)), ((p, s), (q, r))]

    def cost(pairing):
        return sum(abs(rssi[u] - rssi[v]) for u, v in pairing)

    # enumeration order already breaks ties toward the smallest id pair
    return min(candidates, key=cost)


def weighted_centroid(positions: list[Point], rssis: list[float]) -> Point:
    top = max(rssis)
    weights = [10.0 ** ((r - top) / 10.0) for r in rssis]
    total = math.fsum(weights)
    x = math.fsum(w * p.x for w, p in zip(weights, positions)) / total
    y = math.fsum(w * p.y for w, p in zip(weights, positions)) / total
    return Point(x, y)


def _edge_pair_position(selection: QuadSelection, deployment: Deployment) -> Point:
    grid = deployment.grid
    xs: list[float] = []
    ys: list[float] = []
    for u, v in _best_pairing(selection):
        (cu, ru), (cv, rv) = deployment.vertex_of(u), deployment.vertex_of(v)
        pu, pv = anchor_position(deployment, u), anchor_position(deployment, v)
        if cu == cv and abs(ru - rv) == 1:
            xs.append(pu.x)
            ys.append((pu.y + pv.y) / 2)
        elif ru == rv and abs(cu - cv) == 1:
            ys.append(pu.y)
            xs.append((pu.x + pv.x) / 2)
    if not xs:
        positions = [grid.vertex_position(deployment.vertex_of(a)) for a in selection.ids]
        return weighted_centroid(positions, [r for _, r in selection.entries])
    return Point(math.fsum(xs) / len(xs), math.fsum(ys) / len(ys))


def resolve_degenerate(
    selection: QuadSelection,
    deployment: Deployment,
    model: PathLossModel,
    memory: TrackerMemory,
    near_radius_fraction: float = DEFAULT_NEAR_RADIUS_FRACTION,
) -> CellResolution:
    """Coarse position when the four strongest anchors do not bound one cell.

    Near node: the strongest anchor ranges within
    ``near_radius_fraction`` of the smaller spacing. The estimate sits on the
    circle of that radius, on the side facing the last known cell.

    Edge pair: the four anchors are split into the two pairs with the smallest
    total RSSI difference. A pair forming a grid edge fixes the coordinate it
    shares and puts the other coordinate at its midpoint; contributions of both
    pairs are averaged per axis. With no edge among the pairs the weighted
    centroid of the four anchors is used.
    """
    grid = deployment.grid
    strongest, top_rssi = selection.entries[0]
    r = float(distance_from_rss(model, top_rssi))
    if r <= near_radius_fraction * min(grid.spacing_x, grid.spacing_y):
        anchor = anchor_position(deployment, strongest)
        if memory.last_cell is None:
            return CellResolution(ResolutionKind.NEAR_NODE, position_hint=anchor)
        target = corners_of_cell(grid, memory.last_cell)[0].centroid()
        dx, dy = target.x - anchor.x, target.y - anchor.y
        norm = math.hypot(dx, dy)
        hint = Point(anchor.x + r * dx / norm, anchor.y + r * dy / norm)
        return CellResolution(ResolutionKind.NEAR_NODE, cell=memory.last_cell, position_hint=hint)
    return CellResolution(ResolutionKind.EDGE_PAIR, position_hint=_edge_pair_position(selection, deployment))


def resolve(
    window: RssiWindow,
    deployment: Deployment,
    model: PathLossModel,
    memory: TrackerMemory,
    near_radius_fraction: float = DEFAULT_NEAR_RADIUS_FRACTION,
) -> CellResolution:
    """Run the partition phase on one window, updating ``memory`` on success."""
    selection = select_top4(window)
    verdict = classify_quad(selection, deployment)
    if isinstance(verdict, Degenerate):
        return resolve_degenerate(selection, deployment, model, memory, near_radius_fraction)
    corners, verts = corners_of_cell(deployment.grid, verdict.cell)
    rssi = selection.rssi_of()
    corner_rssi = tuple(rssi[deployment.anchor_at(v)] for v in verts)
    memory.last_cell = verdict.cell
    return CellResolution(
        ResolutionKind.RECTANGLE,
        cell=verdict.cell,
        side_hint=side_test(corners, *corner_rssi),
        corner_rssi=corner_rssi,
    )


def format_side_hint(hint: frozenset[Half] | None) -> str:
    if not hint:
        return ""
    return "+".join(sorted(h.value for h in hint))
