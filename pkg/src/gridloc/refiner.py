"""Closed-form position refinement inside a resolved cell.

Each axis has two right-triangle equations, one per pair of corners sharing
the other axis coordinate. Under ranging noise the two usually disagree, so
each is solved on its own and the two solutions are averaged.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from gridloc.errors import DegenerateCellError, ValidationError
from gridloc.geometry import CellCorners, Point
from gridloc.propagation import PathLossModel, distance_from_rss


class ClampPolicy(str, enum.Enum):
    OFF = "off"
    CLAMP = "clamp"


@dataclass(frozen=True)
class CornerDistances:
    """Ranged distances to corners A, B, C, D."""

    d1: float
    d2: float
    d3: float
    d4: float

    def __post_init__(self):
        for name in ("d1", "d2", "d3", "d4"):
            v = getattr(self, name)
            if not (v > 0 and v < float("inf")):
                raise ValidationError(f"{name} must be positive and finite, got {v}")


def refine(corners: CellCorners, d: CornerDistances) -> Point:
    x1, x2, y1, y2 = corners.x1, corners.x2, corners.y1, corners.y2
    if x1 == x2 or y1 == y2:
        raise DegenerateCellError("cell has zero extent along one axis")
    s1, s2, s3, s4 = d.d1**2, d.d2**2, d.d3**2, d.d4**2
    x = 0.5 * (x1 + x2 - ((s1 + s4) - (s2 + s3)) / (2.0 * (x1 - x2)))
    y = 0.5 * (y1 + y2 - ((s1 + s2) - (s3 + s4)) / (2.0 * (y1 - y2)))
    return Point(float(x), float(y))


def refine_from_rssi(
    model: PathLossModel,
    corners: CellCorners,
    rssi_a: float,
    rssi_b: float,
    rssi_c: float,
    rssi_d: float,
) -> Point:
    dist = [float(distance_from_rss(model, r)) for r in (rssi_a, rssi_b, rssi_c, rssi_d)]
    return refine(corners, CornerDistances(*dist))


def clamp_to_cell(p: Point, corners: CellCorners, policy: ClampPolicy | str = ClampPolicy.OFF) -> Point:
    if ClampPolicy(policy) is ClampPolicy.OFF:
        return p
    x_lo, x_hi = sorted((corners.x1, corners.x2))
    y_lo, y_hi = sorted((corners.y1, corners.y2))
    return Point(min(max(p.x, x_lo), x_hi), min(max(p.y, y_lo), y_hi))
