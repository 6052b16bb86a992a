"""Planar geometry, regular grid deployments and ground-truth cell lookup.

Anchors sit on the vertices of a rectangular grid. Cells are indexed by
``(col, row)`` with ``col`` growing along +x and ``row`` along +y. Each cell has
a canonical corner labelling used throughout the package::

    A = (col, row+1)     B = (col+1, row+1)
    D = (col, row)       C = (col+1, row)

so A/D share ``x1``, B/C share ``x2``, A/B share ``y1`` and C/D share ``y2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from gridloc.errors import CellBoundsError, OutOfRegionError, UnknownAnchorError, ValidationError

Vertex = tuple[int, int]


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def distance_to(self, other: Point) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class GridCell:
    col: int
    row: int


@dataclass(frozen=True)
class GridSpec:
    origin: Point
    spacing_x: float
    spacing_y: float
    cols: int
    rows: int

    def __post_init__(self):
        if not (self.spacing_x > 0 and self.spacing_y > 0):
            raise ValidationError("grid spacing must be strictly positive")
        if not (math.isfinite(self.spacing_x) and math.isfinite(self.spacing_y)):
            raise ValidationError("grid spacing must be finite")
        if self.cols < 1 or self.rows < 1:
            raise ValidationError("grid needs at least one column and one row")

    @property
    def width(self) -> float:
        return self.cols * self.spacing_x

    @property
    def height(self) -> float:
        return self.rows * self.spacing_y

    @property
    def vertex_count(self) -> int:
        return (self.cols + 1) * (self.rows + 1)

    def vertices(self) -> list[Vertex]:
        return [(c, r) for r in range(self.rows + 1) for c in range(self.cols + 1)]

    def cells(self) -> list[GridCell]:
        return [GridCell(c, r) for r in range(self.rows) for c in range(self.cols)]

    def vertex_position(self, vertex: Vertex) -> Point:
        col, row = vertex
        return Point(self.origin.x + col * self.spacing_x, self.origin.y + row * self.spacing_y)

    def bounds(self) -> tuple[float, float, float, float]:
        """Region extent as ``(x_min, y_min, x_max, y_max)``."""
        return (
            self.origin.x,
            self.origin.y,
            self.origin.x + self.width,
            self.origin.y + self.height,
        )


@dataclass(frozen=True)
class CellCorners:
    x1: float
    x2: float
    y1: float
    y2: float

    def __post_init__(self):
        if self.x1 == self.x2 or self.y1 == self.y2:
            raise ValidationError("cell corners must span a non-degenerate rectangle")

    @property
    def a(self) -> Point:
        return Point(self.x1, self.y1)

    @property
    def b(self) -> Point:
        return Point(self.x2, self.y1)

    @property
    def c(self) -> Point:
        return Point(self.x2, self.y2)

    @property
    def d(self) -> Point:
        return Point(self.x1, self.y2)

    def centroid(self) -> Point:
        return Point((self.x1 + self.x2) / 2, (self.y1 + self.y2) / 2)


@dataclass(frozen=True)
class Deployment:
    """A grid plus the bijection between anchor ids and grid vertices."""

    grid: GridSpec
    anchors: Mapping[str, Vertex]
    _by_vertex: dict[Vertex, str] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        anchors = {str(k): (int(v[0]), int(v[1])) for k, v in self.anchors.items()}
        by_vertex: dict[Vertex, str] = {}
        for anchor_id, vertex in anchors.items():
            col, row = vertex
            if not (0 <= col <= self.grid.cols and 0 <= row <= self.grid.rows):
                raise ValidationError(f"anchor {anchor_id!r} vertex {vertex} outside the grid")
            if vertex in by_vertex:
                raise ValidationError(
                    f"anchors {by_vertex[vertex]!r} and {anchor_id!r} share vertex {vertex}"
                )
            by_vertex[vertex] = anchor_id
        if len(by_vertex) != self.grid.vertex_count:
            missing = sorted(set(self.grid.vertices()) - set(by_vertex))
            raise ValidationError(f"vertices without an anchor: {missing}")
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "_by_vertex", by_vertex)

    @classmethod
    def regular(cls, grid: GridSpec) -> Deployment:
        """Deployment with auto-generated ids ``a<col>_<row>`` on every vertex."""
        return cls(grid, {f"a{c}_{r}": (c, r) for c, r in grid.vertices()})

    def anchor_ids(self) -> list[str]:
        return sorted(self.anchors)

    def vertex_of(self, anchor_id: str) -> Vertex:
        try:
            return self.anchors[anchor_id]
        except KeyError:
            raise UnknownAnchorError(anchor_id) from None

    def anchor_at(self, vertex: Vertex) -> str:
        return self._by_vertex[vertex]

    def to_dict(self) -> dict[str, Any]:
        g = self.grid
        return {
            "origin": [g.origin.x, g.origin.y],
            "spacing_x": g.spacing_x,
            "spacing_y": g.spacing_y,
            "cols": g.cols,
            "rows": g.rows,
            "anchors": [
                {"id": a, "col": self.anchors[a][0], "row": self.anchors[a][1]}
                for a in self.anchor_ids()
            ],
        }


def anchor_position(deployment: Deployment, anchor_id: str) -> Point:
    return deployment.grid.vertex_position(deployment.vertex_of(anchor_id))


def cell_of_point(grid: GridSpec, p: Point) -> GridCell:
    """Cell containing ``p`` under half-open extents.

    Points on the maximal boundary of the region fall in the last cell of that
    axis, which makes the lookup total on the closed region.
    """
    x_min, y_min, x_max, y_max = grid.bounds()
    if not (x_min <= p.x <= x_max and y_min <= p.y <= y_max):
        raise OutOfRegionError(f"point ({p.x}, {p.y}) outside region [{x_min}, {x_max}] x [{y_min}, {y_max}]")
    col = min(int(math.floor((p.x - x_min) / grid.spacing_x)), grid.cols - 1)
    row = min(int(math.floor((p.y - y_min) / grid.spacing_y)), grid.rows - 1)
    return GridCell(col, row)


def cell_vertices(grid: GridSpec, cell: GridCell) -> tuple[Vertex, Vertex, Vertex, Vertex]:
    """Vertex indices of the corners in canonical A, B, C, D order."""
    if not (0 <= cell.col < grid.cols and 0 <= cell.row < grid.rows):
        raise CellBoundsError(f"cell ({cell.col}, {cell.row}) outside {grid.cols}x{grid.rows} grid")
    c, r = cell.col, cell.row
    return (c, r + 1), (c + 1, r + 1), (c + 1, r), (c, r)


def corners_of_cell(grid: GridSpec, cell: GridCell) -> tuple[CellCorners, tuple[Vertex, Vertex, Vertex, Vertex]]:
    """Corner coordinates of ``cell`` plus the A, B, C, D vertex indices."""
    verts = cell_vertices(grid, cell)
    a = grid.vertex_position(verts[0])
    c = grid.vertex_position(verts[2])
    return CellCorners(x1=a.x, x2=c.x, y1=a.y, y2=c.y), verts


def cell_of_vertices(grid: GridSpec, vertices) -> GridCell | None:
    """The cell whose four corners are exactly ``vertices``, if any."""
    vs = set(vertices)
    if len(vs) != 4:
        return None
    col = min(v[0] for v in vs)
    row = min(v[1] for v in vs)
    if not (0 <= col < grid.cols and 0 <= row < grid.rows):
        return None
    if vs == {(col, row), (col + 1, row), (col, row + 1), (col + 1, row + 1)}:
        return GridCell(col, row)
    return None


def deployment_from_dict(data: Mapping[str, Any]) -> Deployment:
    """Build a deployment from its JSON object form.

    Missing ``anchors`` means one auto-named anchor per vertex.
    """
    if not isinstance(data, Mapping):
        raise ValidationError("deployment: expected a JSON object")
    try:
        ox, oy = (float(v) for v in data.get("origin", (0.0, 0.0)))
    except (TypeError, ValueError):
        raise ValidationError("deployment.origin: expected [x, y]") from None
    fields = {}
    for key, kind in (("spacing_x", float), ("spacing_y", float), ("cols", int), ("rows", int)):
        if key not in data:
            raise ValidationError(f"deployment.{key}: missing")
        try:
            fields[key] = kind(data[key])
        except (TypeError, ValueError):
            raise ValidationError(f"deployment.{key}: expected {kind.__name__}, got {data[key]!r}") from None
    grid = GridSpec(origin=Point(ox, oy), **fields)
    raw = data.get("anchors")
    if raw is None:
        return Deployment.regular(grid)
    anchors = {}
    for i, entry in enumerate(raw):
        try:
            anchors[str(entry["id"])] = (int(entry["col"]), int(entry["row"]))
        except (KeyError, TypeError, ValueError):
            raise ValidationError(f"deployment.anchors[{i}]: expected {{id, col, row}}") from None
    if len(anchors) != len(raw):
        raise ValidationError("deployment.anchors: duplicate anchor id")
    return Deployment(grid, anchors)


def load_deployment(path: str | Path) -> Deployment:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return deployment_from_dict(data)
