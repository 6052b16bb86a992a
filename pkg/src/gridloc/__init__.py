"""Grid-partition plus closed-form refinement localization for RSSI sensor networks."""

from gridloc.geometry import (
    CellCorners,
    Deployment,
    GridCell,
    GridSpec,
    Point,
    anchor_position,
    cell_of_point,
    corners_of_cell,
)
from gridloc.pipeline import Estimate, EstimatorConfig, run_batch, step
from gridloc.propagation import PathLossModel, distance_from_rss, rss_at_distance

__version__ = "0.1.0"

__all__ = [
    "CellCorners",
    "Deployment",
    "Estimate",
    "EstimatorConfig",
    "GridCell",
    "GridSpec",
    "PathLossModel",
    "Point",
    "anchor_position",
    "cell_of_point",
    "corners_of_cell",
    "distance_from_rss",
    "rss_at_distance",
    "run_batch",
    "step",
]
