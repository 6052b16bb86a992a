import math

import pytest

from gridloc.geometry import Deployment, GridSpec, Point
from gridloc.propagation import PathLossModel
from gridloc.simulator import preset_scenario

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def grid2x2():
    return GridSpec(Point(0.0, 0.0), 4.0, 4.0, 2, 2)


@pytest.fixture(scope="session")
def deployment(grid2x2):
    return Deployment.regular(grid2x2)


@pytest.fixture(scope="session")
def model():
    return PathLossModel(a_ref=-45.0, n=2.0, sigma=0.0)


@pytest.fixture(scope="session")
def paper_iv():
    return preset_scenario("paper-iv")


@pytest.fixture
def acceptance_line():
    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


def noiseless_window(deployment, model, p, window_id=0, only=None):
    """Exact model RSS from every anchor (or the ``only`` subset) at point ``p``."""
    from gridloc.geometry import anchor_position
    from gridloc.propagation import rss_at_distance
    from gridloc.resolver import RssiWindow

    ids = only if only is not None else deployment.anchor_ids()
    return RssiWindow(
        window_id,
        {a: float(rss_at_distance(model, max(anchor_position(deployment, a).distance_to(p), 0.01))) for a in ids},
    )


def four_nearest_form_cell(grid, p, gap=1e-6):
    """Brute-force oracle: the four nearest vertices are strictly nearer than
    the fifth and are the corners of the cell containing ``p``."""
    verts = [(c, r) for c in range(grid.cols + 1) for r in range(grid.rows + 1)]
    dist = sorted(
        (math.hypot(grid.origin.x + c * grid.spacing_x - p.x, grid.origin.y + r * grid.spacing_y - p.y), (c, r))
        for c, r in verts
    )
    if len(dist) > 4 and dist[4][0] - dist[3][0] <= gap:
        return False
    fx = (p.x - grid.origin.x) / grid.spacing_x
    fy = (p.y - grid.origin.y) / grid.spacing_y
    if min(abs(fx - round(fx)), abs(fy - round(fy))) <= gap:
        return False
    c0, r0 = math.floor(fx), math.floor(fy)
    return {v for _, v in dist[:4]} == {(c0, r0), (c0 + 1, r0), (c0, r0 + 1), (c0 + 1, r0 + 1)}
