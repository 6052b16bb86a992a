import itertools
import math

import pytest
from hypothesis import given, settings, strategies as st

from conftest import four_nearest_form_cell, noiseless_window
from gridloc.errors import EmptyWindowError, InsufficientAnchorsError, UnknownAnchorError, ValidationError
from gridloc.geometry import GridCell, Point, anchor_position, cell_of_point, corners_of_cell
from gridloc.propagation import PathLossModel
from gridloc.resolver import (
    Degenerate,
    Half,
    QuadSelection,
    Rectangle,
    ResolutionKind,
    RssiWindow,
    TrackerMemory,
    average_window,
    classify_quad,
    resolve,
    resolve_degenerate,
    select_top4,
    side_test,
)


def quad(*entries):
    return QuadSelection(tuple(sorted(entries, key=lambda e: (-e[1], e[0]))))


# ---------------------------------------------------------------- averaging


def test_average_single_anchor():
    w = average_window([("a", -60, 0.0), ("a", -62, 0.05), ("a", -64, 0.1)])
    assert w.readings == {"a": -62.0}


def test_average_passthrough():
    w = average_window([("a", -60, 0.0), ("b", -70.5, 0.1)], window_id=3)
    assert w.window_id == 3 and w.readings == {"a": -60.0, "b": -70.5}


def test_average_mixed_counts():
    w = average_window([("a", -50, 0.0), ("b", -70, 0.0), ("a", -52, 0.1)])
    assert w.readings == {"a": -51.0, "b": -70.0}


def test_average_empty():
    with pytest.raises(EmptyWindowError):
        average_window([])


def test_average_span_longer_than_window():
    with pytest.raises(ValidationError):
        average_window([("a", -50, 0.0), ("a", -50, 0.5)], window=0.2)


def test_window_rejects_non_finite():
    with pytest.raises(ValidationError):
        RssiWindow(0, {"a": math.nan})


# ---------------------------------------------------------------- top-4


def test_select_top4_order():
    w = RssiWindow(0, {"a": -70, "b": -50, "c": -65, "d": -55, "e": -80, "f": -60})
    assert select_top4(w).entries == (("b", -50.0), ("d", -55.0), ("f", -60.0), ("c", -65.0))


def test_select_top4_tie_break():
    w = RssiWindow(0, {"a9": -70, "x": -50, "y": -55, "z": -60, "a1": -70})
    assert select_top4(w).ids == ("x", "y", "z", "a1")


def test_select_top4_insufficient():
    with pytest.raises(InsufficientAnchorsError):
        select_top4(RssiWindow(0, {"a": -50, "b": -60, "c": -70}))


@given(st.permutations(list(range(9))), st.lists(st.integers(-90, -40), min_size=9, max_size=9))
def test_select_top4_permutation_invariant(order, values):
    readings = {f"n{i}": float(v) for i, v in enumerate(values)}
    shuffled = {f"n{i}": readings[f"n{i}"] for i in order}
    assert select_top4(RssiWindow(0, readings)) == select_top4(RssiWindow(0, shuffled))


# ---------------------------------------------------------------- classify


def test_classify_cell(deployment):
    sel = quad(("a0_0", -50), ("a1_0", -51), ("a0_1", -52), ("a1_1", -53))
    assert classify_quad(sel, deployment) == Rectangle(GridCell(0, 0))


def test_classify_non_cell(deployment):
    sel = quad(("a0_0", -50), ("a0_1", -51), ("a1_0", -52), ("a2_0", -53))
    assert classify_quad(sel, deployment) == Degenerate()


def test_classify_l_shape(deployment):
    sel = quad(("a0_0", -50), ("a1_0", -51), ("a2_0", -52), ("a1_1", -53))
    assert classify_quad(sel, deployment) == Degenerate()


def test_classify_unknown_anchor(deployment):
    with pytest.raises(UnknownAnchorError):
        classify_quad(quad(("a0_0", -50), ("a1_0", -51), ("a0_1", -52), ("zz", -53)), deployment)


def test_classify_enumerates_all_vertex_subsets(deployment):
    # independent oracle: an axis-aligned square with side equal to the spacing
    rectangles = 0
    for subset in itertools.combinations(deployment.anchor_ids(), 4):
        pts = [anchor_position(deployment, a) for a in subset]
        xs, ys = sorted({p.x for p in pts}), sorted({p.y for p in pts})
        expect = len(xs) == 2 and len(ys) == 2 and xs[1] - xs[0] == 4 and ys[1] - ys[0] == 4
        sel = quad(*((a, -50.0 - i) for i, a in enumerate(subset)))
        got = classify_quad(sel, deployment)
        assert isinstance(got, Rectangle) == expect
        rectangles += expect
    assert rectangles == 4  # frozen from enumerating the 126 subsets


# ---------------------------------------------------------------- degenerate cases


def test_edge_pair_example(deployment, model):
    sel = quad(("a1_1", -50), ("a1_0", -52), ("a0_0", -60), ("a2_0", -61))
    res = resolve_degenerate(sel, deployment, model, TrackerMemory())
    assert res.kind is ResolutionKind.EDGE_PAIR
    assert res.position_hint == Point(4.0, 2.0)


def test_edge_pair_both_pairs_same_axis(deployment, model):
    # {a0_0, a0_1} is the edge x=0 (y mid 2), {a2_1, a2_2} the edge x=8 (y mid 6)
    sel = quad(("a0_0", -50), ("a0_1", -50.5), ("a2_1", -58), ("a2_2", -58.2))
    res = resolve_degenerate(sel, deployment, model, TrackerMemory())
    assert res.kind is ResolutionKind.EDGE_PAIR
    assert res.position_hint == Point((0 + 8) / 2, (2 + 6) / 2)


def test_edge_pair_without_edges_falls_back_to_weighted_centroid(deployment, model):
    sel = quad(("a0_0", -50), ("a2_0", -50), ("a0_2", -50), ("a2_2", -50))
    res = resolve_degenerate(sel, deployment, model, TrackerMemory())
    assert res.kind is ResolutionKind.EDGE_PAIR
    assert res.position_hint == Point(4.0, 4.0)


def test_near_node_with_memory(deployment, model):
    sel = quad(("a1_1", -45.0), ("a0_1", -55.0), ("a1_0", -55.0), ("a2_1", -56.0))
    memory = TrackerMemory(GridCell(0, 0))
    res = resolve_degenerate(sel, deployment, model, memory)
    assert res.kind is ResolutionKind.NEAR_NODE
    assert res.cell == GridCell(0, 0)
    h = 4 - math.sqrt(2) / 2
    assert res.position_hint.x == pytest.approx(h, abs=1e-12)
    assert res.position_hint.y == pytest.approx(h, abs=1e-12)
    assert res.position_hint.distance_to(Point(4, 4)) == pytest.approx(1.0, abs=1e-9)


def test_near_node_without_memory(deployment, model):
    sel = quad(("a1_1", -45.0), ("a0_1", -55.0), ("a1_0", -55.0), ("a2_1", -56.0))
    res = resolve_degenerate(sel, deployment, model, TrackerMemory())
    assert res.kind is ResolutionKind.NEAR_NODE
    assert res.position_hint == Point(4.0, 4.0)
    assert res.cell is None


def test_near_radius_fraction_controls_branch(deployment, model):
    sel = quad(("a1_1", -45.0), ("a0_1", -55.0), ("a1_0", -55.0), ("a2_1", -56.0))
    # r = 1 m sits exactly on the default threshold 0.25 * 4 m; the circle is closed
    assert resolve_degenerate(sel, deployment, model, TrackerMemory(), 0.25).kind is ResolutionKind.NEAR_NODE
    assert resolve_degenerate(sel, deployment, model, TrackerMemory(), 0.2).kind is ResolutionKind.EDGE_PAIR
    assert resolve_degenerate(sel, deployment, model, TrackerMemory(), 0.3).kind is ResolutionKind.NEAR_NODE


@settings(max_examples=200)
@given(
    st.lists(st.sampled_from([f"a{c}_{r}" for c in range(3) for r in range(3)]), min_size=4, max_size=4, unique=True),
    st.lists(st.floats(-80, -46), min_size=4, max_size=4),
)
def test_edge_pair_stays_in_bounding_box(deployment, ids, rssis):
    model = PathLossModel(-45.0, 2.0)
    sel = quad(*zip(ids, rssis))
    if isinstance(classify_quad(sel, deployment), Rectangle):
        return
    res = resolve_degenerate(sel, deployment, model, TrackerMemory(), near_radius_fraction=0.01)
    assert res.kind is ResolutionKind.EDGE_PAIR
    pts = [anchor_position(deployment, a) for a in ids]
    p = res.position_hint
    assert min(q.x for q in pts) - 1e-12 <= p.x <= max(q.x for q in pts) + 1e-12
    assert min(q.y for q in pts) - 1e-12 <= p.y <= max(q.y for q in pts) + 1e-12


# ---------------------------------------------------------------- side test


@pytest.fixture(scope="module")
def unit_corners(grid2x2):
    return corners_of_cell(grid2x2, GridCell(0, 0))[0]


def test_side_test_x1(unit_corners):
    assert side_test(unit_corners, -50, -60, -60, -50) == {Half.X1}


def test_side_test_center(unit_corners):
    assert side_test(unit_corners, -55, -55, -55, -55) == {Half.CENTER}


def test_side_test_quadrant(unit_corners):
    assert side_test(unit_corners, -50, -52, -60, -58) == {Half.X1, Half.Y1}


def test_side_test_other_halves(unit_corners):
    assert side_test(unit_corners, -60, -50, -50, -60) == {Half.X2}
    assert side_test(unit_corners, -60, -60, -50, -50) == {Half.Y2}


def test_side_test_mixed_comparisons_are_undetermined(unit_corners):
    assert side_test(unit_corners, -50, -60, -50, -60) == frozenset()


whole_dbm = st.integers(-100, -20).map(float)


@settings(max_examples=200)
@given(whole_dbm, whole_dbm, whole_dbm, whole_dbm, st.floats(-30, 30))
def test_side_test_shift_invariant(unit_corners, a, b, c, d, k):
    assert side_test(unit_corners, a, b, c, d) == side_test(unit_corners, a + k, b + k, c + k, d + k)


# ---------------------------------------------------------------- resolve


def test_resolve_rectangle(deployment, model):
    memory = TrackerMemory()
    res = resolve(noiseless_window(deployment, model, Point(1, 1)), deployment, model, memory)
    assert res.kind is ResolutionKind.RECTANGLE
    assert res.cell == GridCell(0, 0)
    assert memory.last_cell == GridCell(0, 0)
    assert res.side_hint == {Half.X1, Half.Y2}


def test_resolve_near_anchor(deployment, model):
    memory = TrackerMemory()
    res = resolve(noiseless_window(deployment, model, Point(3.99, 4.0)), deployment, model, memory)
    assert res.kind is ResolutionKind.NEAR_NODE
    assert res.position_hint == Point(4.0, 4.0)
    assert memory.last_cell is None


def test_resolve_near_anchor_radius(deployment, model):
    memory = TrackerMemory(GridCell(0, 1))
    res = resolve(noiseless_window(deployment, model, Point(3.99, 4.0)), deployment, model, memory)
    assert res.position_hint.distance_to(Point(4, 4)) == pytest.approx(0.01, rel=1e-9)


def test_resolve_insufficient(deployment, model):
    w = noiseless_window(deployment, model, Point(1, 1), only=["a0_0", "a1_0", "a0_1"])
    with pytest.raises(InsufficientAnchorsError):
        resolve(w, deployment, model, TrackerMemory())


@settings(max_examples=300)
@given(st.floats(0.0, 8.0), st.floats(0.0, 8.0))
def test_noiseless_interior_points_resolve_to_true_cell(deployment, x, y):
    model = PathLossModel(-45.0, 2.0)
    p = Point(x, y)
    if not four_nearest_form_cell(deployment.grid, p):
        return
    res = resolve(noiseless_window(deployment, model, p), deployment, model, TrackerMemory())
    assert res.kind is ResolutionKind.RECTANGLE
    assert res.cell == cell_of_point(deployment.grid, p)


@settings(max_examples=100)
@given(st.lists(st.tuples(st.floats(0.0, 8.0), st.floats(0.0, 8.0)), min_size=1, max_size=12))
def test_memory_changes_only_on_rectangles(deployment, path):
    model = PathLossModel(-45.0, 2.0)
    memory = TrackerMemory()
    for i, (x, y) in enumerate(path):
        before = memory.last_cell
        res = resolve(noiseless_window(deployment, model, Point(x, y), i), deployment, model, memory)
        if res.kind is ResolutionKind.RECTANGLE:
            assert memory.last_cell == res.cell
        else:
            assert memory.last_cell == before
