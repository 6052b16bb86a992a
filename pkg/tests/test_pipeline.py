import json

import pytest

from conftest import noiseless_window
from gridloc.errors import UnknownAnchorError, ValidationError
from gridloc.geometry import GridCell, Point
from gridloc.pipeline import (
    EstimatorConfig,
    Method,
    centroid_baseline,
    load_config,
    run_batch,
    step,
)
from gridloc.resolver import Half, RssiWindow, TrackerMemory

CFG = EstimatorConfig()


def test_step_refined(deployment, model):
    est = step(CFG, deployment, model, TrackerMemory(), noiseless_window(deployment, model, Point(1, 1), 5))
    assert est.window_id == 5
    assert est.method is Method.REFINED
    assert est.cell == GridCell(0, 0)
    assert est.position.distance_to(Point(1, 1)) <= 1e-6


def test_step_cell_center(deployment, model):
    est = step(CFG, deployment, model, TrackerMemory(), noiseless_window(deployment, model, Point(2, 2)))
    assert est.method is Method.REFINED
    assert est.position.distance_to(Point(2, 2)) <= 1e-9


def test_step_edge_pair(deployment, model):
    w = RssiWindow(0, {"a1_1": -50, "a1_0": -52, "a0_0": -60, "a2_0": -61, "a0_2": -75})
    est = step(CFG, deployment, model, TrackerMemory(), w)
    assert est.method is Method.EDGE_PAIR
    assert est.position == Point(4, 2)


def test_step_clamp_policy(deployment, model):
    # a deep fade on the far corner pushes the raw estimate outside cell (0, 0)
    corners = ["a0_0", "a1_0", "a0_1", "a1_1"]
    w = dict(noiseless_window(deployment, model, Point(3.5, 0.5), only=corners).readings)
    w["a0_1"] -= 12.0
    raw = step(CFG, deployment, model, TrackerMemory(), RssiWindow(0, w))
    clamped = step(EstimatorConfig(clamp_policy="clamp"), deployment, model, TrackerMemory(), RssiWindow(0, w))
    assert raw.cell == clamped.cell
    assert raw.cell == GridCell(0, 0)
    assert raw.position.x > 4 and raw.position.y < 0
    assert clamped.position == Point(4.0, 0.0)


def test_side_hint_consistent_with_refined_position(deployment, model):
    checked = 0
    for x in (0.5, 1.3, 2.7, 3.5):
        for y in (0.5, 1.7, 2.3, 3.5):
            est = step(CFG, deployment, model, TrackerMemory(), noiseless_window(deployment, model, Point(x, y)))
            if est.method is not Method.REFINED:
                continue
            checked += 1
            if Half.X1 in est.side_hint:
                assert est.position.x < 2.0
            if Half.X2 in est.side_hint:
                assert est.position.x > 2.0
            if Half.Y1 in est.side_hint:
                assert est.position.y > 2.0
            if Half.Y2 in est.side_hint:
                assert est.position.y < 2.0
    assert checked >= 10


def test_run_batch_empty(deployment, model):
    res = run_batch(CFG, deployment, model, [])
    assert res.estimates == [] and res.skips == []


def test_run_batch_single(deployment, model):
    res = run_batch(CFG, deployment, model, [noiseless_window(deployment, model, Point(1, 1))])
    assert len(res.estimates) == 1


def test_run_batch_memory_tracks_last_rectangle(deployment, model):
    windows = [
        noiseless_window(deployment, model, Point(1.0, 1.0), 0),  # rectangle, cell (0, 0)
        noiseless_window(deployment, model, Point(5.0, 1.0), 1),  # rectangle, cell (1, 0)
        noiseless_window(deployment, model, Point(4.0, 1.5), 2),  # on the shared edge: degenerate
    ]
    res = run_batch(CFG, deployment, model, windows)
    assert [e.method for e in res.estimates] == [Method.REFINED, Method.REFINED, Method.EDGE_PAIR]
    assert res.memory.last_cell == GridCell(1, 0)


def test_run_batch_skips_short_windows(deployment, model):
    windows = [
        noiseless_window(deployment, model, Point(1, 1), 0),
        noiseless_window(deployment, model, Point(1, 1), 1, only=["a0_0", "a1_0", "a0_1"]),
    ]
    res = run_batch(CFG, deployment, model, windows)
    assert [e.window_id for e in res.estimates] == [0]
    assert [s.window_id for s in res.skips] == [1]
    assert "need 4" in res.skips[0].reason


def test_run_batch_unknown_anchor_is_fatal(deployment, model):
    w = RssiWindow(0, {"a0_0": -50, "a1_0": -55, "a0_1": -55, "a1_1": -60, "ghost": -70})
    with pytest.raises(UnknownAnchorError, match="ghost"):
        run_batch(CFG, deployment, model, [w])


def test_run_batch_is_deterministic(deployment, model):
    import random

    readings = dict(noiseless_window(deployment, model, Point(2.5, 1.5)).readings)
    items = list(readings.items())
    random.Random(3).shuffle(items)
    a = run_batch(CFG, deployment, model, [RssiWindow(0, readings)])
    b = run_batch(CFG, deployment, model, [RssiWindow(0, dict(items))])
    assert a.estimates == b.estimates


def test_centroid_single_anchor(deployment):
    est = centroid_baseline(deployment, RssiWindow(0, {"a2_1": -70}))
    assert est.position == Point(8, 4) and est.method is Method.CENTROID_BASELINE


def test_centroid_symmetric(deployment):
    assert centroid_baseline(deployment, RssiWindow(0, {"a0_0": -60, "a1_0": -60})).position == Point(2, 0)


def test_centroid_weights():
    from gridloc.geometry import Deployment, GridSpec

    dep = Deployment.regular(GridSpec(Point(0, 0), 4.0, 4.0, 1, 1))
    est = centroid_baseline(dep, RssiWindow(0, {"a0_0": -50, "a1_0": -60}))
    assert est.position.x == pytest.approx(4 / 11, abs=1e-12)
    assert est.position.y == 0


def test_baseline_flag_routes_to_centroid(deployment, model):
    res = run_batch(EstimatorConfig(baseline_enabled=True), deployment, model, [noiseless_window(deployment, model, Point(1, 1))])
    assert res.estimates[0].method is Method.CENTROID_BASELINE


@pytest.mark.parametrize("kwargs", [dict(window_seconds=0), dict(near_radius_fraction=1.0), dict(clamp_policy="maybe")])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        EstimatorConfig(**kwargs)


def test_load_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"near_radius_fraction": 0.3, "clamp_policy": "clamp"}))
    cfg = load_config(path)
    assert cfg.near_radius_fraction == 0.3 and cfg.clamp_policy.value == "clamp"
    path.write_text(json.dumps({"nearness": 0.3}))
    with pytest.raises(ValidationError):
        load_config(path)
