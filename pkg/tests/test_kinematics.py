"""Action geometry, speed model, and per-cell traversal timing."""

from __future__ import annotations

import math

import numpy as np
import pytest

from sailcover.env import EnvState, FlowField, GridSpec
from sailcover.kinematics import (ACTION_BY_ID, ACTION_BY_OFFSET, ACTIONS,
                                  NO_GO_PENALTY, actual_speed,
                                  decompose_track, effective_speed,
                                  evaluate_action, fold_angle, traverse)
from sailcover.polar import default_polar

GRID = GridSpec(rows=10, cols=10, cell_size_m=100.0)
POLAR = default_polar()


def uniform_field(wind_speed: float = 5.0, wind_dir: float = 0.0,
                  cur_speed: float = 0.2, cur_dir: float = 0.0,
                  stage: int = 0) -> FlowField:
    shape = (GRID.rows, GRID.cols)
    return FlowField(
        stage,
        np.full(shape, wind_speed),
        np.full(shape, wind_dir),
        np.full(shape, cur_speed),
        np.full(shape, cur_dir),
    )


def test_action_catalogue() -> None:
    assert len(ACTIONS) == 16
    assert [a.action_id for a in ACTIONS] == list(range(1, 17))
    dirs = [a.track_direction_deg for a in ACTIONS]
    assert dirs == sorted(dirs)
    assert len(set(dirs)) == 16
    offsets = {(a.di, a.dj) for a in ACTIONS}
    rook = {(1, 0), (-1, 0), (0, 1), (0, -1)}
    diag = {(1, 1), (1, -1), (-1, 1), (-1, -1)}
    knight = {(di, dj) for di in (-2, -1, 1, 2) for dj in (-2, -1, 1, 2)
              if abs(di) != abs(dj)}
    assert offsets == rook | diag | knight


def test_action_geometry() -> None:
    for a in ACTIONS:
        assert a.track_direction_deg == pytest.approx(
            math.degrees(math.atan2(a.di, a.dj)) % 360.0)
        assert a.length_cells == pytest.approx(math.hypot(a.di, a.dj))
        assert a.length_m(100.0) == pytest.approx(100.0 * math.hypot(a.di, a.dj))
        assert a.apply((4, 4)) == (4 + a.di, 4 + a.dj)
    east = ACTION_BY_OFFSET[(0, 1)]
    assert east.track_direction_deg == 0.0
    assert ACTION_BY_ID[east.action_id] is east


def test_fold_angle() -> None:
    assert fold_angle(0.0) == 0.0
    assert fold_angle(190.0) == pytest.approx(170.0)
    assert fold_angle(-90.0) == pytest.approx(90.0)
    assert fold_angle(360.0) == 0.0
    assert fold_angle(540.0) == pytest.approx(180.0)


def test_actual_speed_open_sailing() -> None:
    # wind from the east, track due west: running at 180 degrees
    v = actual_speed(POLAR, 5.0, 0.0, 180.0)
    assert v == pytest.approx(POLAR.vpp(5.0, 180.0))
    # beam reach
    v = actual_speed(POLAR, 4.0, 0.0, 90.0)
    assert v == pytest.approx(POLAR.vpp(4.0, 90.0))


def test_actual_speed_no_go_cone() -> None:
    # sailing straight into the wind falls back to the penalized close-hauled speed
    expected = NO_GO_PENALTY * POLAR.vpp(5.0, 40.0)
    assert actual_speed(POLAR, 5.0, 0.0, 0.0) == pytest.approx(expected)
    # the cone boundary itself is still inside the cone
    assert actual_speed(POLAR, 5.0, 0.0, 40.0) == pytest.approx(expected)
    # just outside the cone the table applies directly
    v = actual_speed(POLAR, 5.0, 0.0, 41.0)
    assert v == pytest.approx(POLAR.vpp(5.0, 41.0))
    assert v > expected


def test_actual_speed_zero_wind() -> None:
    assert actual_speed(POLAR, 0.0, 120.0, 0.0) == 0.0
    assert actual_speed(POLAR, -1.0, 120.0, 0.0) == 0.0


def test_effective_speed_projects_current() -> None:
    assert effective_speed(2.0, 0.5, 0.0, 0.0) == pytest.approx(2.5)
    assert effective_speed(2.0, 0.5, 180.0, 0.0) == pytest.approx(1.5)
    assert effective_speed(2.0, 0.5, 90.0, 0.0) == pytest.approx(2.0)
    # can go non-positive against a strong current
    assert effective_speed(0.3, 1.0, 180.0, 0.0) < 0.0


def test_decompose_rook_move() -> None:
    segs = decompose_track(GRID, (0, 0), (0, 1))
    assert segs == [((0, 0), pytest.approx(50.0)), ((0, 1), pytest.approx(50.0))]


def test_decompose_diagonal_corner_crossing() -> None:
    # the track passes exactly through a grid corner: only the two diagonal
    # cells appear, never the off-diagonal neighbours
    segs = decompose_track(GRID, (0, 0), (1, 1))
    cells = [c for c, _ in segs]
    assert cells == [(0, 0), (1, 1)]
    half = math.hypot(100.0, 100.0) / 2.0
    for _, ln in segs:
        assert ln == pytest.approx(half)


def test_decompose_knight_move() -> None:
    segs = decompose_track(GRID, (0, 0), (1, 2))
    cells = [c for c, _ in segs]
    assert cells == [(0, 0), (0, 1), (1, 1), (1, 2)]
    quarter = math.hypot(100.0, 200.0) / 4.0
    for _, ln in segs:
        assert ln == pytest.approx(quarter)


def test_decompose_lengths_sum_to_track_length() -> None:
    for a in ACTIONS:
        for src in [(3, 3), (5, 2), (2, 7)]:
            dst = a.apply(src)
            segs = decompose_track(GRID, src, dst)
            total = sum(ln for _, ln in segs)
            assert total == pytest.approx(a.length_m(GRID.cell_size_m))
            assert all(ln > 0 for _, ln in segs)
            assert segs[0][0] == src
            assert segs[-1][0] == dst


def test_traverse_uniform_field() -> None:
    fld = uniform_field(wind_speed=5.0, wind_dir=0.0, cur_speed=0.2, cur_dir=0.0)
    east = ACTION_BY_OFFSET[(0, 1)]
    res = traverse(GRID, (0, 0), fld, east, POLAR, time_budget=300.0)
    assert res.feasible
    assert res.to_cell == (0, 1)
    assert res.distance_m == pytest.approx(100.0)
    # track into the wind: penalized close-hauled speed plus following current
    v = NO_GO_PENALTY * POLAR.vpp(5.0, 40.0) + 0.2
    assert res.total_time_s == pytest.approx(100.0 / v)
    assert sum(s.time_s for s in res.segments) == pytest.approx(res.total_time_s)


def test_traverse_heterogeneous_cells() -> None:
    fld = uniform_field(wind_speed=5.0, wind_dir=0.0, cur_speed=0.2, cur_dir=0.0)
    ws = fld.wind_speed.copy()
    ws[0, 1] = 10.0
    fld = FlowField(0, ws, fld.wind_dir.copy(), fld.cur_speed.copy(), fld.cur_dir.copy())
    east = ACTION_BY_OFFSET[(0, 1)]
    res = traverse(GRID, (0, 0), fld, east, POLAR, time_budget=300.0)
    v1 = NO_GO_PENALTY * POLAR.vpp(5.0, 40.0) + 0.2
    v2 = NO_GO_PENALTY * POLAR.vpp(10.0, 40.0) + 0.2
    assert res.total_time_s == pytest.approx(50.0 / v1 + 50.0 / v2)


def test_traverse_off_grid() -> None:
    west = ACTION_BY_OFFSET[(0, -1)]
    fld = uniform_field()
    res = traverse(GRID, (0, 0), fld, west, POLAR, time_budget=300.0)
    assert not res.feasible
    assert res.reason == "off_grid"
    assert res.total_time_s == math.inf


def test_traverse_slow_segment() -> None:
    # strong opposing current drives the effective speed below the floor
    fld = uniform_field(wind_speed=2.0, wind_dir=0.0, cur_speed=1.0, cur_dir=180.0)
    east = ACTION_BY_OFFSET[(0, 1)]
    res = traverse(GRID, (0, 0), fld, east, POLAR, time_budget=300.0)
    assert not res.feasible
    assert res.reason == "slow_segment"


def test_traverse_over_budget() -> None:
    fld = uniform_field(wind_speed=5.0, wind_dir=0.0, cur_speed=0.2, cur_dir=0.0)
    east = ACTION_BY_OFFSET[(0, 1)]
    res = traverse(GRID, (0, 0), fld, east, POLAR, time_budget=1.0)
    assert not res.feasible
    assert res.reason == "over_budget"
    # the timing is still reported so callers can account for overruns
    v = NO_GO_PENALTY * POLAR.vpp(5.0, 40.0) + 0.2
    assert res.total_time_s == pytest.approx(100.0 / v)


def test_evaluate_action_uses_vessel_cell() -> None:
    env = EnvState(grid=GRID, delta_t=300.0, rng_seed=0, vessel_cell=(2, 2))
    fld = uniform_field()
    east = ACTION_BY_OFFSET[(0, 1)]
    direct = traverse(GRID, (2, 2), fld, east, POLAR, time_budget=300.0)
    via_env = evaluate_action(env, fld, east, POLAR, time_budget=300.0)
    assert via_env == direct
