"""Candidate scoring factors and the discounted rollout reward."""

from __future__ import annotations

import math

import numpy as np
import pytest

from sailcover.coverage import CoverageRaster
from sailcover.env import GridSpec
from sailcover.kinematics import ACTION_BY_OFFSET, TraversalResult
from sailcover.morphology import region_report
from sailcover.scoring import (ScoreParams, heuristic_score, position_weights,
                               rollout_reward)

GRID = GridSpec(rows=10, cols=10, cell_size_m=100.0)


def test_params_validation() -> None:
    ScoreParams()
    with pytest.raises(ValueError):
        ScoreParams(alpha=1.5)
    with pytest.raises(ValueError):
        ScoreParams(beta=0.0)
    with pytest.raises(ValueError):
        ScoreParams(epsilon=-0.1)
    with pytest.raises(ValueError):
        ScoreParams(p_range=(2.0, 1.0))
    with pytest.raises(ValueError):
        ScoreParams(p_range=(0.0, 4.0))


def test_position_weights_geometry() -> None:
    pw = position_weights(GRID)
    assert pw.w.sum() == pytest.approx(1.0)
    # start corner: distance from (50, 50) to the 1000 m map center
    d_corner = math.hypot(450.0, 450.0)
    assert pw.d[0, 0] == pytest.approx(d_corner)
    assert pw.d[0, 0] == pytest.approx(636.396, abs=1e-3)
    # four-fold symmetry
    assert pw.d[0, 0] == pytest.approx(pw.d[9, 9])
    assert pw.d[0, 9] == pytest.approx(pw.d[9, 0])
    # corners outweigh everything else
    assert pw.term[0, 0] == pw.term.max()
    assert pw.term.min() > 0.0


def test_position_weights_center_floor() -> None:
    odd = GridSpec(rows=3, cols=3, cell_size_m=100.0)
    pw = position_weights(odd)
    # the exact center cell has zero distance but keeps a small positive term
    assert pw.d[1, 1] == 0.0
    positive = pw.term[pw.d > 0]
    assert pw.term[1, 1] == pytest.approx(0.1 * positive.min())


def feasible_move(end: tuple[int, int], seconds: float) -> TraversalResult:
    return TraversalResult(True, (0, 0), end, 100.0, seconds, ())


def test_heuristic_score_zero_without_fresh_pixels() -> None:
    raster = CoverageRaster(GRID)
    raster.stamp_visit((5, 5))
    pw = position_weights(GRID)
    east = ACTION_BY_OFFSET[(0, 1)]
    score = heuristic_score(east, feasible_move((5, 5), 100.0), raster, pw, 3000.0)
    assert score == 0.0


def test_heuristic_score_factorizes() -> None:
    raster = CoverageRaster(GRID)
    pw = position_weights(GRID)
    east = ACTION_BY_OFFSET[(0, 1)]
    end = (4, 6)
    fresh = raster.new_pixels(end)
    post = raster.copy()
    post.stamp_visit(end)
    reg = region_report(post.covered, raster.pixel_area_m2, 3000.0).regularity
    expected = fresh * raster.pixel_area_m2 / 200.0 * reg * pw.term[end]
    got = heuristic_score(east, feasible_move(end, 200.0), raster, pw, 3000.0)
    assert got == pytest.approx(expected)
    # doubling the traversal time halves the score
    half = heuristic_score(east, feasible_move(end, 400.0), raster, pw, 3000.0)
    assert half == pytest.approx(got / 2.0)


def test_heuristic_score_regularity_exponent() -> None:
    raster = CoverageRaster(GRID)
    pw = position_weights(GRID)
    east = ACTION_BY_OFFSET[(0, 1)]
    end = (4, 6)
    move = feasible_move(end, 200.0)
    base = heuristic_score(east, move, raster, pw, 3000.0, p=1.0)
    post = raster.copy()
    post.stamp_visit(end)
    reg = region_report(post.covered, raster.pixel_area_m2, 3000.0).regularity
    assert heuristic_score(east, move, raster, pw, 3000.0, p=2.0) == pytest.approx(
        base * reg)
    assert heuristic_score(east, move, raster, pw, 3000.0, p=0.25) == pytest.approx(
        base * reg ** -0.75)


def test_heuristic_score_rejects_infeasible() -> None:
    raster = CoverageRaster(GRID)
    pw = position_weights(GRID)
    east = ACTION_BY_OFFSET[(0, 1)]
    bad = TraversalResult(False, (0, 0), (0, 1), 100.0, math.inf, (), "off_grid")
    with pytest.raises(ValueError):
        heuristic_score(east, bad, raster, pw, 3000.0)


def test_heuristic_score_leaves_raster_untouched() -> None:
    raster = CoverageRaster(GRID)
    pw = position_weights(GRID)
    east = ACTION_BY_OFFSET[(0, 1)]
    heuristic_score(east, feasible_move((3, 3), 150.0), raster, pw, 3000.0)
    assert raster.coverage_fraction() == 0.0
    assert raster.counts.sum() == 0


def test_rollout_reward_single_stage() -> None:
    assert rollout_reward([(0.8, 0.5, 200.0)], beta=0.2) == pytest.approx(
        0.8 * (0.5 / 200.0) ** 2)


def test_rollout_reward_discounts_later_stages() -> None:
    snaps = [(0.8, 0.5, 200.0), (0.9, 0.7, 500.0)]
    expected = 0.8 * (0.5 / 200.0) ** 2 + 0.2 * 0.9 * (0.7 / 500.0) ** 2
    assert rollout_reward(snaps, beta=0.2) == pytest.approx(expected)
    # discounting is per snapshot index, so order matters
    flipped = rollout_reward(list(reversed(snaps)), beta=0.2)
    assert flipped != pytest.approx(rollout_reward(snaps, beta=0.2))


def test_rollout_reward_skips_zero_elapsed() -> None:
    assert rollout_reward([(1.0, 1.0, 0.0)], beta=0.2) == 0.0
    snaps = [(1.0, 1.0, 0.0), (0.5, 0.5, 100.0)]
    # the zero-time snapshot still occupies its discount slot
    assert rollout_reward(snaps, beta=0.2) == pytest.approx(
        0.2 * 0.5 * (0.5 / 100.0) ** 2)


def test_rollout_reward_empty() -> None:
    assert rollout_reward([], beta=0.2) == 0.0
