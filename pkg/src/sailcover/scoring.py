"""Action scoring and staged rollout reward.

A candidate action is graded by the product of three factors: net coverage
efficiency (newly covered area per second), the regularity of the map the
action would leave behind (see :mod:`sailcover.morphology`), and a position
weight favoring cells far from the map center. Rollouts are scored per
simulated stage and discounted geometrically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .coverage import CoverageRaster
from .env import GridSpec
from .kinematics import ActionSpec, TraversalResult
from .morphology import region_report

CENTER_FLOOR_FRACTION = 0.1


@dataclass(frozen=True)
class ScoreParams:
    """Knobs shared by action scoring and rollout reward."""

    alpha: float = 0.2
    beta: float = 0.2
    epsilon: float = 0.3
    p_range: tuple[float, float] = (0.25, 4.0)
    efficiency_pen_exponent: float = 2.0
    position_distance_exponent: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha out of [0, 1]: {self.alpha}")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta out of (0, 1]: {self.beta}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon out of [0, 1]: {self.epsilon}")
        lo, hi = self.p_range
        if not 0.0 < lo <= hi:
            raise ValueError(f"bad p_range: {self.p_range}")


@dataclass(frozen=True)
class PositionWeights:
    """Per-cell distance-to-center weighting.

    ``term`` is the precomposed position factor sqrt(d) * w, with the exact
    center cell (where w = 0) floored at a tenth of the smallest nonzero
    factor so central moves are damped rather than annihilated.
    """

    d: np.ndarray
    w: np.ndarray
    term: np.ndarray


def position_weights(grid: GridSpec) -> PositionWeights:
    cx, cy = grid.center_m
    jj, ii = np.meshgrid(np.arange(grid.cols), np.arange(grid.rows))
    x = (jj + 0.5) * grid.cell_size_m
    y = (ii + 0.5) * grid.cell_size_m
    d = np.hypot(x - cx, y - cy)
    total = d.sum()
    if total > 0.0:
        w = d / total
    else:
        w = np.zeros_like(d)
    term = np.sqrt(d) * w
    positive = term > 0.0
    if positive.any():
        term[~positive] = term[positive].min() * CENTER_FLOOR_FRACTION
    else:
        term[:] = 1.0  # single-cell grid: no spatial preference to express
    for arr in (d, w, term):
        arr.setflags(write=False)
    return PositionWeights(d=d, w=w, term=term)


def heuristic_score(action: ActionSpec, traversal: TraversalResult,
                    raster: CoverageRaster, weights: PositionWeights,
                    a_thres_m2: float, p: float = 1.0) -> float:
    """Score of taking ``action`` from the raster's current coverage state.

    Zero exactly when the stamp at the destination covers nothing new;
    otherwise efficiency * regularity^p * position, all non-negative.
    """
    if not traversal.feasible:
        raise ValueError("heuristic_score needs a feasible traversal")
    end = traversal.to_cell
    fresh_px = raster.new_pixels(end)
    if fresh_px == 0:
        return 0.0
    post = raster.copy()
    post.stamp_visit(end)
    report = region_report(post.covered, raster.pixel_area_m2, a_thres_m2)
    efficiency = fresh_px * raster.pixel_area_m2 / traversal.total_time_s
    return efficiency * report.regularity ** p * float(weights.term[end])


def rollout_reward(snapshots: Sequence[tuple[float, float, float]],
                   beta: float) -> float:
    """Discounted sum over stage snapshots of regularity * (U/T)^2.

    Each snapshot is (regularity, utility, cumulative_time_s); zero elapsed
    time contributes nothing.
    """
    total = 0.0
    for k, (regularity, utility, elapsed) in enumerate(snapshots):
        if elapsed <= 0.0:
            continue
        total += beta ** k * regularity * (utility / elapsed) ** 2
    return total
