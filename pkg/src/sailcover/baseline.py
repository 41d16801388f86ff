"""Fixed serpentine reference sweep.

The plan visits every cell exactly once, row by row in alternating
direction, ignoring wind and current. When the scheduled move is
infeasible under the current stage field the vessel waits in place until
the next stage boundary, since the fields cannot change any sooner. Waits
appear in the trace with action id 0.
"""

from __future__ import annotations

from typing import Optional

from .coverage import CoverageRaster
from .env import EnvState, GridSpec
from .kinematics import ACTION_BY_OFFSET, traverse
from .mission import (STATUS_COMPLETE, STATUS_TIMEOUT, MissionResult, TraceRow,
                      WAIT_ACTION_ID)
from .planner import PlannerConfig
from .polar import PolarTable, default_polar

MAX_BLOCKED_STAGES = 20

METHOD_NAME = "base"


def serpentine_plan(grid: GridSpec) -> list[tuple[int, int]]:
    """Every cell once, rows swept in alternating direction from (0, 0)."""
    plan: list[tuple[int, int]] = []
    for i in range(grid.rows):
        cols = range(grid.cols) if i % 2 == 0 else range(grid.cols - 1, -1, -1)
        plan.extend((i, j) for j in cols)
    return plan


def run_baseline(seed: int, config: PlannerConfig, grid: GridSpec,
                 polar: Optional[PolarTable] = None,
                 store_stage_counts: bool = False) -> MissionResult:
    """Execute the full sweep; only the clock depends on the seed."""
    if polar is None:
        polar = default_polar()
    env = EnvState(grid=grid, delta_t=config.delta_t, rng_seed=seed,
                   bounds=config.bounds)
    raster = CoverageRaster(grid, config.pixel_size_m, config.d_obs_m)
    raster.stamp_visit(env.vessel_cell)

    result = MissionResult(
        method=METHOD_NAME, seed=seed, status=STATUS_COMPLETE, coverage_pct=0.0,
        finish_time_s=0.0, await_time_s=0.0, distance_m=0.0,
        start_coverage_pct=raster.coverage_fraction() * 100.0)

    plan = serpentine_plan(grid)
    cursor = 1  # the start cell is already stamped
    decision = 0
    blocked_stages = 0
    last_snap_stage = -1

    while cursor < len(plan):
        stage = env.stage_index
        if stage >= config.max_stages:
            result.status = STATUS_TIMEOUT
            break
        if stage != last_snap_stage:
            result.stage_snapshots.append(
                (stage, env.t, raster.coverage_fraction() * 100.0))
            if store_stage_counts and last_snap_stage >= 0:
                result.stage_counts[last_snap_stage] = raster.counts.copy()
            last_snap_stage = stage

        src = env.vessel_cell
        dst = plan[cursor]
        offset = (dst[0] - src[0], dst[1] - src[1])
        action = ACTION_BY_OFFSET[offset]
        tr = traverse(grid, src, env.field(), action, polar, config.delta_t,
                      config.v_floor, config.no_go_deg)
        if tr.feasible:
            env.t += tr.total_time_s
            env.vessel_cell = dst
            raster.stamp_visit(dst)
            result.distance_m += tr.distance_m
            result.trace.append(TraceRow(
                stage=stage, decision_idx=decision, action_id=action.action_id,
                from_cell=src, to_cell=dst, time_s=tr.total_time_s,
                cum_coverage_pct=raster.coverage_fraction() * 100.0))
            cursor += 1
            blocked_stages = 0
        else:
            wait = env.stage_end() - env.t
            env.t = env.stage_end()
            result.await_time_s += wait
            result.trace.append(TraceRow(
                stage=stage, decision_idx=decision, action_id=WAIT_ACTION_ID,
                from_cell=src, to_cell=src, time_s=wait,
                cum_coverage_pct=raster.coverage_fraction() * 100.0))
            blocked_stages += 1
            if blocked_stages >= MAX_BLOCKED_STAGES:
                result.status = STATUS_TIMEOUT
                break
        decision += 1

    result.coverage_pct = raster.coverage_fraction() * 100.0
    result.finish_time_s = env.t
    result.final_counts = raster.counts.copy()
    if store_stage_counts and last_snap_stage >= 0:
        result.stage_counts[last_snap_stage] = raster.counts.copy()
    return result
