"""Tree search mechanics: selection, expansion, rollouts, and full missions."""

from __future__ import annotations

import math

import numpy as np
import pytest

from sailcover.coverage import CoverageRaster
from sailcover.env import EnvState, FlowField, ForecastSequence, GridSpec
from sailcover.kinematics import ACTION_BY_OFFSET
from sailcover.mission import (STATUS_ABORTED, STATUS_COMPLETE, STATUS_TIMEOUT)
from sailcover.morphology import would_split_uncovered
from sailcover.planner import (CommitMismatch, PhaseRuntime, PlannerConfig,
                               TreeNode, backpropagate, batch_tasks, expand,
                               plan_phase, run_mcts, select, simulate_batch,
                               ucb)
from sailcover.polar import default_polar
from sailcover.scoring import position_weights

GRID = GridSpec(rows=10, cols=10, cell_size_m=100.0)
SMALL = GridSpec(rows=6, cols=6, cell_size_m=100.0)

FAST = PlannerConfig(n_iter=4, rollout_workers=2, rollouts_per_worker=1,
                     k_horizon=0)


def uniform_runtime(config: PlannerConfig, grid: GridSpec = GRID,
                    wind_speed: float = 5.0, wind_dir: float = 90.0
                    ) -> PhaseRuntime:
    shape = (grid.rows, grid.cols)
    fields = tuple(
        FlowField(k, np.full(shape, wind_speed), np.full(shape, wind_dir),
                  np.zeros(shape), np.zeros(shape))
        for k in range(config.k_horizon + 1))
    fc = ForecastSequence(0, config.k_horizon, fields)
    return PhaseRuntime(grid, default_polar(), fc, config, position_weights(grid))


def test_config_validation() -> None:
    PlannerConfig()
    with pytest.raises(ValueError):
        PlannerConfig(n_iter=0)
    with pytest.raises(ValueError):
        PlannerConfig(rollout_workers=0)
    with pytest.raises(ValueError):
        PlannerConfig(c_ucb=0.0)
    with pytest.raises(ValueError):
        PlannerConfig(k_horizon=-1)
    with pytest.raises(ValueError):
        PlannerConfig(eta=0.0)
    with pytest.raises(ValueError):
        PlannerConfig(eps_v=-0.01)


def test_ucb_value() -> None:
    raster = CoverageRaster(GRID)
    node = TreeNode(0.0, (0, 0), raster)
    assert ucb(node, 16, 2.5) == math.inf
    node.n = 4
    node.s_bar = 1.0
    assert ucb(node, 16, 2.5) == pytest.approx(
        1.0 + 2.5 * math.sqrt(math.log(16.0) / 4.0))
    assert ucb(node, 16, 2.5) == pytest.approx(3.0814, abs=5e-5)


def test_backpropagate_running_mean() -> None:
    raster = CoverageRaster(GRID)
    root = TreeNode(0.0, (0, 0), raster)
    child = TreeNode(50.0, (0, 1), raster.copy(), parent=root)
    backpropagate(child, 1.0)
    backpropagate(child, 3.0)
    assert child.n == 2
    assert child.s_bar == pytest.approx(2.0)
    assert root.n == 2
    assert root.s_bar == pytest.approx(2.0)
    backpropagate(root, 8.0)
    assert root.n == 3
    assert root.s_bar == pytest.approx((1.0 + 3.0 + 8.0) / 3.0)
    assert child.n == 2


def test_candidates_from_corner() -> None:
    runtime = uniform_runtime(FAST)
    raster = CoverageRaster(GRID)
    raster.stamp_visit((0, 0))
    node = TreeNode(0.0, (0, 0), raster)
    node.materialize(runtime)
    assert not node.dead_end
    ends = {c.end_cell for c in node.untried}
    # only offsets staying on the grid survive at the corner
    assert ends == {(1, 0), (0, 1), (1, 1), (1, 2), (2, 1)}
    for c in node.untried:
        assert c.fresh_px > 0
        assert c.total_time_s > 0.0
        assert c.position > 0.0


def test_candidates_exclude_splitting_move() -> None:
    runtime = uniform_runtime(FAST)
    raster = CoverageRaster(GRID)
    # wall along column 1 with one gap: closing the gap at (5, 1) would cut
    # off the western sliver, which far exceeds the area threshold
    for r in range(GRID.rows):
        if r != 5:
            raster.stamp_visit((r, 1))
    assert would_split_uncovered(raster, [(5, 1)], FAST.a_thres_m2)
    cands = runtime.candidates(0, (4, 0), raster, hash(raster.covered.tobytes()))
    ends = {c.end_cell for c in cands}
    assert (5, 1) not in ends
    # the same move is kinematically available, it is vetoed by shape alone
    feasible_actions = {a.action_id for a, _ in runtime._feasible_moves(0, (4, 0))}
    assert ACTION_BY_OFFSET[(1, 1)].action_id in feasible_actions


def test_materialize_prefers_gaining_moves() -> None:
    runtime = uniform_runtime(FAST)
    raster = CoverageRaster(GRID)
    for r in range(9):
        raster.stamp_visit((r, 5))
    node = TreeNode(0.0, (0, 4), raster)
    node.materialize(runtime)
    cands = runtime.candidates(0, (0, 4), raster, node.cov_hash)
    zero_gain = [c for c in cands if c.fresh_px == 0]
    assert zero_gain  # the move back onto the covered wall gains nothing
    assert all(c.fresh_px > 0 for c in node.untried)
    assert len(node.untried) == len(cands) - len(zero_gain)


def test_materialize_falls_back_to_zero_gain() -> None:
    runtime = uniform_runtime(FAST)
    raster = CoverageRaster(GRID)
    for i in range(GRID.rows):
        for j in range(GRID.cols):
            raster.stamp_visit((i, j))
    node = TreeNode(0.0, (5, 5), raster)
    node.materialize(runtime)
    assert not node.dead_end
    assert node.untried
    assert all(c.fresh_px == 0 for c in node.untried)


def test_select_descends_by_ucb() -> None:
    runtime = uniform_runtime(FAST)
    raster = CoverageRaster(GRID)
    raster.stamp_visit((0, 0))
    root = TreeNode(0.0, (0, 0), raster)
    root.materialize(runtime)
    assert select(root, runtime, FAST.c_ucb) is root  # untried actions first
    rng = np.random.default_rng(0)
    while root.untried:
        child = expand(root, runtime, rng)
        backpropagate(child, 0.5)
    # bias one child: highest mean wins the descent
    best = root.children[2]
    backpropagate(best, 50.0)
    got = select(root, runtime, FAST.c_ucb)
    assert got is best or got.parent is best


def test_zero_wind_is_a_dead_end() -> None:
    runtime = uniform_runtime(FAST, wind_speed=0.0)
    raster = CoverageRaster(GRID)
    raster.stamp_visit((5, 5))
    node = TreeNode(0.0, (5, 5), raster)
    node.materialize(runtime)
    assert node.dead_end
    assert node.terminal(runtime)


def test_simulate_batch_scores() -> None:
    config = FAST
    runtime = uniform_runtime(config)
    raster = CoverageRaster(GRID)
    raster.stamp_visit((0, 0))
    node = TreeNode(0.0, (0, 0), raster)
    tasks = batch_tasks(config, decision=0, iteration=0)
    score = simulate_batch(node, runtime, tasks)
    assert score > 0.0
    # a fully covered start has nothing left to earn
    full = CoverageRaster(GRID)
    for i in range(GRID.rows):
        for j in range(GRID.cols):
            full.stamp_visit((i, j))
    done = TreeNode(0.0, (5, 5), full)
    assert simulate_batch(done, runtime, tasks) == 0.0


def test_simulate_batch_parallel_matches_serial() -> None:
    config = FAST
    runtime = uniform_runtime(config)
    raster = CoverageRaster(GRID)
    raster.stamp_visit((0, 0))
    node = TreeNode(0.0, (0, 0), raster)
    tasks = batch_tasks(config, decision=3, iteration=1)
    serial = simulate_batch(node, runtime, tasks, jobs=1)
    parallel = simulate_batch(node, runtime, tasks, jobs=2)
    assert parallel == serial


def test_batch_tasks_structure() -> None:
    config = PlannerConfig(n_iter=2, rollout_workers=3, rollouts_per_worker=2,
                           seed=7)
    tasks = batch_tasks(config, decision=1, iteration=4)
    assert len(tasks) == 6
    lo, hi = config.score.p_range
    for p, key in tasks:
        assert lo <= p <= hi
        assert key[0] == 7
    # p is drawn per worker, shared by that worker's rollouts
    assert tasks[0][0] == tasks[1][0]
    assert tasks[2][0] == tasks[3][0]
    assert len({key for _, key in tasks}) == 6
    assert tasks == batch_tasks(config, decision=1, iteration=4)
    assert tasks != batch_tasks(config, decision=1, iteration=5)


def test_plan_phase_detects_wrong_forecast() -> None:
    config = PlannerConfig(n_iter=1, rollout_workers=1, rollouts_per_worker=1,
                           k_horizon=0, seed=3)
    env = EnvState(grid=GRID, delta_t=config.delta_t, rng_seed=3)
    raster = CoverageRaster(GRID)
    raster.stamp_visit(env.vessel_cell)
    shape = (GRID.rows, GRID.cols)
    fake = ForecastSequence(0, 0, (FlowField(
        0, np.full(shape, 5.0), np.full(shape, 90.0),
        np.zeros(shape), np.zeros(shape)),))
    with pytest.raises(CommitMismatch):
        plan_phase(env, raster, fake, config, default_polar(),
                   position_weights(GRID))


def test_run_mcts_is_deterministic() -> None:
    config = PlannerConfig(n_iter=4, rollout_workers=2, rollouts_per_worker=1,
                           k_horizon=0)
    a = run_mcts(2, config, SMALL)
    b = run_mcts(2, config, SMALL)
    assert a.trace == b.trace
    assert a.status == b.status
    assert a.finish_time_s == b.finish_time_s
    assert a.coverage_pct == b.coverage_pct
    assert a.stage_snapshots == b.stage_snapshots


def test_run_mcts_mission_invariants() -> None:
    config = PlannerConfig(n_iter=4, rollout_workers=2, rollouts_per_worker=1,
                           k_horizon=0)
    res = run_mcts(2, config, SMALL)
    assert res.method == "mcts_k0"
    assert res.status in (STATUS_COMPLETE, STATUS_ABORTED, STATUS_TIMEOUT)
    assert res.await_time_s == 0.0  # the planner never waits
    cum = [row.cum_coverage_pct for row in res.trace]
    assert cum == sorted(cum)
    assert res.distance_m == pytest.approx(sum(
        math.hypot(row.to_cell[0] - row.from_cell[0],
                   row.to_cell[1] - row.from_cell[1]) * 100.0
        for row in res.trace))
    for row in res.trace:
        assert row.action_id != 0
        assert row.time_s > 0.0
    if res.status == STATUS_COMPLETE:
        assert res.coverage_pct >= config.eta * 100.0
    assert res.final_counts is not None
    assert res.final_counts.sum() > 0


def test_run_mcts_dead_start_aborts() -> None:
    # this seed's opening field pins the vessel in the start corner
    config = PlannerConfig(n_iter=2, rollout_workers=1, rollouts_per_worker=1,
                           k_horizon=0)
    res = run_mcts(42, config, GRID)
    assert res.status == STATUS_ABORTED
    assert res.trace == []
    assert res.finish_time_s == 0.0
    assert res.coverage_pct == res.start_coverage_pct


def test_run_mcts_stage_cap_times_out() -> None:
    config = PlannerConfig(n_iter=2, rollout_workers=1, rollouts_per_worker=1,
                           k_horizon=0, max_stages=1)
    res = run_mcts(40, config, GRID)
    assert res.status == STATUS_TIMEOUT
    assert res.coverage_pct < config.eta * 100.0
