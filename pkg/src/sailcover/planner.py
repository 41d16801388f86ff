"""Phase-wise Monte Carlo tree search over the coverage mission.

One planning phase spans one field stage. Within a phase the planner runs
repeated decision rounds: a fixed number of tree iterations (select by UCB,
expand one action sampled proportionally to its heuristic score, roll out a
batch of forecast-driven simulations, back up the mean), then commits the
root child with the best mean score, executes it against the true
environment, and promotes that child's subtree. The tree is rebuilt at
every stage boundary because the fields, and with them every cached
traversal, change there.

Rollouts simulate under the forecast field of whatever stage the simulated
clock is in, never past the last forecast stage. Feasibility always uses
the full stage duration as the time budget: an action may finish past the
stage wall, and the overrun then eats into the next phase's planning
window.

Everything random descends from (mission seed, decision index, iteration,
worker, rollout) through named streams, so a mission trace is a pure
function of its seed and configuration no matter how rollouts are
scheduled.
"""

from __future__ import annotations

import math
import multiprocessing as mp
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .coverage import CoverageRaster, DEFAULT_D_OBS, DEFAULT_PIXEL_SIZE, redundancy_score
from .env import EnvState, FieldBounds, FlowField, ForecastSequence, GridSpec, make_forecast
from .kinematics import ACTIONS, DEFAULT_NO_GO_DEG, DEFAULT_V_FLOOR, ActionSpec, traverse
from .mission import STATUS_ABORTED, STATUS_COMPLETE, STATUS_TIMEOUT, MissionResult, TraceRow
from .morphology import region_report, would_split_uncovered
from .polar import PolarTable, default_polar
from .scoring import PositionWeights, ScoreParams, position_weights, rollout_reward

_EXPAND_TAG = 0xE8BA2D
_ROLLOUT_TAG = 0x8011AD
_P_TAG = 0x50F7E

DEFAULT_MAX_STAGES = 120


@dataclass(frozen=True)
class PlannerConfig:
    """Search and mission parameters; defaults match the reference setup."""

    n_iter: int = 64
    rollout_workers: int = 96
    rollouts_per_worker: int = 3
    c_ucb: float = 2.5
    k_horizon: int = 1
    delta_t: float = 300.0
    eta: float = 0.96
    a_thres_m2: float = 3000.0
    seed: int = 0
    jobs: int = 1
    max_stages: int = DEFAULT_MAX_STAGES
    pixel_size_m: float = DEFAULT_PIXEL_SIZE
    d_obs_m: float = DEFAULT_D_OBS
    v_floor: float = DEFAULT_V_FLOOR
    no_go_deg: float = DEFAULT_NO_GO_DEG
    eps_v: float = 0.05
    eps_theta_deg: float = 5.0
    bounds: FieldBounds = FieldBounds()
    score: ScoreParams = ScoreParams()

    def __post_init__(self) -> None:
        for name in ("n_iter", "rollout_workers", "rollouts_per_worker"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.c_ucb <= 0.0:
            raise ValueError("c_ucb must be positive")
        if self.k_horizon < 0:
            raise ValueError("k_horizon must be >= 0")
        if self.eps_v < 0.0 or self.eps_theta_deg < 0.0:
            raise ValueError("forecast noise bounds must be >= 0")
        if not 0.0 < self.eta <= 1.0:
            raise ValueError("eta must be in (0, 1]")


@dataclass(frozen=True)
class Candidate:
    """A feasible, non-splitting action with its precomputed score pieces."""

    action: ActionSpec
    total_time_s: float
    end_cell: tuple[int, int]
    fresh_px: int
    regularity: float
    position: float

    def score(self, pixel_area_m2: float, p: float) -> float:
        if self.fresh_px == 0:
            return 0.0
        efficiency = self.fresh_px * pixel_area_m2 / self.total_time_s
        return efficiency * self.regularity ** p * self.position


class PhaseRuntime:
    """Per-phase scoring context: static inputs plus memo tables.

    Traversal times depend only on (stage, cell) because the phase's
    forecast fields are fixed; candidate shape metrics depend only on the
    coverage mask bytes and the stamped cell. Both are memoized here. The
    memos never change a value, only its cost, so sharing or discarding
    them cannot affect results.
    """

    def __init__(self, grid: GridSpec, polar: PolarTable, forecast: ForecastSequence,
                 config: PlannerConfig, weights: PositionWeights) -> None:
        self.grid = grid
        self.polar = polar
        self.forecast = forecast
        self.config = config
        self.weights = weights
        self.phase_stage = forecast.stage
        self._kinematics: dict[tuple[int, int, int], tuple[tuple[ActionSpec, float], ...]] = {}
        self._morph: dict[tuple[int, int, int], tuple[int, float, int]] = {}
        self._snap_reg: dict[int, float] = {}
        self._snap_u: dict[int, float] = {}

    def __getstate__(self):  # memo tables stay per-process
        state = self.__dict__.copy()
        state["_kinematics"] = {}
        state["_morph"] = {}
        state["_snap_reg"] = {}
        state["_snap_u"] = {}
        return state

    def field_at(self, stage: int) -> FlowField:
        return self.forecast.field_for(stage - self.phase_stage)

    def _feasible_moves(self, stage: int, cell: tuple[int, int]
                        ) -> tuple[tuple[ActionSpec, float], ...]:
        key = (stage, cell[0], cell[1])
        hit = self._kinematics.get(key)
        if hit is None:
            fld = self.field_at(stage)
            cfg = self.config
            moves = []
            for action in ACTIONS:
                tr = traverse(self.grid, cell, fld, action, self.polar,
                              cfg.delta_t, cfg.v_floor, cfg.no_go_deg)
                if tr.feasible:
                    moves.append((action, tr.total_time_s))
            hit = tuple(moves)
            self._kinematics[key] = hit
        return hit

    def _stamp_metrics(self, raster: CoverageRaster, cov_hash: int,
                       cell: tuple[int, int]) -> tuple[int, float, int]:
        key = (cov_hash, cell[0], cell[1])
        hit = self._morph.get(key)
        if hit is None:
            fresh = raster.new_pixels(cell)
            if fresh == 0:
                # no new pixels: uncovered region unchanged, cannot split
                hit = (0, 0.0, 0)
            else:
                post = raster.covered.copy()
                win, twin = raster._window(cell)
                post[win] |= raster.template[twin]
                rep = region_report(post, raster.pixel_area_m2,
                                    self.config.a_thres_m2)
                hit = (fresh, rep.regularity, rep.uncovered_big_components)
            self._morph[key] = hit
        return hit

    def candidates(self, stage: int, cell: tuple[int, int],
                   raster: CoverageRaster, cov_hash: int) -> tuple[Candidate, ...]:
        """Feasible actions minus those that would split the uncovered
        region into two components above the area threshold."""
        out = []
        for action, total in self._feasible_moves(stage, cell):
            end = action.apply(cell)
            fresh, regularity, big = self._stamp_metrics(raster, cov_hash, end)
            if big >= 2:
                continue
            out.append(Candidate(action, total, end, fresh, regularity,
                                 float(self.weights.term[end])))
        return tuple(out)

    def snapshot_regularity(self, raster: CoverageRaster, cov_hash: int) -> float:
        hit = self._snap_reg.get(cov_hash)
        if hit is None:
            hit = region_report(raster.covered, raster.pixel_area_m2,
                                self.config.a_thres_m2).regularity
            self._snap_reg[cov_hash] = hit
        return hit

    def snapshot_utility(self, raster: CoverageRaster) -> float:
        key = hash(raster.counts.tobytes())
        hit = self._snap_u.get(key)
        if hit is None:
            hit = redundancy_score(raster.counts, raster.pixels_per_cell,
                                   self.config.score.alpha)
            self._snap_u[key] = hit
        return hit


def _cov_hash(raster: CoverageRaster) -> int:
    return hash(raster.covered.tobytes())


class TreeNode:
    """Search-tree node over a simulated mission state."""

    __slots__ = ("t", "cell", "raster", "cov_hash", "coverage", "incoming",
                 "in_time", "parent", "children", "untried", "n", "s_bar",
                 "_materialized", "dead_end")

    def __init__(self, t: float, cell: tuple[int, int], raster: CoverageRaster,
                 parent: Optional["TreeNode"] = None,
                 incoming: Optional[ActionSpec] = None, in_time: float = 0.0) -> None:
        self.t = t
        self.cell = cell
        self.raster = raster
        self.cov_hash = _cov_hash(raster)
        self.coverage = raster.coverage_fraction()
        self.incoming = incoming
        self.in_time = in_time
        self.parent = parent
        self.children: list[TreeNode] = []
        self.untried: list[Candidate] = []
        self.n = 0
        self.s_bar = 0.0
        self._materialized = False
        self.dead_end = False

    def reached(self, eta: float) -> bool:
        return self.coverage >= eta

    def at_horizon(self, runtime: PhaseRuntime) -> bool:
        cfg = runtime.config
        wall = (runtime.phase_stage + cfg.k_horizon + 1) * cfg.delta_t
        return self.t >= wall

    def terminal(self, runtime: PhaseRuntime) -> bool:
        if self.reached(runtime.config.eta) or self.at_horizon(runtime):
            return True
        self.materialize(runtime)
        return self.dead_end

    def materialize(self, runtime: PhaseRuntime) -> None:
        if self._materialized:
            return
        stage = int(self.t // runtime.config.delta_t)
        cands = runtime.candidates(stage, self.cell, self.raster, self.cov_hash)
        # sampling is proportional to the heuristic, and a zero-gain move
        # scores zero: it can never be drawn while any positive draw exists,
        # so such moves become expandable only when nothing gains
        gaining = [c for c in cands if c.fresh_px > 0]
        self.untried = gaining if gaining else list(cands)
        self.dead_end = not cands
        self._materialized = True

    def expandable(self, runtime: PhaseRuntime) -> bool:
        if self.reached(runtime.config.eta) or self.at_horizon(runtime):
            return False
        self.materialize(runtime)
        return bool(self.untried)


def ucb(node: TreeNode, parent_visits: int, c: float) -> float:
    """Mean score plus the exploration bonus; unvisited nodes sort first."""
    if node.n == 0:
        return math.inf
    return node.s_bar + c * math.sqrt(math.log(parent_visits) / node.n)


def select(root: TreeNode, runtime: PhaseRuntime, c: float) -> TreeNode:
    """Descend by UCB until a node with untried actions or a terminal."""
    node = root
    while True:
        if node.terminal(runtime):
            return node
        if node.untried:
            return node
        if not node.children:
            return node
        node = max(node.children,
                   key=lambda ch: (ucb(ch, node.n, c), -ch.incoming.action_id))


def _make_child(node: TreeNode, cand: Candidate) -> TreeNode:
    raster = node.raster.copy()
    raster.stamp_visit(cand.end_cell)
    return TreeNode(node.t + cand.total_time_s, cand.end_cell, raster,
                    parent=node, incoming=cand.action, in_time=cand.total_time_s)


def expand(node: TreeNode, runtime: PhaseRuntime, rng: np.random.Generator) -> TreeNode:
    """Try one untried action, sampled proportionally to its score."""
    node.materialize(runtime)
    cands = node.untried
    if not cands:
        raise RuntimeError("expand called on a node without untried actions")
    pa = node.raster.pixel_area_m2
    weights = [c.score(pa, 1.0) for c in cands]
    total = sum(weights)
    if total <= 0.0:
        idx = int(rng.integers(len(cands)))
    else:
        draw = rng.random() * total
        acc = 0.0
        idx = len(cands) - 1
        for i, w in enumerate(weights):
            acc += w
            if draw < acc:
                idx = i
                break
    cand = cands.pop(idx)
    child = _make_child(node, cand)
    node.children.append(child)
    return child


def backpropagate(leaf: TreeNode, score: float) -> None:
    node: Optional[TreeNode] = leaf
    while node is not None:
        node.n += 1
        node.s_bar += (score - node.s_bar) / node.n
        node = node.parent


# ---------------------------------------------------------------------------
# rollouts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _BatchSpec:
    """Everything a rollout needs beyond its own (p, seed) task."""

    runtime: PhaseRuntime
    t0: float
    cell0: tuple[int, int]
    raster: CoverageRaster
    cov_hash0: int


def rollout(spec: _BatchSpec, p: float, rng: np.random.Generator) -> float:
    """One forecast-driven simulation from the node state to the horizon.

    Epsilon-greedy stepping over the non-splitting feasible actions; the
    reward is the discounted staged sum with snapshots at stage walls
    (before the stamp when an action strictly crosses a wall, after it
    when the arrival lands exactly on one). A simulation that completes
    coverage mid-stage scores that final partial stage as its own
    snapshot; one that dead-ends banks only the walls it reached, so
    trajectories that trap themselves early are worth nothing.
    """
    runtime = spec.runtime
    cfg = runtime.config
    score = cfg.score
    dt = cfg.delta_t
    horizon_wall = (runtime.phase_stage + cfg.k_horizon + 1) * dt

    t = spec.t0
    t_start = t
    cell = spec.cell0
    raster = spec.raster.copy()
    cov_hash = spec.cov_hash0
    coverage = raster.coverage_fraction()
    pa = raster.pixel_area_m2

    snaps: list[tuple[float, float, float]] = []
    last_snap_t = t_start

    while t < horizon_wall and coverage < cfg.eta:
        stage = int(t // dt)
        cands = runtime.candidates(stage, cell, raster, cov_hash)
        if not cands:
            break  # dead-end: score the trajectory so far
        if rng.random() < score.epsilon:
            pick = cands[int(rng.integers(len(cands)))]
        else:
            weights = [c.score(pa, p) for c in cands]
            total = sum(weights)
            if total <= 0.0:
                pick = cands[int(rng.integers(len(cands)))]
            else:
                draw = rng.random() * total
                acc = 0.0
                pick = cands[-1]
                for c, w in zip(cands, weights):
                    acc += w
                    if draw < acc:
                        pick = c
                        break

        next_wall = (stage + 1) * dt
        t1 = t + pick.total_time_s
        if t1 > next_wall:
            # mid-traversal at the wall: snapshot excludes the pending stamp
            snaps.append((runtime.snapshot_regularity(raster, cov_hash),
                          runtime.snapshot_utility(raster),
                          next_wall - t_start))
            last_snap_t = next_wall
        raster.stamp_visit(pick.end_cell)
        cov_hash = _cov_hash(raster)
        coverage = raster.coverage_fraction()
        t = t1
        cell = pick.end_cell
        if t1 == next_wall:
            snaps.append((runtime.snapshot_regularity(raster, cov_hash),
                          runtime.snapshot_utility(raster),
                          next_wall - t_start))
            last_snap_t = next_wall

    if coverage >= cfg.eta and t < horizon_wall and t > last_snap_t:
        snaps.append((runtime.snapshot_regularity(raster, cov_hash),
                      runtime.snapshot_utility(raster),
                      t - t_start))
    return rollout_reward(snaps, score.beta)


def _rollout_task(spec: _BatchSpec, task: tuple[float, tuple[int, ...]]) -> float:
    p, seed_key = task
    rng = np.random.default_rng(np.random.SeedSequence(seed_key))
    return rollout(spec, p, rng)


_POOL_SPEC: Optional[_BatchSpec] = None


def _pool_init(spec: _BatchSpec) -> None:
    global _POOL_SPEC
    _POOL_SPEC = spec


def _pool_rollout(task: tuple[float, tuple[int, ...]]) -> float:
    assert _POOL_SPEC is not None
    return _rollout_task(_POOL_SPEC, task)


def batch_tasks(config: PlannerConfig, decision: int, iteration: int
                ) -> list[tuple[float, tuple[int, ...]]]:
    """(p, rollout seed key) per rollout; p is drawn once per worker."""
    lo, hi = config.score.p_range
    tasks = []
    for w in range(config.rollout_workers):
        p_rng = np.random.default_rng(
            np.random.SeedSequence((config.seed, _P_TAG, decision, iteration, w)))
        p = float(p_rng.uniform(lo, hi))
        for j in range(config.rollouts_per_worker):
            key = (config.seed, _ROLLOUT_TAG, decision, iteration, w, j)
            tasks.append((p, key))
    return tasks


def simulate_batch(node: TreeNode, runtime: PhaseRuntime,
                   tasks: Sequence[tuple[float, tuple[int, ...]]],
                   jobs: int = 1) -> float:
    """Mean rollout score over the batch, independent of scheduling."""
    if not tasks:
        raise ValueError("simulate_batch needs at least one task")
    spec = _BatchSpec(runtime=runtime, t0=node.t, cell0=node.cell,
                      raster=node.raster, cov_hash0=node.cov_hash)
    if jobs <= 1:
        scores = [_rollout_task(spec, task) for task in tasks]
    else:
        ctx = mp.get_context("fork")
        with ctx.Pool(jobs, initializer=_pool_init, initargs=(spec,)) as pool:
            scores = pool.map(_pool_rollout, list(tasks))
    return sum(scores) / len(scores)


# ---------------------------------------------------------------------------
# phase planning and the mission loop
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CommittedStep:
    stage: int
    decision_idx: int
    action: ActionSpec
    from_cell: tuple[int, int]
    to_cell: tuple[int, int]
    time_s: float
    distance_m: float
    coverage_pct: float


@dataclass
class PhaseResult:
    committed: list[CommittedStep]
    aborted: bool = False


class CommitMismatch(RuntimeError):
    """True-environment execution diverged from the tree's prediction."""


def plan_phase(env: EnvState, raster: CoverageRaster, forecast: ForecastSequence,
               config: PlannerConfig, polar: PolarTable,
               weights: PositionWeights, decision_base: int = 0) -> PhaseResult:
    """Run decision rounds until the phase clock expires or coverage is met."""
    if forecast.stage != env.stage_index:
        raise ValueError(f"forecast stage {forecast.stage} != env stage {env.stage_index}")
    runtime = PhaseRuntime(env.grid, polar, forecast, config, weights)
    wall = (forecast.stage + 1) * config.delta_t
    result = PhaseResult(committed=[])
    decision = decision_base

    root = TreeNode(env.t, env.vessel_cell, raster.copy())
    while env.t < wall and raster.coverage_fraction() < config.eta:
        root.materialize(runtime)
        if root.dead_end:
            result.aborted = True
            return result

        for iteration in range(config.n_iter):
            leaf = select(root, runtime, config.c_ucb)
            if leaf.expandable(runtime):
                rng = np.random.default_rng(np.random.SeedSequence(
                    (config.seed, _EXPAND_TAG, decision, iteration)))
                leaf = expand(leaf, runtime, rng)
            score = simulate_batch(leaf, runtime, batch_tasks(config, decision, iteration),
                                   jobs=config.jobs)
            backpropagate(leaf, score)

        if not root.children:
            # every iteration landed on a terminal descendant; nothing to commit
            result.aborted = True
            return result
        best = max(root.children,
                   key=lambda ch: (ch.s_bar, ch.n, -ch.incoming.action_id))

        # execute against the true environment; stage 0 of the forecast is
        # exact, so the tree's prediction must match to the last bit
        if would_split_uncovered(raster, [best.cell], config.a_thres_m2):
            raise CommitMismatch(f"commit would split uncovered region at {best.cell}")
        tr = traverse(env.grid, env.vessel_cell, env.field(), best.incoming,
                      polar, config.delta_t, config.v_floor, config.no_go_deg)
        if not tr.feasible or tr.total_time_s != best.in_time or tr.to_cell != best.cell:
            raise CommitMismatch(
                f"decision {decision}: tree predicted {best.in_time:.6f}s to {best.cell}, "
                f"truth gave {tr.total_time_s:.6f}s to {tr.to_cell}")
        env.t += tr.total_time_s
        env.vessel_cell = tr.to_cell
        raster.stamp_visit(tr.to_cell)
        if _cov_hash(raster) != best.cov_hash:
            raise CommitMismatch(f"decision {decision}: coverage mask diverged after commit")

        result.committed.append(CommittedStep(
            stage=forecast.stage, decision_idx=decision, action=best.incoming,
            from_cell=tr.from_cell, to_cell=tr.to_cell, time_s=tr.total_time_s,
            distance_m=tr.distance_m,
            coverage_pct=raster.coverage_fraction() * 100.0))
        decision += 1

        best.parent = None
        root = best
    return result


def run_mcts(seed: int, config: PlannerConfig, grid: GridSpec,
             polar: Optional[PolarTable] = None, method: Optional[str] = None,
             store_stage_counts: bool = False) -> MissionResult:
    """Full mission: plan phase by phase until coverage, abort, or timeout."""
    if polar is None:
        polar = default_polar()
    config = replace(config, seed=seed)
    env = EnvState(grid=grid, delta_t=config.delta_t, rng_seed=seed,
                   bounds=config.bounds)
    raster = CoverageRaster(grid, config.pixel_size_m, config.d_obs_m)
    raster.stamp_visit(env.vessel_cell)
    weights = position_weights(grid)
    if method is None:
        method = f"mcts_k{config.k_horizon}"

    result = MissionResult(
        method=method, seed=seed, status=STATUS_COMPLETE, coverage_pct=0.0,
        finish_time_s=0.0, await_time_s=0.0, distance_m=0.0,
        start_coverage_pct=raster.coverage_fraction() * 100.0)

    decision = 0
    while True:
        coverage = raster.coverage_fraction()
        if coverage >= config.eta:
            result.status = STATUS_COMPLETE
            break
        stage = env.stage_index
        if stage >= config.max_stages:
            result.status = STATUS_TIMEOUT
            break
        forecast = make_forecast(seed, stage, config.k_horizon, grid,
                                 config.bounds, eps_v=config.eps_v,
                                 eps_theta=config.eps_theta_deg)
        phase = plan_phase(env, raster, forecast, config, polar, weights,
                           decision_base=decision)
        for step in phase.committed:
            result.trace.append(TraceRow(
                stage=step.stage, decision_idx=step.decision_idx,
                action_id=step.action.action_id, from_cell=step.from_cell,
                to_cell=step.to_cell, time_s=step.time_s,
                cum_coverage_pct=step.coverage_pct))
            result.distance_m += step.distance_m
        decision += len(phase.committed)
        result.stage_snapshots.append(
            (stage, env.t, raster.coverage_fraction() * 100.0))
        if store_stage_counts:
            result.stage_counts[stage] = raster.counts.copy()
        if phase.aborted:
            result.status = STATUS_ABORTED
            break

    result.coverage_pct = raster.coverage_fraction() * 100.0
    result.finish_time_s = env.t
    result.final_counts = raster.counts.copy()
    return result
