"""Sailing kinematics: action geometry, speeds along a track, traversal times.

An action moves the vessel from one cell center to another along a straight
line. The offset set mixes rook, diagonal, and knight moves, 16 in all, so
tracks can cut across cells at several angles. A track is decomposed exactly
into per-cell segments; within a segment the flow is that cell's, so the
traversal time is a finite sum of segment length over effective speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .env import EnvState, FlowField, GridSpec
from .polar import PolarTable

DEFAULT_NO_GO_DEG = 40.0
DEFAULT_V_FLOOR = 0.05
NO_GO_PENALTY = 0.95

_OFFSETS = [(1, 0), (-1, 0), (0, 1), (0, -1),
            (1, 1), (1, -1), (-1, 1), (-1, -1),
            (1, 2), (1, -2), (-1, 2), (-1, -2),
            (2, 1), (2, -1), (-2, 1), (-2, -1)]


@dataclass(frozen=True)
class ActionSpec:
    """One center-to-center move: id, cell offset, and track geometry."""

    action_id: int
    di: int
    dj: int
    track_direction_deg: float
    length_cells: float

    def length_m(self, cell_size_m: float) -> float:
        return self.length_cells * cell_size_m

    def apply(self, cell: tuple[int, int]) -> tuple[int, int]:
        return (cell[0] + self.di, cell[1] + self.dj)


def _build_actions() -> tuple[ActionSpec, ...]:
    def angle(off: tuple[int, int]) -> float:
        return math.degrees(math.atan2(off[0], off[1])) % 360.0

    ordered = sorted(_OFFSETS, key=angle)
    return tuple(
        ActionSpec(k + 1, di, dj, angle((di, dj)), math.hypot(di, dj))
        for k, (di, dj) in enumerate(ordered)
    )


# Ids run 1..16 in order of increasing track direction; id 0 is reserved for
# the baseline's wait pseudo-action in trace files.
ACTIONS: tuple[ActionSpec, ...] = _build_actions()
ACTION_BY_ID = {a.action_id: a for a in ACTIONS}
ACTION_BY_OFFSET = {(a.di, a.dj): a for a in ACTIONS}


@dataclass(frozen=True)
class Segment:
    cell: tuple[int, int]
    length_m: float
    speed_ms: float
    time_s: float


@dataclass(frozen=True)
class TraversalResult:
    """Outcome of evaluating one action: either a timed path or a refusal."""

    feasible: bool
    from_cell: tuple[int, int]
    to_cell: tuple[int, int]
    distance_m: float
    total_time_s: float
    segments: tuple[Segment, ...]
    reason: str | None = None


def fold_angle(delta_deg: float) -> float:
    """Angular distance folded to [0, 180]."""
    d = abs(delta_deg) % 360.0
    return 360.0 - d if d > 180.0 else d


def actual_speed(polar: PolarTable, wind_speed: float, wind_dir: float,
                 track_dir: float, no_go_deg: float = DEFAULT_NO_GO_DEG) -> float:
    """Boat speed through the water for a track under a given wind.

    The relative angle is the distance between the wind FROM-bearing and the
    track direction; at or inside the no-go cone the boat is modeled as the
    best reachable point of sail at a 5 percent penalty.
    """
    if wind_speed <= 0.0:
        return 0.0
    alpha = fold_angle(wind_dir - track_dir)
    if alpha > no_go_deg:
        return polar.vpp(wind_speed, alpha)
    return NO_GO_PENALTY * polar.vpp(wind_speed, no_go_deg)


def effective_speed(v_actual: float, cur_speed: float, cur_dir: float,
                    track_dir: float) -> float:
    """Speed over ground along the track: boat speed plus the along-track
    current component. May be zero or negative against a strong current."""
    return v_actual + cur_speed * math.cos(math.radians(cur_dir - track_dir))


def decompose_track(grid: GridSpec, from_cell: tuple[int, int],
                    to_cell: tuple[int, int]) -> list[tuple[tuple[int, int], float]]:
    """Split the center-to-center segment into (cell, length_m) pieces.

    Crossing parameters are computed exactly for every grid line the segment
    meets; each interval between consecutive crossings is attributed to the
    cell containing its midpoint. A pass through a grid corner therefore
    yields the two diagonal cells only, and zero-length contacts never
    appear.
    """
    if from_cell == to_cell:
        raise ValueError("track endpoints must differ")
    cs = grid.cell_size_m
    ax, ay = grid.cell_center(from_cell)
    bx, by = grid.cell_center(to_cell)
    dx, dy = bx - ax, by - ay
    length = math.hypot(dx, dy)

    ts = [0.0, 1.0]
    for lo, hi, a, d in (((min(ax, bx), max(ax, bx), ax, dx)),
                         ((min(ay, by), max(ay, by), ay, dy))):
        if d == 0.0:
            continue
        first = math.floor(lo / cs) + 1
        last = math.ceil(hi / cs) - 1
        for m in range(first, last + 1):
            t = (m * cs - a) / d
            if 0.0 < t < 1.0:
                ts.append(t)
    ts.sort()

    out: list[tuple[tuple[int, int], float]] = []
    prev = ts[0]
    for t in ts[1:]:
        if t - prev <= 1e-12:
            prev = min(prev, t)
            continue
        mid = (prev + t) / 2.0
        mx, my = ax + mid * dx, ay + mid * dy
        cell = (int(my // cs), int(mx // cs))
        seg_len = (t - prev) * length
        if out and out[-1][0] == cell:
            out[-1] = (cell, out[-1][1] + seg_len)
        else:
            out.append((cell, seg_len))
        prev = t
    return out


_SEGMENT_CACHE: dict[tuple[int, int, float, int, int, int], tuple] = {}


def cached_segments(grid: GridSpec, from_cell: tuple[int, int],
                    action: ActionSpec) -> tuple[tuple[tuple[int, int], float], ...]:
    """Track decomposition memoized per grid geometry; flow independent."""
    key = (grid.rows, grid.cols, grid.cell_size_m, from_cell[0], from_cell[1], action.action_id)
    hit = _SEGMENT_CACHE.get(key)
    if hit is None:
        hit = tuple(decompose_track(grid, from_cell, action.apply(from_cell)))
        _SEGMENT_CACHE[key] = hit
    return hit


def traverse(grid: GridSpec, src: tuple[int, int], fld: FlowField,
             action: ActionSpec, polar: PolarTable, time_budget: float,
             v_floor: float = DEFAULT_V_FLOOR,
             no_go_deg: float = DEFAULT_NO_GO_DEG) -> TraversalResult:
    """Time one action from an arbitrary cell under one stage field.

    Infeasible when the destination leaves the grid, when any segment's
    effective speed drops to the floor or below, or when the summed time
    exceeds the budget (normally the stage duration).
    """
    dst = action.apply(src)
    dist = action.length_m(grid.cell_size_m)
    if not grid.contains(dst):
        return TraversalResult(False, src, dst, dist, math.inf, (), "off_grid")

    track_dir = action.track_direction_deg
    segs: list[Segment] = []
    total = 0.0
    for cell, seg_len in cached_segments(grid, src, action):
        i, j = cell
        v_act = actual_speed(polar, float(fld.wind_speed[i, j]), float(fld.wind_dir[i, j]),
                             track_dir, no_go_deg)
        v_eff = effective_speed(v_act, float(fld.cur_speed[i, j]), float(fld.cur_dir[i, j]),
                                track_dir)
        if v_eff <= v_floor:
            return TraversalResult(False, src, dst, dist, math.inf, (), "slow_segment")
        seg_t = seg_len / v_eff
        segs.append(Segment(cell, seg_len, v_eff, seg_t))
        total += seg_t
    if total > time_budget:
        return TraversalResult(False, src, dst, dist, total, tuple(segs), "over_budget")
    return TraversalResult(True, src, dst, dist, total, tuple(segs))


def evaluate_action(env: EnvState, fld: FlowField, action: ActionSpec,
                    polar: PolarTable, time_budget: float,
                    v_floor: float = DEFAULT_V_FLOOR,
                    no_go_deg: float = DEFAULT_NO_GO_DEG) -> TraversalResult:
    """Time the vessel's next action from its current cell; see traverse."""
    return traverse(env.grid, env.vessel_cell, fld, action, polar,
                    time_budget, v_floor, no_go_deg)
