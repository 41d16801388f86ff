"""Mission-level records shared by the planners and the harness.

A mission's externally visible product is its decision trace: one row per
executed action (or per wait, with action id 0), plus summary figures. The
trace row times are durations, so the absolute clock at any row is the
running sum of the rows before it plus its own.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

TRACE_HEADER = ("stage", "decision_idx", "action_id", "from_i", "from_j",
                "to_i", "to_j", "time_s", "cum_coverage")

STATUS_COMPLETE = "complete"
STATUS_ABORTED = "aborted"
STATUS_TIMEOUT = "timeout"

WAIT_ACTION_ID = 0


@dataclass(frozen=True)
class TraceRow:
    stage: int
    decision_idx: int
    action_id: int  # 0 marks a wait in place
    from_cell: tuple[int, int]
    to_cell: tuple[int, int]
    time_s: float
    cum_coverage_pct: float


@dataclass
class MissionResult:
    method: str
    seed: int
    status: str
    coverage_pct: float
    finish_time_s: float
    await_time_s: float
    distance_m: float
    trace: list[TraceRow] = field(default_factory=list)
    stage_snapshots: list[tuple[int, float, float]] = field(default_factory=list)
    start_coverage_pct: float = 0.0
    final_counts: np.ndarray | None = None
    stage_counts: dict[int, np.ndarray] = field(default_factory=dict)


def write_trace_csv(path, trace: list[TraceRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for row in trace:
            writer.writerow([
                row.stage, row.decision_idx, row.action_id,
                row.from_cell[0], row.from_cell[1],
                row.to_cell[0], row.to_cell[1],
                f"{row.time_s:.6f}", f"{row.cum_coverage_pct:.6f}",
            ])


def read_trace_csv(path) -> list[TraceRow]:
    out: list[TraceRow] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header: {header}")
        for rec in reader:
            out.append(TraceRow(
                stage=int(rec[0]), decision_idx=int(rec[1]),
                action_id=int(rec[2]),
                from_cell=(int(rec[3]), int(rec[4])),
                to_cell=(int(rec[5]), int(rec[6])),
                time_s=float(rec[7]), cum_coverage_pct=float(rec[8]),
            ))
    return out


def curve_points(result: MissionResult) -> list[tuple[float, float]]:
    """(t_s, coverage_pct) series: the initial stamp, then every trace row."""
    points = [(0.0, result.start_coverage_pct)]
    t = 0.0
    for row in result.trace:
        t += row.time_s
        points.append((t, row.cum_coverage_pct))
    return points
