"""Boat speed lookup from a velocity prediction table.

A polar table maps (true wind speed, true wind angle) to achievable boat
speed. Lookups interpolate bilinearly between breakpoints and clamp at the
table edges on both axes; exactly zero wind gives zero boat speed.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

DEFAULT_TWA = (40.0, 52.0, 60.0, 75.0, 90.0, 110.0, 120.0, 135.0, 150.0, 165.0, 180.0)
DEFAULT_TWS = (2.0, 4.0, 6.0, 8.0, 10.0)

# Dimensionless speed fraction: piecewise linear through the anchor points
# (40deg, 0.42), (110deg, 0.74), (180deg, 0.48).
_F_ANCHORS_TWA = (40.0, 110.0, 180.0)
_F_ANCHORS_VAL = (0.42, 0.74, 0.48)


@dataclass(frozen=True)
class PolarTable:
    """Speed table over true wind speed (columns) and angle (rows)."""

    twa_deg: np.ndarray
    tws_ms: np.ndarray
    speeds: np.ndarray  # shape (len(twa), len(tws))

    def __post_init__(self) -> None:
        twa = np.asarray(self.twa_deg, dtype=float)
        tws = np.asarray(self.tws_ms, dtype=float)
        spd = np.asarray(self.speeds, dtype=float)
        object.__setattr__(self, "twa_deg", twa)
        object.__setattr__(self, "tws_ms", tws)
        object.__setattr__(self, "speeds", spd)
        if twa.ndim != 1 or tws.ndim != 1:
            raise ValueError("breakpoint axes must be one dimensional")
        if spd.shape != (twa.size, tws.size):
            raise ValueError(
                f"speed grid shape {spd.shape} does not match breakpoints "
                f"({twa.size}, {tws.size})"
            )
        if twa.size < 2 or tws.size < 1:
            raise ValueError("need at least two angle rows and one speed column")
        if np.any(np.diff(twa) <= 0) or (tws.size > 1 and np.any(np.diff(tws) <= 0)):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(spd < 0):
            raise ValueError("boat speeds must be non-negative")
        for arr in (twa, tws, spd):
            arr.setflags(write=False)

    def vpp(self, tws: float, twa: float) -> float:
        """Interpolated boat speed for a wind speed and angle."""
        if tws <= 0.0:
            return 0.0
        twa = float(np.clip(twa, self.twa_deg[0], self.twa_deg[-1]))
        row = _interp_axis(self.twa_deg, twa)
        tws_c = float(np.clip(tws, self.tws_ms[0], self.tws_ms[-1]))
        col_i, col_f = _interp_axis(self.tws_ms, tws_c)
        return _interp_row(self.speeds, row, col_i, col_f)


def _interp_axis(axis: np.ndarray, value: float) -> tuple[int, float]:
    """Index and fraction for linear interpolation along a breakpoint axis."""
    idx = int(np.searchsorted(axis, value, side="right")) - 1
    idx = max(0, min(idx, axis.size - 2)) if axis.size > 1 else 0
    if axis.size == 1:
        return 0, 0.0
    span = axis[idx + 1] - axis[idx]
    frac = (value - axis[idx]) / span
    return idx, float(np.clip(frac, 0.0, 1.0))


def _interp_row(speeds: np.ndarray, row: tuple[int, float], col_i: int, col_f: float) -> float:
    ri, rf = row
    if speeds.shape[1] == 1:
        lo = speeds[ri, 0]
        hi = speeds[ri + 1, 0]
        return float(lo * (1 - rf) + hi * rf)
    a = speeds[ri, col_i] * (1 - col_f) + speeds[ri, col_i + 1] * col_f
    b = speeds[ri + 1, col_i] * (1 - col_f) + speeds[ri + 1, col_i + 1] * col_f
    return float(a * (1 - rf) + b * rf)


def default_polar() -> PolarTable:
    """Built-in table: boat speed = tws * f(twa) at every breakpoint pair."""
    twa = np.array(DEFAULT_TWA)
    tws = np.array(DEFAULT_TWS)
    f = np.interp(twa, _F_ANCHORS_TWA, _F_ANCHORS_VAL)
    speeds = np.outer(f, tws)
    return PolarTable(twa, tws, speeds)


def load_polar_csv(path) -> PolarTable:
    """Read a table: first row TWS breakpoints, first column TWA breakpoints."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_polar_csv(text)


def parse_polar_csv(text: str) -> PolarTable:
    rows = [line.strip() for line in io.StringIO(text) if line.strip()]
    if len(rows) < 3:
        raise ValueError("polar table needs a header row and at least two angle rows")
    header = rows[0].split(",")
    try:
        tws = np.array([float(v) for v in header[1:]])
    except ValueError as exc:
        raise ValueError(f"bad TWS header in polar table: {rows[0]!r}") from exc
    twa = []
    speeds = []
    for line in rows[1:]:
        parts = line.split(",")
        if len(parts) != tws.size + 1:
            raise ValueError(f"polar row has {len(parts) - 1} speeds, expected {tws.size}: {line!r}")
        try:
            twa.append(float(parts[0]))
            speeds.append([float(v) for v in parts[1:]])
        except ValueError as exc:
            raise ValueError(f"bad numeric value in polar row: {line!r}") from exc
    return PolarTable(np.array(twa), tws, np.array(speeds))


def save_polar_csv(path, table: PolarTable) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("," + ",".join(f"{v:g}" for v in table.tws_ms) + "\n")
        for r, angle in enumerate(table.twa_deg):
            row = ",".join(f"{v:.4f}" for v in table.speeds[r])
            fh.write(f"{angle:g},{row}\n")
