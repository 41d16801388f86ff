"""Grid ocean environment: seeded flow fields, forecasts, and vessel state.

The ocean is a rows x cols grid of square cells. Each stage (a fixed interval
of delta_t seconds) has its own wind and current field, generated from the
mission seed so that any stage of any mission is reproducible in isolation.

Direction conventions, used consistently everywhere including file dumps:

* angles are degrees in [0, 360), measured from the +x axis (increasing
  column index) toward +y (increasing row index);
* wind directions are FROM-bearings (the bearing the wind blows from, i.e.
  meteorological convention);
* current directions are TO-bearings (the bearing the water moves toward,
  i.e. oceanographic convention).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import gaussian_filter

# Channel ids feed the sub-seed derivation; order is part of the format.
CHANNELS = ("wind_speed", "wind_dir", "cur_speed", "cur_dir")

# Mixing tags keep the field and forecast seed streams disjoint.
_FIELD_TAG = 0x51E1D
_FORECAST_TAG = 0xF0CA57

_SMOOTH_SIGMA = 1.0       # grid units
_SMOOTH_TRUNCATE = 3.0    # kernel radius = 3 sigma
_COARSE_SHAPE = (2, 2)
_COARSE_WEIGHT = 0.6
_FINE_WEIGHT = 0.4


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the cell grid."""

    rows: int
    cols: int
    cell_size_m: float

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one row and column")
        if self.cell_size_m <= 0:
            raise ValueError("cell_size_m must be positive")

    def contains(self, cell: tuple[int, int]) -> bool:
        i, j = cell
        return 0 <= i < self.rows and 0 <= j < self.cols

    def cell_center(self, cell: tuple[int, int]) -> tuple[float, float]:
        """Center of a cell in meters, as (x, y)."""
        i, j = cell
        return ((j + 0.5) * self.cell_size_m, (i + 0.5) * self.cell_size_m)

    @property
    def width_m(self) -> float:
        return self.cols * self.cell_size_m

    @property
    def height_m(self) -> float:
        return self.rows * self.cell_size_m

    @property
    def center_m(self) -> tuple[float, float]:
        return (self.width_m / 2.0, self.height_m / 2.0)


@dataclass(frozen=True)
class FieldBounds:
    """Value ranges the generated channels are rescaled to attain."""

    v_min: float = 0.2
    v_max: float = 5.0
    dir_lo: float = 0.0
    dir_hi: float = 359.0


@dataclass(frozen=True)
class FlowField:
    """Wind and current over the grid for one stage (read-only arrays)."""

    stage: int
    wind_speed: np.ndarray
    wind_dir: np.ndarray
    cur_speed: np.ndarray
    cur_dir: np.ndarray

    def __post_init__(self) -> None:
        for name in CHANNELS:
            arr = getattr(self, name)
            arr.setflags(write=False)

    def channel(self, name: str) -> np.ndarray:
        if name not in CHANNELS:
            raise KeyError(name)
        return getattr(self, name)


@dataclass(frozen=True)
class ForecastSequence:
    """Per-stage field estimates for stages [stage, stage + horizon]."""

    stage: int
    horizon: int
    stages: tuple[FlowField, ...]

    def field_for(self, k: int) -> FlowField:
        """Forecast field k stages ahead of the sequence's base stage."""
        if not 0 <= k <= self.horizon:
            raise IndexError(f"forecast lead {k} outside [0, {self.horizon}]")
        return self.stages[k]


def _bilinear_upsample(coarse: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Corner-aligned bilinear interpolation of a small grid onto rows x cols."""
    cr, cc = coarse.shape
    if rows == 1:
        u = np.zeros(1)
    else:
        u = np.linspace(0.0, cr - 1.0, rows)
    if cols == 1:
        v = np.zeros(1)
    else:
        v = np.linspace(0.0, cc - 1.0, cols)
    i0 = np.minimum(u.astype(np.int64), cr - 2) if cr > 1 else np.zeros(rows, np.int64)
    j0 = np.minimum(v.astype(np.int64), cc - 2) if cc > 1 else np.zeros(cols, np.int64)
    fu = (u - i0)[:, None]
    fv = (v - j0)[None, :]
    a = coarse[i0][:, j0]
    b = coarse[i0][:, np.minimum(j0 + 1, cc - 1)]
    c = coarse[np.minimum(i0 + 1, cr - 1)][:, j0]
    d = coarse[np.minimum(i0 + 1, cr - 1)][:, np.minimum(j0 + 1, cc - 1)]
    return a * (1 - fu) * (1 - fv) + b * (1 - fu) * fv + c * fu * (1 - fv) + d * fu * fv


def _rescale(values: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Affine map so the array minimum lands on lo and the maximum on hi."""
    vmin = float(values.min())
    vmax = float(values.max())
    if vmax == vmin:
        return np.full_like(values, (lo + hi) / 2.0)
    t = (values - vmin) / (vmax - vmin)
    return lo * (1.0 - t) + hi * t


def generate_scalar_field(
    seed: int | np.random.SeedSequence,
    rows: int,
    cols: int,
    lo: float,
    hi: float,
) -> np.ndarray:
    """One smooth random scalar field on the grid, attaining lo and hi exactly.

    Two spatial scales are mixed: a 2x2 noise grid, Gaussian smoothed and
    bilinearly upsampled (weight 0.6), and full-resolution noise, Gaussian
    smoothed (weight 0.4). Both smoothing passes use sigma = 1.0 grid units,
    a 3 sigma kernel radius, and reflected boundaries. The mix is then
    affinely rescaled onto [lo, hi]. Deterministic in the seed.
    """
    if hi < lo:
        raise ValueError("hi must be >= lo")
    rng = np.random.default_rng(seed)
    coarse = rng.random(_COARSE_SHAPE)
    fine = rng.random((rows, cols))
    coarse = gaussian_filter(coarse, sigma=_SMOOTH_SIGMA, truncate=_SMOOTH_TRUNCATE, mode="reflect")
    fine = gaussian_filter(fine, sigma=_SMOOTH_SIGMA, truncate=_SMOOTH_TRUNCATE, mode="reflect")
    mixed = _COARSE_WEIGHT * _bilinear_upsample(coarse, rows, cols) + _FINE_WEIGHT * fine
    return _rescale(mixed, lo, hi)


def _channel_seed(seed: int, stage: int, channel: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((seed, _FIELD_TAG, stage, channel))


def generate_stage_fields(
    seed: int,
    stage: int,
    grid: GridSpec,
    bounds: FieldBounds = FieldBounds(),
) -> FlowField:
    """True wind and current field for one stage.

    Each channel is generated from its own sub-seed, a splittable mix of
    (seed, stage, channel id), so any field is addressable without
    generating its predecessors. Speeds attain [v_min, v_max] exactly;
    directions are generated on [dir_lo, dir_hi] and wrapped to [0, 360).
    """
    if stage < 0:
        raise ValueError("stage must be >= 0")
    arrays = []
    for ch, name in enumerate(CHANNELS):
        if name.endswith("_speed"):
            lo, hi = bounds.v_min, bounds.v_max
        else:
            lo, hi = bounds.dir_lo, bounds.dir_hi
        arr = generate_scalar_field(_channel_seed(seed, stage, ch), grid.rows, grid.cols, lo, hi)
        if name.endswith("_dir"):
            arr = np.mod(arr, 360.0)
        arrays.append(arr)
    return FlowField(stage, *arrays)


def make_forecast(
    seed: int,
    stage: int,
    horizon: int,
    grid: GridSpec,
    bounds: FieldBounds = FieldBounds(),
    eps_v: float = 0.05,
    eps_theta: float = 5.0,
) -> ForecastSequence:
    """Forecast fields for stages stage .. stage + horizon.

    Lead k = 0 is the true field of the current stage, exactly. For k > 0
    the true field of stage + k is degraded: each cell's speed is scaled by
    a uniform draw from [1 - k*eps_v, 1 + k*eps_v] (clamped to stay
    positive) and each direction offset by a uniform draw from
    [-k*eps_theta, +k*eps_theta], wrapped. Every draw is deterministic in
    (seed, stage, k, cell, channel), so refreshing the forecast at a later
    stage yields fresh noise.
    """
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    fields: list[FlowField] = []
    for k in range(horizon + 1):
        truth = generate_stage_fields(seed, stage + k, grid, bounds)
        if k == 0:
            fields.append(truth)
            continue
        noisy = {}
        for ch, name in enumerate(CHANNELS):
            rng = np.random.default_rng(
                np.random.SeedSequence((seed, _FORECAST_TAG, stage, k, ch))
            )
            draw = rng.random((grid.rows, grid.cols))
            true_arr = truth.channel(name)
            if name.endswith("_speed"):
                factor = 1.0 + k * eps_v * (2.0 * draw - 1.0)
                noisy[name] = np.maximum(true_arr * factor, 1e-12)
            else:
                offset = k * eps_theta * (2.0 * draw - 1.0)
                noisy[name] = np.mod(true_arr + offset, 360.0)
        fields.append(FlowField(truth.stage, noisy["wind_speed"], noisy["wind_dir"],
                                noisy["cur_speed"], noisy["cur_dir"]))
    return ForecastSequence(stage, horizon, tuple(fields))


@dataclass
class EnvState:
    """Mutable mission state: the clock, the vessel cell, and cached fields.

    stage_index is always floor(t / delta_t); time advances only through
    action execution, so the caller rolls the clock and this object keeps
    the field cache in step.
    """

    grid: GridSpec
    delta_t: float
    rng_seed: int
    bounds: FieldBounds = FieldBounds()
    t: float = 0.0
    vessel_cell: tuple[int, int] = (0, 0)
    _fields: dict[int, FlowField] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.delta_t <= 0:
            raise ValueError("delta_t must be positive")
        if not self.grid.contains(self.vessel_cell):
            raise ValueError(f"vessel cell {self.vessel_cell} outside grid")

    @property
    def stage_index(self) -> int:
        return int(self.t // self.delta_t)

    def field(self, stage: int | None = None) -> FlowField:
        """True field for a stage (default: the current one), cached."""
        if stage is None:
            stage = self.stage_index
        if stage < 0:
            raise ValueError("stage must be >= 0")
        cached = self._fields.get(stage)
        if cached is None:
            cached = generate_stage_fields(self.rng_seed, stage, self.grid, self.bounds)
            self._fields[stage] = cached
        return cached

    def stage_end(self) -> float:
        """Wall clock time at which the current stage ends."""
        return (self.stage_index + 1) * self.delta_t


def advance_to_stage(env: EnvState, stage: int) -> None:
    """Warm the true-field cache up to a stage. Time is left untouched."""
    if stage < env.stage_index:
        raise ValueError(f"backward stage request: {stage} < {env.stage_index}")
    for s in range(env.stage_index, stage + 1):
        env.field(s)


def clone_env(env: EnvState) -> EnvState:
    """Independent copy; cached fields are shared (their arrays are frozen)."""
    dup = copy.copy(env)
    dup._fields = dict(env._fields)
    return dup


def dump_fields_csv(path, seed: int, stages: int, grid: GridSpec,
                    bounds: FieldBounds = FieldBounds()) -> None:
    """Write true fields for stages [0, stages) in the field dump format.

    Columns: stage,i,j,wind_speed,wind_dir,cur_speed,cur_dir with speeds to
    four decimals and directions to two.
    """
    if stages < 1:
        raise ValueError("need at least one stage")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("stage,i,j,wind_speed,wind_dir,cur_speed,cur_dir\n")
        for s in range(stages):
            f = generate_stage_fields(seed, s, grid, bounds)
            for i in range(grid.rows):
                for j in range(grid.cols):
                    fh.write(
                        f"{s},{i},{j},{f.wind_speed[i, j]:.4f},{f.wind_dir[i, j]:.2f},"
                        f"{f.cur_speed[i, j]:.4f},{f.cur_dir[i, j]:.2f}\n"
                    )
