"""Experiment orchestration: config files, run records, batch summaries.

Configuration is INI text with five sections (grid, physics, planner,
forecast, run); every key has a default matching the reference setup and
unknown sections or keys fail fast. The resolved configuration is
serialized canonically and hashed, and all output lands under
out_dir/<digest>/<method>/<seed>/ so records from different
configurations can never mix. Records carry no wall-clock data: running
the same (config, method, seed) twice produces byte-identical files.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import json
import multiprocessing as mp
import os
import statistics
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

from .baseline import run_baseline
from .coverage import redundancy_percent, write_pgm
from .env import FieldBounds, GridSpec, dump_fields_csv
from .mission import MissionResult, curve_points, write_trace_csv
from .planner import PlannerConfig, run_mcts
from .polar import PolarTable, default_polar, load_polar_csv
from .scoring import ScoreParams


class ConfigError(ValueError):
    """Malformed configuration: unknown key, bad value, or bad method."""


DEFAULTS: dict[str, dict[str, str]] = {
    "grid": {
        "rows": "10",
        "cols": "10",
        "cell_size_m": "100.0",
        "pixel_size_m": "5.0",
        "d_obs_m": "72.0",
    },
    "physics": {
        "v_min": "0.2",
        "v_max": "5.0",
        "v_floor": "0.05",
        "no_go_deg": "40.0",
        "polar": "",
    },
    "planner": {
        "n_iter": "64",
        "rollout_workers": "96",
        "rollouts_per_worker": "3",
        "c_ucb": "2.5",
        "k_horizon": "1",
        "delta_t_s": "300.0",
        "eta": "0.96",
        "a_thres_m2": "3000.0",
        "alpha": "0.2",
        "beta": "0.2",
        "epsilon": "0.3",
        "p_min": "0.25",
        "p_max": "4.0",
        "max_stages": "120",
        "rollout_jobs": "1",
    },
    "forecast": {
        "eps_v": "0.05",
        "eps_theta_deg": "5.0",
    },
    "run": {
        "seeds": "40..47",
        "methods": "base,mcts_k0,mcts_k1",
        "out_dir": "out",
        "jobs": "1",
        "emit_plots": "false",
    },
}

_INT_KEYS = {
    ("grid", "rows"), ("grid", "cols"),
    ("planner", "n_iter"), ("planner", "rollout_workers"),
    ("planner", "rollouts_per_worker"), ("planner", "k_horizon"),
    ("planner", "max_stages"), ("planner", "rollout_jobs"),
    ("run", "jobs"),
}
_FLOAT_KEYS = {
    ("grid", "cell_size_m"), ("grid", "pixel_size_m"), ("grid", "d_obs_m"),
    ("physics", "v_min"), ("physics", "v_max"), ("physics", "v_floor"),
    ("physics", "no_go_deg"),
    ("planner", "c_ucb"), ("planner", "delta_t_s"), ("planner", "eta"),
    ("planner", "a_thres_m2"), ("planner", "alpha"), ("planner", "beta"),
    ("planner", "epsilon"), ("planner", "p_min"), ("planner", "p_max"),
    ("forecast", "eps_v"), ("forecast", "eps_theta_deg"),
}
_BOOL_KEYS = {("run", "emit_plots")}


@dataclass(frozen=True)
class HarnessConfig:
    """Fully resolved configuration; raw maps to typed values."""

    raw: dict[str, dict[str, str]]

    def _get(self, section: str, key: str) -> str:
        return self.raw[section][key]

    def value(self, section: str, key: str):
        text = self._get(section, key)
        if (section, key) in _INT_KEYS:
            try:
                return int(text)
            except ValueError as exc:
                raise ConfigError(f"{section}.{key} must be an integer: {text!r}") from exc
        if (section, key) in _FLOAT_KEYS:
            try:
                return float(text)
            except ValueError as exc:
                raise ConfigError(f"{section}.{key} must be a number: {text!r}") from exc
        if (section, key) in _BOOL_KEYS:
            low = text.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ConfigError(f"{section}.{key} must be a boolean: {text!r}")
        return text

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.value("grid", "rows"), self.value("grid", "cols"),
                        self.value("grid", "cell_size_m"))

    @property
    def bounds(self) -> FieldBounds:
        return FieldBounds(v_min=self.value("physics", "v_min"),
                           v_max=self.value("physics", "v_max"))

    @property
    def seeds(self) -> list[int]:
        return parse_seeds(self._get("run", "seeds"))

    @property
    def methods(self) -> list[str]:
        names = [m.strip() for m in self._get("run", "methods").split(",") if m.strip()]
        for name in names:
            parse_method(name)
        return names

    @property
    def out_dir(self) -> str:
        return self._get("run", "out_dir")

    def polar_table(self) -> PolarTable:
        path = self._get("physics", "polar").strip()
        if not path:
            return default_polar()
        return load_polar_csv(path)

    def planner_config(self, method: str, seed: int = 0) -> PlannerConfig:
        kind, k = parse_method(method)
        if kind == "base":
            k = 0  # the baseline consults no forecasts
        score = ScoreParams(
            alpha=self.value("planner", "alpha"),
            beta=self.value("planner", "beta"),
            epsilon=self.value("planner", "epsilon"),
            p_range=(self.value("planner", "p_min"), self.value("planner", "p_max")),
        )
        try:
            return PlannerConfig(
                n_iter=self.value("planner", "n_iter"),
                rollout_workers=self.value("planner", "rollout_workers"),
                rollouts_per_worker=self.value("planner", "rollouts_per_worker"),
                c_ucb=self.value("planner", "c_ucb"),
                k_horizon=k,
                delta_t=self.value("planner", "delta_t_s"),
                eta=self.value("planner", "eta"),
                a_thres_m2=self.value("planner", "a_thres_m2"),
                seed=seed,
                jobs=self.value("planner", "rollout_jobs"),
                max_stages=self.value("planner", "max_stages"),
                pixel_size_m=self.value("grid", "pixel_size_m"),
                d_obs_m=self.value("grid", "d_obs_m"),
                v_floor=self.value("physics", "v_floor"),
                no_go_deg=self.value("physics", "no_go_deg"),
                eps_v=self.value("forecast", "eps_v"),
                eps_theta_deg=self.value("forecast", "eps_theta_deg"),
                bounds=self.bounds,
                score=score,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def parse_method(name: str) -> tuple[str, int]:
    """'base' or 'mcts_k<N>' -> (kind, forecast horizon)."""
    if name == "base":
        return ("base", 0)
    if name.startswith("mcts_k"):
        suffix = name[len("mcts_k"):]
        if suffix.isdigit():
            return ("mcts", int(suffix))
    raise ConfigError(f"unknown method {name!r} (want base or mcts_k<N>)")


def parse_seeds(text: str) -> list[int]:
    """'40..47' (inclusive range) or comma-separated integers."""
    text = text.strip()
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        try:
            lo, hi = int(lo_s), int(hi_s)
        except ValueError as exc:
            raise ConfigError(f"bad seed range: {text!r}") from exc
        if hi < lo:
            raise ConfigError(f"empty seed range: {text!r}")
        return list(range(lo, hi + 1))
    try:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad seed list: {text!r}") from exc
    if not seeds:
        raise ConfigError("no seeds given")
    return seeds


def load_config(path: Optional[str] = None) -> HarnessConfig:
    """Defaults, overlaid with the INI file at path when given."""
    raw = {section: dict(keys) for section, keys in DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None)
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section in parser.sections():
            if section not in raw:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in parser.items(section):
                if key not in raw[section]:
                    raise ConfigError(f"unknown config key {section}.{key}")
                raw[section][key] = value
    cfg = HarnessConfig(raw=raw)
    for section, keys in raw.items():
        for key in keys:
            cfg.value(section, key)  # type-checks every entry up front
    cfg.seeds
    cfg.methods
    return cfg


def canonical_text(cfg: HarnessConfig) -> str:
    """Deterministic serialization of the outcome-determining sections.

    The run section (seed set, method list, output paths, scheduling) is
    orchestration, not physics: it never changes what a given (method,
    seed) mission does, so it stays out of the digest.
    """
    lines = []
    for section in sorted(cfg.raw):
        if section == "run":
            continue
        for key in sorted(cfg.raw[section]):
            lines.append(f"{section}.{key} = {cfg.value(section, key)!r}")
    return "\n".join(lines) + "\n"


def config_digest(cfg: HarnessConfig) -> str:
    return hashlib.sha256(canonical_text(cfg).encode("utf-8")).hexdigest()[:12]


# ---------------------------------------------------------------------------
# single runs
# ---------------------------------------------------------------------------

@dataclass
class RunRecord:
    """Persisted summary of one mission; reproducible byte for byte."""

    method: str
    seed: int
    status: str
    coverage_pct: float
    finish_time_s: float
    await_time_s: float
    redundancy_pct: float
    distance_m: float
    stage_snapshots: list[tuple[int, float, float]] = field(default_factory=list)
    trace_path: str = "trace.csv"
    config_digest: str = ""

    def to_json(self) -> str:
        payload = asdict(self)
        payload["stage_snapshots"] = [list(s) for s in self.stage_snapshots]
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @staticmethod
    def from_json(text: str) -> "RunRecord":
        payload = json.loads(text)
        payload["stage_snapshots"] = [
            (int(s), float(t), float(c)) for s, t, c in payload["stage_snapshots"]
        ]
        return RunRecord(**payload)


def run_dir(cfg: HarnessConfig, method: str, seed: int) -> str:
    return os.path.join(cfg.out_dir, config_digest(cfg), method, str(seed))


def _execute(cfg: HarnessConfig, method: str, seed: int,
             emit_plots: bool) -> MissionResult:
    kind, _ = parse_method(method)
    pconfig = cfg.planner_config(method, seed)
    polar = cfg.polar_table()
    if kind == "base":
        return run_baseline(seed, pconfig, cfg.grid, polar,
                            store_stage_counts=emit_plots)
    return run_mcts(seed, pconfig, cfg.grid, polar, method=method,
                    store_stage_counts=emit_plots)


def write_curve_csv(path, points: Sequence[tuple[float, float]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_s", "coverage_pct"])
        for t, cov in points:
            writer.writerow([f"{t:.6f}", f"{cov:.6f}"])


def run_experiment(cfg: HarnessConfig, method: str, seed: int,
                   emit_plots: Optional[bool] = None) -> RunRecord:
    """Execute one mission and persist its record, trace, curve, and rasters."""
    if emit_plots is None:
        emit_plots = bool(cfg.value("run", "emit_plots"))
    result = _execute(cfg, method, seed, emit_plots)

    out = run_dir(cfg, method, seed)
    os.makedirs(out, exist_ok=True)
    pixels_per_cell = int(round(cfg.value("grid", "cell_size_m")
                                / cfg.value("grid", "pixel_size_m")))
    assert result.final_counts is not None
    record = RunRecord(
        method=method,
        seed=seed,
        status=result.status,
        coverage_pct=result.coverage_pct,
        finish_time_s=result.finish_time_s,
        await_time_s=result.await_time_s,
        redundancy_pct=redundancy_percent(result.final_counts, pixels_per_cell,
                                          cfg.value("planner", "alpha")),
        distance_m=result.distance_m,
        stage_snapshots=list(result.stage_snapshots),
        trace_path="trace.csv",
        config_digest=config_digest(cfg),
    )
    with open(os.path.join(out, "record.json"), "w", encoding="utf-8") as fh:
        fh.write(record.to_json())
    write_trace_csv(os.path.join(out, "trace.csv"), result.trace)
    write_curve_csv(os.path.join(out, "curve.csv"), curve_points(result))
    write_pgm(os.path.join(out, "cov_final.pgm"), result.final_counts)
    if emit_plots:
        for stage, counts in sorted(result.stage_counts.items()):
            write_pgm(os.path.join(out, f"cov_stage{stage}.pgm"), counts)
        stages = max((s for s, _, _ in result.stage_snapshots), default=0) + 1
        dump_fields_csv(os.path.join(out, "fields.csv"), seed, stages,
                        cfg.grid, cfg.bounds)
    return record


# ---------------------------------------------------------------------------
# batches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MethodStats:
    """Aggregates over one method's records; means skip non-complete runs."""

    n_total: int
    n_complete: int
    n_aborted: int
    n_timeout: int
    mean_finish_s: Optional[float]
    std_finish_s: Optional[float]
    median_finish_s: Optional[float]
    mean_redundancy_pct: Optional[float]
    std_redundancy_pct: Optional[float]
    mean_distance_m: Optional[float]
    std_distance_m: Optional[float]


@dataclass
class BatchSummary:
    records: list[RunRecord]
    stats: dict[str, MethodStats]


def _stats_for(records: list[RunRecord]) -> MethodStats:
    complete = [r for r in records if r.status == "complete"]

    def agg(values: list[float]) -> tuple[Optional[float], Optional[float]]:
        if not values:
            return (None, None)
        mean = sum(values) / len(values)
        var = sum((v - mean) ** 2 for v in values) / len(values)
        return (mean, var ** 0.5)

    mean_f, std_f = agg([r.finish_time_s for r in complete])
    mean_r, std_r = agg([r.redundancy_pct for r in complete])
    mean_d, std_d = agg([r.distance_m for r in complete])
    return MethodStats(
        n_total=len(records),
        n_complete=len(complete),
        n_aborted=sum(1 for r in records if r.status == "aborted"),
        n_timeout=sum(1 for r in records if r.status == "timeout"),
        mean_finish_s=mean_f,
        std_finish_s=std_f,
        median_finish_s=(statistics.median(r.finish_time_s for r in complete)
                         if complete else None),
        mean_redundancy_pct=mean_r,
        std_redundancy_pct=std_r,
        mean_distance_m=mean_d,
        std_distance_m=std_d,
    )


def _batch_worker(args: tuple[dict, str, int, bool]) -> RunRecord:
    raw, method, seed, emit_plots = args
    return run_experiment(HarnessConfig(raw=raw), method, seed, emit_plots)


def _fmt(value: Optional[float], width: int = 10) -> str:
    return f"{value:{width}.1f}" if value is not None else " " * (width - 3) + "n/a"


def summary_text(summary: BatchSummary) -> str:
    lines = [
        f"{'method':10s} {'done':>4s} {'abrt':>4s} {'tout':>4s} "
        f"{'finish_mean_s':>13s} {'finish_std_s':>12s} {'finish_med_s':>12s} "
        f"{'redund_mean_%':>13s} {'dist_mean_m':>11s}",
    ]
    for method, st in summary.stats.items():
        lines.append(
            f"{method:10s} {st.n_complete:4d} {st.n_aborted:4d} {st.n_timeout:4d} "
            f"{_fmt(st.mean_finish_s, 13)} {_fmt(st.std_finish_s, 12)} "
            f"{_fmt(st.median_finish_s, 12)} {_fmt(st.mean_redundancy_pct, 13)} "
            f"{_fmt(st.mean_distance_m, 11)}")
    return "\n".join(lines) + "\n"


def write_summary_csv(path, summary: BatchSummary) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "method", "n_total", "n_complete", "n_aborted", "n_timeout",
            "mean_finish_s", "std_finish_s", "median_finish_s",
            "mean_redundancy_pct", "std_redundancy_pct",
            "mean_distance_m", "std_distance_m",
        ])
        for method, st in summary.stats.items():
            writer.writerow([
                method, st.n_total, st.n_complete, st.n_aborted, st.n_timeout,
                st.mean_finish_s, st.std_finish_s, st.median_finish_s,
                st.mean_redundancy_pct, st.std_redundancy_pct,
                st.mean_distance_m, st.std_distance_m,
            ])


def emit_plot_data(cfg: HarnessConfig, records: list[RunRecord]) -> str:
    """Copy each run's curve under plots/ and write the curve manifest."""
    digests = {r.config_digest for r in records}
    if len(digests) != 1:
        raise ValueError(f"records span {len(digests)} config digests, want 1")
    plots = os.path.join(cfg.out_dir, next(iter(digests)), "plots")
    os.makedirs(plots, exist_ok=True)
    manifest = os.path.join(plots, "manifest.csv")
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "seed", "status", "curve"])
        for rec in records:
            name = f"curve_{rec.method}_{rec.seed}.csv"
            src = os.path.join(run_dir(cfg, rec.method, rec.seed), "curve.csv")
            with open(src, encoding="utf-8") as curve_fh:
                body = curve_fh.read()
            with open(os.path.join(plots, name), "w", encoding="utf-8") as out_fh:
                out_fh.write(body)
            writer.writerow([rec.method, rec.seed, rec.status, name])
    return manifest


def run_batch(cfg: HarnessConfig, methods: Optional[Sequence[str]] = None,
              seeds: Optional[Sequence[int]] = None,
              jobs: Optional[int] = None,
              emit_plots: Optional[bool] = None) -> BatchSummary:
    """Cross product of methods and seeds; batch members are independent."""
    methods = list(methods if methods is not None else cfg.methods)
    seeds = list(seeds if seeds is not None else cfg.seeds)
    if jobs is None:
        jobs = cfg.value("run", "jobs")
    if emit_plots is None:
        emit_plots = bool(cfg.value("run", "emit_plots"))
    for method in methods:
        parse_method(method)
    tasks = [(cfg.raw, method, seed, emit_plots)
             for method in methods for seed in seeds]
    if jobs <= 1:
        records = [_batch_worker(task) for task in tasks]
    else:
        ctx = mp.get_context("fork")
        with ctx.Pool(jobs) as pool:
            records = pool.map(_batch_worker, tasks)

    by_method: dict[str, list[RunRecord]] = {m: [] for m in methods}
    for rec in records:
        by_method[rec.method].append(rec)
    summary = BatchSummary(
        records=records,
        stats={m: _stats_for(rs) for m, rs in by_method.items()},
    )
    base = os.path.join(cfg.out_dir, config_digest(cfg))
    os.makedirs(base, exist_ok=True)
    with open(os.path.join(base, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary_text(summary))
    write_summary_csv(os.path.join(base, "summary.csv"), summary)
    emit_plot_data(cfg, records)
    return summary
