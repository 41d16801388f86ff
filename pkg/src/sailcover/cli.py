"""Command-line front end for single runs, batches, and inspection verbs.

Exit codes: 0 on success, 2 on a configuration problem, 3 when a single
requested mission aborts in a dead end. Batches report aborted members in
their summary instead of failing, since aborts are an expected outcome
class there.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .env import FieldBounds, GridSpec, dump_fields_csv
from .harness import (ConfigError, HarnessConfig, canonical_text, config_digest,
                      load_config, parse_method, parse_seeds, run_batch,
                      run_dir, run_experiment, summary_text)
from .mission import STATUS_ABORTED
from .polar import default_polar, load_polar_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORTED = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sailcover",
        description="Coverage mission simulator and planner for a sailboat "
                    "on a grid ocean with stage-wise wind and current fields.")
    parser.add_argument("--config", metavar="PATH",
                        help="INI configuration file (defaults used when omitted)")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="execute one mission and persist its record")
    p_run.add_argument("--method", required=True,
                       help="base or mcts_k<N> (e.g. mcts_k1)")
    p_run.add_argument("--seed", type=int, required=True)
    p_run.add_argument("--out", metavar="DIR", help="override run.out_dir")
    p_run.add_argument("--emit-plots", action="store_true",
                       help="also write per-stage rasters and the field dump")

    p_batch = sub.add_parser("batch", help="run the methods x seeds cross product")
    p_batch.add_argument("--method", action="append", dest="methods",
                         metavar="NAME", help="restrict to this method "
                         "(repeatable; default: run.methods from config)")
    p_batch.add_argument("--seeds", metavar="A..B",
                         help="override run.seeds (range a..b or comma list)")
    p_batch.add_argument("--out", metavar="DIR", help="override run.out_dir")
    p_batch.add_argument("--jobs", type=int, help="parallel batch members")
    p_batch.add_argument("--emit-plots", action="store_true")

    p_fields = sub.add_parser("fields", help="dump generated true fields as CSV")
    p_fields.add_argument("--seed", type=int, required=True)
    p_fields.add_argument("--stages", type=int, default=1)
    p_fields.add_argument("--out", metavar="FILE", default="fields.csv")

    p_polar = sub.add_parser("polar-check",
                             help="print an interpolated polar slice")
    p_polar.add_argument("--tws", type=float, default=5.0,
                         help="true wind speed for the slice (m/s)")

    sub.add_parser("validate-config",
                   help="type-check the config and print its digest")
    return parser


def _config_with_overrides(args: argparse.Namespace) -> HarnessConfig:
    cfg = load_config(args.config)
    raw = {section: dict(keys) for section, keys in cfg.raw.items()}
    out = getattr(args, "out", None)
    if args.verb in ("run", "batch") and out:
        raw["run"]["out_dir"] = out
    if getattr(args, "seeds", None):
        parse_seeds(args.seeds)
        raw["run"]["seeds"] = args.seeds
    if getattr(args, "jobs", None):
        raw["run"]["jobs"] = str(args.jobs)
    if getattr(args, "emit_plots", False):
        raw["run"]["emit_plots"] = "true"
    if getattr(args, "methods", None):
        for name in args.methods:
            parse_method(name)
        raw["run"]["methods"] = ",".join(args.methods)
    return HarnessConfig(raw=raw)


def _cmd_run(cfg: HarnessConfig, args: argparse.Namespace) -> int:
    record = run_experiment(cfg, args.method, args.seed)
    out = run_dir(cfg, args.method, args.seed)
    print(f"{record.method} seed {record.seed}: {record.status}, "
          f"coverage {record.coverage_pct:.2f}%, finish {record.finish_time_s:.1f} s, "
          f"await {record.await_time_s:.1f} s, distance {record.distance_m:.1f} m")
    print(f"wrote {out}/")
    return EXIT_ABORTED if record.status == STATUS_ABORTED else EXIT_OK


def _cmd_batch(cfg: HarnessConfig, args: argparse.Namespace) -> int:
    summary = run_batch(cfg)
    sys.stdout.write(summary_text(summary))
    print(f"records under {cfg.out_dir}/{config_digest(cfg)}/")
    return EXIT_OK


def _cmd_fields(cfg: HarnessConfig, args: argparse.Namespace) -> int:
    dump_fields_csv(args.out, args.seed, args.stages, cfg.grid, cfg.bounds)
    print(f"wrote {args.out} ({args.stages} stage(s), seed {args.seed})")
    return EXIT_OK


def _cmd_polar_check(cfg: HarnessConfig, args: argparse.Namespace) -> int:
    path = cfg.raw["physics"]["polar"].strip()
    table = load_polar_csv(path) if path else default_polar()
    tws = args.tws
    print(f"boat speed (m/s) at true wind speed {tws:g} m/s:")
    for twa in range(40, 181, 10):
        print(f"  twa {twa:3d} deg -> {table.vpp(tws, float(twa)):.3f}")
    return EXIT_OK


def _cmd_validate(cfg: HarnessConfig, args: argparse.Namespace) -> int:
    sys.stdout.write(canonical_text(cfg))
    print(f"digest: {config_digest(cfg)}")
    return EXIT_OK


_COMMANDS = {
    "run": _cmd_run,
    "batch": _cmd_batch,
    "fields": _cmd_fields,
    "polar-check": _cmd_polar_check,
    "validate-config": _cmd_validate,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config_with_overrides(args)
        return _COMMANDS[args.verb](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
