"""Command line entry point.

    qdopt simulate [--config FILE] [--algorithm alg1|alg3|alg4] [--seed-list 0-19]
                   [--out DIR] [--trace] [--jobs N] [--set section.key=value ...]
    qdopt verify --in DIR
    qdopt table2 --in DIR

Exit codes: 0 success, 1 configuration error, 2 bound violation, 3 I/O error.
The log level is read from ``QDOPT_LOG_LEVEL`` (default WARNING).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .runner import MissingTrajectory, run_experiment, table2, table2_csv, verify_bounds

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("qdopt")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qdopt", description="Quantized distributed optimization simulator.")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run trials and write trajectories")
    sim.add_argument("--config", type=Path, help="INI file; built-in defaults when omitted")
    sim.add_argument("--algorithm", choices=("alg1", "alg3", "alg4"))
    sim.add_argument("--seed-list", help='trial seeds, e.g. "0-19" or "1,5,9"')
    sim.add_argument("--out", type=Path, help="output directory")
    sim.add_argument("--trace", action="store_true", help="also write per-round consensus traces")
    sim.add_argument("--jobs", type=int, help="worker processes for independent trials")
    sim.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE")

    ver = sub.add_parser("verify", help="re-check stored trajectories against the per-step bounds")
    ver.add_argument("--in", dest="in_dir", type=Path, required=True)
    ver.add_argument("--quiet", action="store_true", help="print only failing steps and the summary")

    tab = sub.add_parser("table2", help="steps and bits to reach error thresholds")
    tab.add_argument("--in", dest="in_dir", type=Path, required=True)
    tab.add_argument("--thresholds", help="comma separated, default 1e-2,1e-3,1e-5")
    return ap


def _simulate(args) -> int:
    overrides = list(args.overrides)
    if args.algorithm:
        overrides.append(f"experiment.algorithm={args.algorithm}")
    if args.seed_list:
        overrides.append(f"experiment.seeds={args.seed_list}")
    if args.out:
        overrides.append(f"experiment.out={args.out}")
    if args.trace:
        overrides.append("experiment.trace=true")
    if args.jobs:
        overrides.append(f"experiment.jobs={args.jobs}")
    cfg = load_config(args.config, overrides)
    written = run_experiment(cfg)
    print(f"wrote {len(written)} files to {cfg.out}")
    return EXIT_OK


def _verify(args) -> int:
    report = verify_bounds(args.in_dir)
    lines = report.lines()
    if args.quiet:
        lines = [ln for ln in lines[:-1] if "FAIL" in ln] + lines[-1:]
    print("\n".join(lines))
    return EXIT_OK if report.ok else EXIT_VIOLATION


def _table2(args) -> int:
    kwargs = {}
    if args.thresholds:
        try:
            kwargs["thresholds"] = tuple(float(t) for t in args.thresholds.split(","))
        except ValueError:
            raise ConfigError(f"bad threshold list {args.thresholds!r}") from None
    text = table2_csv(table2(args.in_dir, **kwargs))
    (Path(args.in_dir) / "table2.csv").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    level = os.environ.get("QDOPT_LOG_LEVEL", "WARNING").upper()
    if not isinstance(logging.getLevelName(level), int):
        level = "WARNING"
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handler = {"simulate": _simulate, "verify": _verify, "table2": _table2}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingTrajectory, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (KeyError, ValueError) as exc:
        if args.command == "simulate":
            raise
        # unreadable stored trajectory
        print(f"i/o error: malformed trajectory file ({exc!r})", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
