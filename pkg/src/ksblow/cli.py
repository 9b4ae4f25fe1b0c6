"""Command line entry point.

Exit codes: 0 all checks passed, 1 at least one check failed (or a run
crashed), 2 the configuration was rejected.  A detected blow-up is a
recorded outcome, not a failure.
"""
from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

from .config import ConfigError, parse_config
from .harness import load_record, report, run_scenario, sweep
from .presets import load_preset, preset_names, preset_text


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ksblow",
        description="radial chemotaxis blow-up runs and verification")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute one scenario config")
    run.add_argument("config", help="path to a YAML scenario file")
    run.add_argument("--out", default=None,
                     help="directory for record.json and series/")
    run.add_argument("--seed", type=int, default=None,
                     help="override the config seed")
    run.add_argument("--refine", type=int, default=None,
                     help="override the verify refinement level")
    run.add_argument("--threads", type=int, default=1,
                     help="accepted for symmetry; single runs are serial")

    sw = sub.add_parser("sweep", help="run the (m, q, mass) grid of a "
                        "ks scenario")
    sw.add_argument("config", help="path to a YAML scenario file with a "
                    "sweep section")
    sw.add_argument("--out", default=None, help="directory for table.csv "
                    "and per-cell records")
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--threads", type=int, default=1)

    ver = sub.add_parser("verify", help="run a named built-in preset")
    ver.add_argument("preset", nargs="?", default=None,
                     help="preset name; omit to list the available ones")
    ver.add_argument("--out", default=None)
    ver.add_argument("--seed", type=int, default=None)
    ver.add_argument("--refine", type=int, default=None)
    ver.add_argument("--threads", type=int, default=1)
    ver.add_argument("--show", action="store_true",
                     help="print the preset YAML and exit")

    rep = sub.add_parser("report", help="summarize stored run records")
    rep.add_argument("paths", nargs="+",
                     help="record.json files or directories holding one")
    rep.add_argument("--out", default=None,
                     help="directory for summary.txt and checks.csv")
    return ap


def _load_config_file(path: str, seed_override: Optional[int]):
    with open(path) as fh:
        text = fh.read()
    cfg = parse_config(text)
    if seed_override is not None:
        cfg.seed = seed_override
        cfg.data["seed"] = seed_override
    return cfg


def _print_record(rec) -> None:
    print(f"{rec.name} [{rec.scenario_type}] seed={rec.seed} "
          f"termination={rec.termination} "
          f"{'PASS' if rec.passed else 'FAIL'} "
          f"({rec.wallclock_s:.1f}s)")
    for check, entry in sorted(rec.reports.items()):
        mark = "pass" if entry.get("passed", True) else "FAIL"
        print(f"  {mark:4s} {check}")


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _load_config_file(args.config, args.seed)
            rec = run_scenario(cfg, out_dir=args.out,
                               refine_override=args.refine)
            _print_record(rec)
            return 0 if rec.passed else 1

        if args.command == "sweep":
            cfg = _load_config_file(args.config, args.seed)
            result = sweep(cfg, out_dir=args.out, threads=args.threads)
            header = " ".join(f"{c:>16s}" for c in result.columns)
            print(header)
            for row in result.rows:
                print(" ".join(f"{'' if v is None else v!s:>16s}"
                               for v in row))
            failed = any(row[-1] for row in result.rows)
            return 1 if failed else 0

        if args.command == "verify":
            if args.preset is None:
                print("available presets:")
                for name in preset_names():
                    print(f"  {name}")
                return 0
            if args.show:
                print(preset_text(args.preset))
                return 0
            ok = True
            for i, cfg in enumerate(load_preset(args.preset)):
                if args.seed is not None:
                    cfg.seed = args.seed
                    cfg.data["seed"] = args.seed
                out = (os.path.join(args.out, cfg.name)
                       if args.out else None)
                rec = run_scenario(cfg, out_dir=out,
                                   refine_override=args.refine)
                _print_record(rec)
                ok = ok and rec.passed
            return 0 if ok else 1

        if args.command == "report":
            text = report(args.paths, out_dir=args.out)
            print(text, end="")
            recs = [load_record(p) for p in args.paths]
            return 0 if all(r.passed for r in recs) else 1

    except ConfigError as exc:
        for line in exc.errors:
            print(f"config error: {line}", file=sys.stderr)
        return 2
    except KeyError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure of a run, not a config issue
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
