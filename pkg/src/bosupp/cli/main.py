"""``bosupp`` command line: ``run``, ``figure`` and ``selftest``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ConfigError
from ..fock import FockSpace
from .config import load_config
from .figures import FIGURES, figure_configs
from .runner import run_series, write_series
from .selftest import run_selftest

EXIT_OK, EXIT_CONFIG, EXIT_TOLERANCE, EXIT_LEAKAGE = 0, 2, 3, 4


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, help="Fock cutoff (overrides the config)")
    common.add_argument("--guard", type=int, help="guard band width (overrides the config)")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes per sweep")
    p = argparse.ArgumentParser(prog="bosupp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="run every series of a config file")
    run.add_argument("config", type=Path)
    run.add_argument("--out", type=Path, default=Path("."), help="output directory")
    fig = sub.add_parser("figure", parents=[common], help="regenerate a bundled figure's data")
    fig.add_argument("name", choices=FIGURES)
    fig.add_argument("--out", type=Path, default=Path("."), help="output directory")
    sub.add_parser("selftest", parents=[common], help="run the built-in invariant checks")
    return p


def _report(results, err):
    code = EXIT_OK
    for res, csv_path, _ in results:
        print(f"wrote {csv_path} ({len(res.rows)} rows)")
        for row in res.aborted:
            print(f"  row {res.config.sweep_param}={row.sweep_value!r} aborted: {row.error}", file=err)
        for msg in res.tolerance_failures:
            print(f"  tolerance failure: {msg}", file=err)
        if res.tolerance_failures:
            code = EXIT_TOLERANCE
        elif res.aborted and code == EXIT_OK:
            code = EXIT_LEAKAGE
    return code


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = {"dim": args.dim, "guard": args.guard, "seed": args.seed}
    if args.command == "selftest":
        space = FockSpace(args.dim or 40, 8 if args.guard is None else args.guard)
        return EXIT_OK if run_selftest(space) else EXIT_TOLERANCE
    try:
        if args.command == "run":
            configs = [c.with_overrides(**overrides) for c in load_config(args.config)]
            meta = {"config_file": str(args.config)}
        else:
            configs = figure_configs(args.name, **overrides)
            meta = {"figure": args.name}
        results = []
        for cfg in configs:
            res = run_series(cfg, jobs=args.jobs)
            results.append((res, *write_series(res, args.out, meta)))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return _report(results, sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
