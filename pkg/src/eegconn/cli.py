"""Command-line interface.

Subcommands: synth, connectivity, run, compare, report. Exit codes:
0 success, 1 usage/config error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, DataError, NumericError
from .plots import write_roc_csv, write_roc_svg
from .runconfig import DEFAULT_CONFIG, load_config, resolve_config
from .runner import (
    compare_runs,
    format_report,
    run_connectivity,
    run_experiment,
    run_synth,
)
from .synthgen import PRESET_NAMES


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="eegconn", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a synthetic cohort on disk")
    p_synth.add_argument("--preset", choices=PRESET_NAMES, default="ad_like")
    p_synth.add_argument("--subjects", type=int, default=None,
                         help="subjects per class (preset default if omitted)")
    p_synth.add_argument("--jitter", type=float, default=0.1)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True, help="output directory")

    for name, help_text in (
        ("connectivity", "export connectivity matrices for every subject"),
        ("run", "full experiment: features -> nested CV -> report"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="run-config JSON path")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--jobs", type=int, default=None, help="worker processes")
        p.add_argument("--out", default=None, help="override config out_dir")
        p.add_argument("--print-config", action="store_true",
                       help="print the default config and exit")

    p_cmp = sub.add_parser("compare", help="run two configs on one cohort, side by side")
    p_cmp.add_argument("--config-a", required=True)
    p_cmp.add_argument("--config-b", required=True)
    p_cmp.add_argument("--allow-seed-mismatch", action="store_true")
    p_cmp.add_argument("--jobs", type=int, default=None)
    p_cmp.add_argument("--out", default=None, help="override out_dir of both configs")

    p_rep = sub.add_parser("report", help="render a saved report.json")
    p_rep.add_argument("report", help="path to report.json")
    p_rep.add_argument("--plots", action="store_true",
                       help="re-emit roc.csv and roc.svg beside the report")
    return parser


def _load_with_overrides(path, seed, jobs, out) -> dict:
    if path is None:
        raise ConfigError("--config is required (or use --print-config)")
    cfg = load_config(path)
    if seed is not None:
        cfg["seed"] = seed
    if jobs is not None:
        cfg["jobs"] = jobs
    if out is not None:
        cfg["out_dir"] = out
    return resolve_config(cfg)


def _dispatch(args) -> int:
    if args.command == "synth":
        run_synth(args.preset, args.out, n_subjects=args.subjects,
                  seed=args.seed, jitter=args.jitter)
        return 0
    if args.command in ("connectivity", "run"):
        if args.print_config:
            print(json.dumps(DEFAULT_CONFIG, indent=2, sort_keys=True))
            return 0
        cfg = _load_with_overrides(args.config, args.seed, args.jobs, args.out)
        if args.command == "connectivity":
            run_connectivity(cfg)
        else:
            run_experiment(cfg)
        return 0
    if args.command == "compare":
        cfg_a = _load_with_overrides(args.config_a, None, args.jobs, args.out)
        cfg_b = _load_with_overrides(args.config_b, None, args.jobs, args.out)
        compare_runs(cfg_a, cfg_b, allow_seed_mismatch=args.allow_seed_mismatch)
        return 0
    if args.command == "report":
        try:
            with open(args.report) as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise DataError(f"cannot read report: {exc}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"{args.report}: invalid JSON ({exc})") from None
        print(format_report(doc))
        if args.plots:
            base = args.report.rsplit(".json", 1)[0]
            write_roc_csv(doc, base + "_roc.csv")
            write_roc_svg(doc, base + "_roc.svg")
            print(f"wrote {base}_roc.csv and {base}_roc.svg")
        return 0
    raise ConfigError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
