"""Command-line entry point.

Verbs: ``run`` (one scenario config), ``matrix`` (axis sweep of a
scenario), ``metrics`` (compare two run CSVs), ``timing`` (aggregate
timing files into a relative runtime table).

Exit codes: 0 success, 2 configuration error, 3 numerical abort,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from gridmf import benchmark as bm
from gridmf import harness as hs
from gridmf.simcore import ConfigurationError, SimulationAbort

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _cmd_run(args) -> int:
    config = hs.ScenarioConfig.from_file(args.config)
    if args.output:
        config.output = args.output
    result = hs.run_scenario(config)
    print(f"test {config.test_id} [{config.selection.mode.value}] "
          f"{result.times.size} samples, "
          f"integration {result.wall_seconds:.3f} s")
    if config.output:
        print(f"wrote {config.output}")
    return EXIT_OK


def _cmd_matrix(args) -> int:
    config = hs.ScenarioConfig.from_file(args.config)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for selection in bm.axis_variants(args.axis):
        variant = getattr(selection, bm.AXES[args.axis][0])
        result = bm.run_test(
            selection, config.test_id, step_h=config.step_h,
            duration=config.duration, signals=config.signals,
        )
        stem = f"test{config.test_id}_{args.axis}_{variant}"
        hs.write_csv(result, out_dir / f"{stem}.csv")
        with open(out_dir / f"{stem}.timing.json", "w", newline="\n") as fh:
            json.dump({"label": variant,
                       "wall_seconds": result.wall_seconds}, fh)
            fh.write("\n")
        print(f"{stem}: {result.wall_seconds:.3f} s")
    return EXIT_OK


def _cmd_metrics(args) -> int:
    run = hs.read_csv(args.run_csv)
    ref = hs.read_csv(args.ref_csv)
    report = hs.compute_metrics(run, ref)
    json.dump(report.to_dict(), sys.stdout, indent=2)
    print()
    return EXIT_OK


def _cmd_timing(args) -> int:
    report = hs.timing_report_from_dir(args.directory)
    json.dump(report, sys.stdout, indent=2)
    print()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridmf",
        description="multi-fidelity power system simulation harness",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one scenario config")
    p_run.add_argument("config")
    p_run.add_argument("--output", help="override the CSV output path")
    p_run.set_defaults(func=_cmd_run)

    p_mat = sub.add_parser("matrix", help="axis sweep of one scenario")
    p_mat.add_argument("config")
    p_mat.add_argument("--axis", required=True,
                       choices=sorted(bm.AXES))
    p_mat.add_argument("--output-dir", default=".")
    p_mat.set_defaults(func=_cmd_matrix)

    p_met = sub.add_parser("metrics", help="compare two run CSVs")
    p_met.add_argument("run_csv")
    p_met.add_argument("ref_csv")
    p_met.set_defaults(func=_cmd_metrics)

    p_tim = sub.add_parser("timing", help="aggregate timing files")
    p_tim.add_argument("directory")
    p_tim.set_defaults(func=_cmd_timing)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
