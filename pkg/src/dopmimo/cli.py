"""Command-line entry point.

    dopmimo run <spec.json> --out <csv> [--threads N] [--seed S]
    dopmimo preset list
    dopmimo preset show <figure-id>

Exit codes: 0 success, 1 validation/usage error, 2 numerical error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .exceptions import NumericalError, SpecValidationError
from .harness import emit_csv, load_spec, preset_names, preset_spec, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dopmimo")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment spec and write CSV")
    run_p.add_argument("spec", help="path to a JSON experiment spec")
    run_p.add_argument("--out", required=True, help="output CSV path")
    run_p.add_argument("--threads", type=int, default=1, help="worker processes")
    run_p.add_argument("--seed", type=int, default=None, help="override the spec seed")

    preset_p = sub.add_parser("preset", help="list or show built-in experiment specs")
    preset_sub = preset_p.add_subparsers(dest="preset_command", required=True)
    preset_sub.add_parser("list", help="list preset figure ids")
    show_p = preset_sub.add_parser("show", help="print one preset spec as JSON")
    show_p.add_argument("figure_id")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1

    if args.command == "preset":
        if args.preset_command == "list":
            docs = {fid: preset_spec(fid) for fid in preset_names()}
            for fid, doc in docs.items():
                print(f"{fid:8s} {doc.get('description', '')}")
            return 0
        try:
            print(json.dumps(preset_spec(args.figure_id), indent=2))
            return 0
        except KeyError as e:
            print(e.args[0], file=sys.stderr)
            return 1

    # run
    try:
        spec = load_spec(args.spec)
    except (OSError, json.JSONDecodeError, SpecValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if args.seed is not None:
        from dataclasses import replace
        spec = replace(spec, seed=args.seed)
    try:
        rows = run_experiment(spec, threads=args.threads)
        emit_csv(rows, args.out)
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
